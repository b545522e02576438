#pragma once

// Scripted caretakers and the two-session experiment protocol.
//
// Each modality (face, smile, toy, touch per region) follows a two-state
// Markov chain whose stationary "on" probability is the configured
// probability and whose mean "on" episode lasts `episode_s`. A caretaker that
// sees the robot straighten up answers the call with probability
// `respond_to_call` after `respond_latency_s`, giving full face and torso
// contact for `respond_duration_s`.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "comfortsim/metrics.hpp"
#include "comfortsim/perception.hpp"
#include "comfortsim/rng.hpp"
#include "comfortsim/session.hpp"
#include "comfortsim/session_log.hpp"

namespace comfortsim {

struct PhasePolicy {
    double face_prob = 0.0;
    double smile_prob = 0.0;        // while the face is in view
    double contemplate_prob = 0.0;  // per tick, non-smiling face shows AU4 only
    double toy_prob = 0.0;
    std::array<double, 3> touch_prob{};  // indexed by Region
    double phantom_touch_prob = 0.0;     // sub-threshold contact, filtered out downstream
    double episode_s = 5.0;
    double engaged_for_s = -1.0;  // < 0: the whole phase
    double respond_to_call = 0.0;
    double respond_latency_s = 1.0;
    double respond_duration_s = 10.0;

    void validate() const;
};

struct CaretakerProfile {
    std::string name;
    std::vector<PhasePolicy> phases;          // exactly 3
    std::vector<PhasePolicy> second_session;  // empty: same as first session
    std::uint64_t seed = 0;

    // session_index 0 = first session of an experiment.
    const PhasePolicy& policy(int phase, int session_index) const;
    void validate() const;
};

// attentive, sparse, distracted, intense
std::vector<CaretakerProfile> bundled_profiles();
// Bundled profiles plus "silent" (never provides any stimulus).
std::optional<CaretakerProfile> profile_by_name(const std::string& name);
CaretakerProfile silent_profile();

nlohmann::json profile_to_json(const CaretakerProfile& profile);
CaretakerProfile profile_from_json(const nlohmann::json& j);

class ScriptedCaretaker {
public:
    ScriptedCaretaker(CaretakerProfile profile, Palette palette, int tick_hz, std::uint64_t seed,
                      int session_index = 0);

    // Perception events produced this tick. `visible_actions` are the robot's
    // actions from the previous tick.
    PerceptionEvents policy_tick(int phase, std::int64_t tick_in_phase, std::int64_t tick,
                                 const std::vector<ActionCommand>& visible_actions);

private:
    struct Chain {
        bool on = false;
        bool step(Rng& rng, double p, double episode_ticks);
    };

    CaretakerProfile profile_;
    Palette palette_;
    int tick_hz_;
    int session_index_;
    Rng rng_;
    Chain face_, smile_, toy_;
    std::array<Chain, 3> touch_;
    std::string toy_color_;
    std::optional<std::int64_t> response_start_;
    std::int64_t response_end_ = -1;
};

// Runs a complete scripted session. Each record is also streamed to `writer`
// when given. Throws std::logic_error if a pipeline invariant trips.
SessionLog run_session(const SessionSetup& setup, const CaretakerProfile& profile,
                       int session_index = 0, LogWriter* writer = nullptr);

struct ExperimentConfig {
    OrderGroup order = OrderGroup::FA;
    SessionSetup base;  // mode and seed are set per session
    CaretakerProfile profile;
    std::uint64_t seed = 1;

    SessionSetup session_setup(int session_index) const;
};

struct ExperimentResult {
    SessionLog first;
    SessionLog second;
    SessionMetrics first_metrics;
    SessionMetrics second_metrics;
    std::string summary_csv;

    const SessionMetrics& adaptive() const { return first_metrics.session == 'A' ? first_metrics : second_metrics; }
    const SessionMetrics& fixed() const { return first_metrics.session == 'F' ? first_metrics : second_metrics; }
};

ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace comfortsim
