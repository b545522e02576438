#pragma once

// One interaction session: perception -> comfort -> thresholds/adaptation ->
// behaviour, advanced one tick at a time. Scripted caretakers, log replay and
// the live gateway all drive the same engine.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "comfortsim/behavior.hpp"
#include "comfortsim/comfort.hpp"
#include "comfortsim/perception.hpp"

namespace comfortsim {

struct SessionConfig {
    SessionMode mode = SessionMode::adaptive;
    double phase_s = 240.0;
    int n_phases = 3;
    int dual_task_phase = 2;
    std::uint64_t seed = 1;

    void validate() const;
    bool operator==(const SessionConfig&) const = default;
};

// Everything needed to reproduce a session bit for bit.
struct SessionSetup {
    SocialParams params = SocialParams::defaults();
    FusionWeights weights;
    Palette palette = default_palette();
    BehaviorTiming timing;
    SessionConfig config;
    std::string source = "scripted";  // profile name, "live", ...

    void validate() const;
    std::int64_t phase_ticks() const { return params.ticks(config.phase_s); }
    std::int64_t total_ticks() const { return phase_ticks() * config.n_phases; }
    int phase_of(std::int64_t tick) const;
    char session_label() const { return config.mode == SessionMode::adaptive ? 'A' : 'F'; }
};

struct TickRecord {
    std::int64_t tick = 0;
    std::int64_t t_ms = 0;
    char session = 'A';
    int phase = 1;
    StateLabel state = StateLabel::idle;
    double comfort = 0.0;
    double beta = 0.0;
    double tau = 0.0;
    double F = 0.0;
    double T = 0.0;
    bool face_present = false;
    bool toy_visible = false;
    bool touch_active = false;
    Expression expression = Expression::neutral;
    std::optional<ThresholdKind> event;
    std::optional<bool> call;  // resolution of the pending call on this tick
    PerceptionEvents percept;
    std::vector<ActionCommand> actions;
};

class SessionEngine {
public:
    explicit SessionEngine(SessionSetup setup);

    const SessionSetup& setup() const { return setup_; }
    std::int64_t next_tick() const { return next_tick_; }
    bool done() const { return next_tick_ >= total_ticks_; }

    // Runs one tick on the given raw events. The last tick also resolves a
    // call still pending. Throws std::logic_error past the end of the session.
    const TickRecord& advance(const PerceptionEvents& events);

    const TickRecord& last() const { return last_; }
    const ComfortState& comfort() const { return comfort_; }
    const BehaviorMachine& behavior() const { return behavior_; }
    // Threshold events so far, responded filled in once resolved.
    const std::vector<ThresholdEvent>& events() const { return events_; }
    const std::vector<std::string>& last_rejections() const { return rejected_; }

private:
    SessionSetup setup_;
    std::int64_t total_ticks_;
    PerceptionFuser fuser_;
    BehaviorMachine behavior_;
    ComfortState comfort_;
    double suspension_entry_comfort_ = 0.0;
    std::int64_t next_tick_ = 0;
    std::vector<ThresholdEvent> events_;
    std::optional<std::size_t> pending_call_;
    std::vector<std::string> rejected_;
    TickRecord last_;
};

}  // namespace comfortsim
