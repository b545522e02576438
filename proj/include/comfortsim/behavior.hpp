#pragma once

// Behavioural state machine: idle / interact / suspend plus the transitional
// engage-call and disengage states. Emits abstract action commands and owns
// the response window that decides whether a call was answered.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "comfortsim/comfort.hpp"
#include "comfortsim/perception.hpp"
#include "comfortsim/rng.hpp"

namespace comfortsim {

enum class StateLabel {
    idle,
    interact,
    engage_call,
    suspend_critical,
    suspend_saturation,
    disengage,
};

std::string_view to_string(StateLabel s);
std::optional<StateLabel> parse_state(std::string_view s);

bool is_suspend(StateLabel s);
bool is_transitional(StateLabel s);

struct RobotState {
    StateLabel label = StateLabel::idle;
    std::int64_t entered_tick = 0;
    std::optional<std::int64_t> deadline_tick;

    bool operator==(const RobotState&) const = default;
};

enum class Verb { straighten_up, lean_down, look, move_box_toward, move_box_away, vocalize };

std::string_view to_string(Verb v);

// `argument` is "face" or "toy:<color>" for look, an utterance label for
// vocalize, and empty for the other verbs.
struct ActionCommand {
    Verb verb = Verb::look;
    std::string argument;

    static ActionCommand plain(Verb v);
    static ActionCommand look_face();
    static ActionCommand look_toy(std::string_view color);
    static ActionCommand vocalize(std::string_view utterance);

    // "verb" or "verb:argument"
    std::string encode() const;
    static ActionCommand decode(std::string_view text);

    bool operator==(const ActionCommand&) const = default;
};

inline constexpr std::string_view kEncouraging = "encouraging";
inline constexpr std::string_view kProtesting = "protesting";

enum class SessionMode { adaptive, fixed };

std::string_view to_string(SessionMode m);
std::optional<SessionMode> parse_mode(std::string_view s);

struct BehaviorTiming {
    double call_display_s = 3.0;  // cap on the engage_call state itself
    double disengage_s = 0.1;     // one tick at 10 Hz
    double cue_period_s = 10.0;   // face-only interaction before a gaze cue
};

struct AttentionDecision {
    std::optional<std::string> gaze;  // "face" or "toy:<color>"
    std::vector<ActionCommand> cue;   // gaze-cue sequence when due
};

// Gaze target for the interact state. `face_only_ticks` is the running length
// of face-without-toy interaction including this tick.
AttentionDecision choose_attention(const StimulusFrame& stimulus, const Palette& palette,
                                   std::int64_t face_only_ticks, std::int64_t cue_period_ticks,
                                   Rng& rng);

// Comfort update while suspended. Critical suspension ramps linearly from the
// comfort at entry to c_init over the suspension; saturation suspension and the
// disengage tick decay by beta. External stimuli never enter.
ComfortState suspension_tick(const RobotState& state, double entry_comfort,
                             const ComfortState& comfort, const SocialParams& params,
                             std::int64_t tick);

// Applies the adaptation for `event` in adaptive mode; fixed mode returns the
// state untouched.
ComfortState session_mode_guard(SessionMode mode, const ThresholdEvent& event,
                                const ComfortState& comfort, const SocialParams& params);

struct BehaviorStep {
    RobotState state;
    std::vector<ActionCommand> actions;
    std::optional<bool> call_resolved;  // responded (true) / ignored (false)
};

class BehaviorMachine {
public:
    BehaviorMachine(const SocialParams& params, Palette palette, std::uint64_t seed,
                    BehaviorTiming timing = {});

    const RobotState& state() const { return state_; }
    bool suspended() const;
    bool window_open() const { return window_deadline_.has_value(); }
    std::optional<std::int64_t> window_deadline() const { return window_deadline_; }

    // Advances one tick. Throws std::logic_error on a threshold event while
    // suspended or while a call is pending.
    BehaviorStep transition(const StimulusFrame& stimulus,
                            const std::optional<ThresholdEvent>& threshold, std::int64_t tick);

    // Resolves a call still pending when the session ends (as ignored).
    std::optional<bool> close_session();

private:
    void enter(StateLabel label, std::int64_t tick, std::optional<std::int64_t> deadline);
    void attend(const StimulusFrame& stimulus, std::vector<ActionCommand>& actions);

    SocialParams params_;
    Palette palette_;
    Rng rng_;
    std::int64_t call_display_ticks_;
    std::int64_t disengage_ticks_;
    std::int64_t cue_period_ticks_;

    RobotState state_;
    std::optional<std::int64_t> window_deadline_;
    std::optional<std::string> gaze_;
    std::int64_t last_stimulus_tick_ = 0;
    std::int64_t face_only_ticks_ = 0;
};

}  // namespace comfortsim
