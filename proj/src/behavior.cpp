#include "comfortsim/behavior.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace comfortsim {

namespace {

constexpr std::array<StateLabel, 6> kStates{StateLabel::idle,
                                            StateLabel::interact,
                                            StateLabel::engage_call,
                                            StateLabel::suspend_critical,
                                            StateLabel::suspend_saturation,
                                            StateLabel::disengage};

constexpr std::array<Verb, 6> kVerbs{Verb::straighten_up, Verb::lean_down,     Verb::look,
                                     Verb::move_box_toward, Verb::move_box_away, Verb::vocalize};

}  // namespace

std::string_view to_string(StateLabel s) {
    switch (s) {
        case StateLabel::idle: return "idle";
        case StateLabel::interact: return "interact";
        case StateLabel::engage_call: return "engage_call";
        case StateLabel::suspend_critical: return "suspend_critical";
        case StateLabel::suspend_saturation: return "suspend_saturation";
        case StateLabel::disengage: return "disengage";
    }
    return "idle";
}

std::optional<StateLabel> parse_state(std::string_view s) {
    for (StateLabel l : kStates) {
        if (to_string(l) == s) return l;
    }
    return std::nullopt;
}

bool is_suspend(StateLabel s) {
    return s == StateLabel::suspend_critical || s == StateLabel::suspend_saturation;
}

bool is_transitional(StateLabel s) {
    return s == StateLabel::engage_call || s == StateLabel::disengage;
}

std::string_view to_string(Verb v) {
    switch (v) {
        case Verb::straighten_up: return "straighten_up";
        case Verb::lean_down: return "lean_down";
        case Verb::look: return "look";
        case Verb::move_box_toward: return "move_box_toward";
        case Verb::move_box_away: return "move_box_away";
        case Verb::vocalize: return "vocalize";
    }
    return "look";
}

ActionCommand ActionCommand::plain(Verb v) {
    if (v == Verb::look || v == Verb::vocalize) {
        throw std::invalid_argument("look and vocalize need an argument");
    }
    return {v, {}};
}

ActionCommand ActionCommand::look_face() { return {Verb::look, "face"}; }

ActionCommand ActionCommand::look_toy(std::string_view color) {
    return {Verb::look, "toy:" + std::string(color)};
}

ActionCommand ActionCommand::vocalize(std::string_view utterance) {
    if (utterance.empty()) throw std::invalid_argument("vocalize needs an utterance label");
    return {Verb::vocalize, std::string(utterance)};
}

std::string ActionCommand::encode() const {
    std::string out(to_string(verb));
    if (!argument.empty()) {
        out += ':';
        out += argument;
    }
    return out;
}

ActionCommand ActionCommand::decode(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view head = text.substr(0, colon);
    for (Verb v : kVerbs) {
        if (to_string(v) != head) continue;
        ActionCommand a{v, colon == std::string_view::npos ? std::string{}
                                                           : std::string(text.substr(colon + 1))};
        if ((v == Verb::look || v == Verb::vocalize) == a.argument.empty()) break;
        return a;
    }
    throw std::invalid_argument("bad action command: " + std::string(text));
}

std::string_view to_string(SessionMode m) { return m == SessionMode::adaptive ? "adaptive" : "fixed"; }

std::optional<SessionMode> parse_mode(std::string_view s) {
    if (s == "adaptive" || s == "A") return SessionMode::adaptive;
    if (s == "fixed" || s == "F") return SessionMode::fixed;
    return std::nullopt;
}

AttentionDecision choose_attention(const StimulusFrame& stimulus, const Palette& palette,
                                   std::int64_t face_only_ticks, std::int64_t cue_period_ticks,
                                   Rng& rng) {
    AttentionDecision d;
    if (!stimulus.toys_visible.empty()) {
        // No geometry: the first sighting stands in for the nearest toy.
        d.gaze = "toy:" + stimulus.toys_visible.front();
        return d;
    }
    if (!stimulus.face_present) return d;
    d.gaze = "face";
    if (palette.empty() || cue_period_ticks <= 0 || face_only_ticks < cue_period_ticks ||
        face_only_ticks % cue_period_ticks != 0) {
        return d;
    }
    const std::string& color = palette[rng.below(palette.size())];
    d.cue.push_back(ActionCommand::look_toy(color));
    d.cue.push_back(ActionCommand::look_face());
    if (rng.bernoulli(0.5)) {
        d.cue.push_back(ActionCommand::vocalize(color));
    } else {
        d.cue.push_back(ActionCommand::plain(Verb::move_box_toward));
    }
    return d;
}

ComfortState suspension_tick(const RobotState& state, double entry_comfort,
                             const ComfortState& comfort, const SocialParams& params,
                             std::int64_t tick) {
    if (state.label == StateLabel::suspend_critical) {
        const double span = static_cast<double>(params.suspension_ticks());
        const double k = std::clamp(static_cast<double>(tick - state.entered_tick), 0.0, span);
        return advance_to(comfort, std::lerp(entry_comfort, params.c_init, k / span), params);
    }
    if (state.label == StateLabel::suspend_saturation || state.label == StateLabel::disengage) {
        return advance_to(comfort, comfort.beta * comfort.c, params);
    }
    throw std::logic_error("suspension_tick outside a suspend state");
}

ComfortState session_mode_guard(SessionMode mode, const ThresholdEvent& event,
                                const ComfortState& comfort, const SocialParams& params) {
    if (mode == SessionMode::fixed) return comfort;
    return event.kind == ThresholdKind::critical ? adapt_critical(comfort, params)
                                                 : adapt_saturation(comfort, params);
}

BehaviorMachine::BehaviorMachine(const SocialParams& params, Palette palette, std::uint64_t seed,
                                 BehaviorTiming timing)
    : params_(params),
      palette_(std::move(palette)),
      rng_(seed),
      call_display_ticks_(std::max<std::int64_t>(1, params.ticks(timing.call_display_s))),
      disengage_ticks_(std::max<std::int64_t>(1, params.ticks(timing.disengage_s))),
      cue_period_ticks_(params.ticks(timing.cue_period_s)) {}

bool BehaviorMachine::suspended() const {
    return is_suspend(state_.label) || state_.label == StateLabel::disengage;
}

void BehaviorMachine::enter(StateLabel label, std::int64_t tick,
                            std::optional<std::int64_t> deadline) {
    state_ = RobotState{label, tick, deadline};
    if (label != StateLabel::interact) face_only_ticks_ = 0;
}

void BehaviorMachine::attend(const StimulusFrame& stimulus, std::vector<ActionCommand>& actions) {
    if (stimulus.face_present && stimulus.toys_visible.empty()) {
        ++face_only_ticks_;
    } else {
        face_only_ticks_ = 0;
    }
    AttentionDecision d =
        choose_attention(stimulus, palette_, face_only_ticks_, cue_period_ticks_, rng_);
    if (!d.cue.empty()) {
        actions.insert(actions.end(), d.cue.begin(), d.cue.end());
        gaze_ = "face";
        return;
    }
    if (d.gaze && d.gaze != gaze_) {
        actions.push_back(ActionCommand{Verb::look, *d.gaze});
    }
    if (d.gaze) gaze_ = d.gaze;
}

BehaviorStep BehaviorMachine::transition(const StimulusFrame& stimulus,
                                         const std::optional<ThresholdEvent>& threshold,
                                         std::int64_t tick) {
    BehaviorStep out;
    auto finish = [&]() {
        out.state = state_;
        return out;
    };

    if (threshold) {
        if (suspended() || window_open()) {
            throw std::logic_error("threshold event at tick " + std::to_string(tick) +
                                   " while suspended or a call is pending");
        }
        if (threshold->kind == ThresholdKind::critical) {
            enter(StateLabel::engage_call, tick, tick + call_display_ticks_);
            window_deadline_ = tick + params_.response_window_ticks();
            out.actions = {ActionCommand::plain(Verb::straighten_up), ActionCommand::look_face(),
                           ActionCommand::vocalize(kEncouraging)};
            gaze_ = "face";
        } else {
            enter(StateLabel::disengage, tick, tick + disengage_ticks_);
            std::string color = !stimulus.toys_visible.empty() ? stimulus.toys_visible.front()
                                : !palette_.empty()             ? palette_.front()
                                                                : std::string("box");
            out.actions = {ActionCommand::plain(Verb::lean_down), ActionCommand::look_toy(color),
                           ActionCommand::plain(Verb::move_box_away)};
            gaze_ = "toy:" + color;
        }
        return finish();
    }

    const bool any = stimulus.any_stimulus();
    switch (state_.label) {
        case StateLabel::suspend_critical:
        case StateLabel::suspend_saturation:
            if (tick >= *state_.deadline_tick) {
                enter(StateLabel::idle, tick, std::nullopt);
                gaze_.reset();
            }
            return finish();
        case StateLabel::disengage:
            if (tick >= *state_.deadline_tick) {
                enter(StateLabel::suspend_saturation, tick, tick + params_.suspension_ticks());
            }
            return finish();
        default:
            break;
    }

    if (window_open()) {
        if (any) {
            window_deadline_.reset();
            out.call_resolved = true;
            enter(StateLabel::interact, tick, std::nullopt);
            last_stimulus_tick_ = tick;
            attend(stimulus, out.actions);
        } else if (tick >= *window_deadline_) {
            window_deadline_.reset();
            out.call_resolved = false;
            enter(StateLabel::suspend_critical, tick, tick + params_.suspension_ticks());
            gaze_.reset();
        } else if (state_.label == StateLabel::engage_call && tick >= *state_.deadline_tick) {
            enter(StateLabel::idle, tick, std::nullopt);
        }
        return finish();
    }

    if (state_.label == StateLabel::idle) {
        if (any) {
            enter(StateLabel::interact, tick, std::nullopt);
            last_stimulus_tick_ = tick;
            attend(stimulus, out.actions);
        }
        return finish();
    }

    // interact (engage_call without a window cannot occur)
    if (any) {
        last_stimulus_tick_ = tick;
        attend(stimulus, out.actions);
    } else if (tick - last_stimulus_tick_ >= params_.idle_hold_ticks()) {
        enter(StateLabel::idle, tick, std::nullopt);
        gaze_.reset();
    }
    return finish();
}

std::optional<bool> BehaviorMachine::close_session() {
    if (!window_open()) return std::nullopt;
    window_deadline_.reset();
    return false;
}

}  // namespace comfortsim
