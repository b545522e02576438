#include "comfortsim/session.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace comfortsim {

void SessionConfig::validate() const {
    if (!(phase_s > 0.0)) throw InvalidInput("phase_s must be > 0");
    if (n_phases < 1) throw InvalidInput("n_phases must be >= 1");
    if (dual_task_phase < 1 || dual_task_phase > n_phases) {
        throw InvalidInput("dual_task_phase must name one of the phases");
    }
}

void SessionSetup::validate() const {
    params.validate();
    weights.validate();
    config.validate();
    if (phase_ticks() < 1) throw InvalidInput("phase shorter than one tick");
}

int SessionSetup::phase_of(std::int64_t tick) const {
    const std::int64_t phase = tick / phase_ticks() + 1;
    return static_cast<int>(std::min<std::int64_t>(phase, config.n_phases));
}

SessionEngine::SessionEngine(SessionSetup setup)
    : setup_((setup.validate(), std::move(setup))),
      total_ticks_(setup_.total_ticks()),
      fuser_(setup_.weights, setup_.palette, setup_.params.tick_hz),
      behavior_(setup_.params, setup_.palette, Rng::mix(setup_.config.seed, 0x0b0b), setup_.timing),
      comfort_(ComfortState::initial(setup_.params)) {}

const TickRecord& SessionEngine::advance(const PerceptionEvents& events) {
    if (done()) throw std::logic_error("session already finished");
    const SocialParams& params = setup_.params;
    const std::int64_t tick = next_tick_;

    rejected_.clear();
    const StimulusFrame frame = fuser_.fuse(tick, events, &rejected_);

    const RobotState before = behavior_.state();
    if (behavior_.suspended()) {
        comfort_ = suspension_tick(before, suspension_entry_comfort_, comfort_, params, tick);
    } else {
        comfort_ = step_comfort(comfort_, frame.F, frame.T, params);
    }

    std::optional<ThresholdEvent> event =
        check_thresholds(comfort_, params, behavior_.suspended() || behavior_.window_open());
    if (event) {
        event->tick = tick;
        comfort_ = disarm(comfort_, event->kind);
        comfort_ = session_mode_guard(setup_.config.mode, *event, comfort_, params);
        events_.push_back(*event);
        if (event->kind == ThresholdKind::critical) pending_call_ = events_.size() - 1;
    }

    BehaviorStep step = behavior_.transition(frame, event, tick);
    if (is_suspend(step.state.label) && step.state.entered_tick == tick) {
        suspension_entry_comfort_ = comfort_.c;
    }
    std::optional<bool> resolved = step.call_resolved;
    if (tick + 1 == total_ticks_ && !resolved) resolved = behavior_.close_session();
    if (resolved) {
        if (!pending_call_) throw std::logic_error("call resolved with no pending event");
        events_[*pending_call_].responded = *resolved;
        pending_call_.reset();
    }

    TickRecord r;
    r.tick = tick;
    r.t_ms = tick * 1000 / params.tick_hz;
    r.session = setup_.session_label();
    r.phase = setup_.phase_of(tick);
    r.state = step.state.label;
    r.comfort = comfort_.c;
    r.beta = comfort_.beta;
    r.tau = comfort_.tau;
    r.F = frame.F;
    r.T = frame.T;
    r.face_present = frame.face_present;
    r.toy_visible = !frame.toys_visible.empty();
    r.touch_active = frame.any_touch();
    r.expression = frame.expression;
    if (event) r.event = event->kind;
    r.call = resolved;
    r.percept = events;
    r.actions = std::move(step.actions);
    last_ = std::move(r);

    ++next_tick_;
    return last_;
}

}  // namespace comfortsim
