#include "comfortsim/comfort.hpp"

#include <algorithm>
#include <cmath>

namespace comfortsim {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw InvalidInput(std::string("invalid social parameters: ") + what);
}

bool valid_stimulus(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace

std::string_view to_string(ThresholdKind kind) {
    return kind == ThresholdKind::critical ? "critical" : "saturation";
}

std::string_view to_string(CriticalStepMode mode) {
    return mode == CriticalStepMode::gap_shrink ? "gap_shrink" : "additive";
}

SocialParams SocialParams::defaults() {
    SocialParams p;
    const Thresholds t = calibrate_thresholds(p, 90.0, 90.0);
    p.c_critical = t.c_critical;
    p.c_saturation = t.c_saturation;
    return p;
}

void SocialParams::validate() const {
    require(beta0 > 0.0 && beta0 < 1.0, "beta0 must lie in (0,1)");
    require(tau0 > 0.0, "tau0 must be > 0");
    require(tau_step > 0.0, "tau_step must be > 0");
    require(beta_gap_shrink > 0.0 && beta_gap_shrink < 1.0, "beta_gap_shrink must lie in (0,1)");
    require(additive_beta_step > 0.0, "additive_beta_step must be > 0");
    require(additive_beta_cap > 0.0 && additive_beta_cap < 1.0,
            "additive_beta_cap must lie in (0,1)");
    require(c_max > 0.0, "c_max must be > 0");
    require(std::abs(c_init - 0.5 * c_max) <= 1e-12 * c_max, "c_init must equal 0.5 * c_max");
    require(c_critical > 0.0, "c_critical must be > 0");
    require(c_critical < c_init, "c_critical must be < c_init");
    require(c_init < c_saturation, "c_saturation must be > c_init");
    require(c_saturation <= c_max, "c_saturation must be <= c_max");
    require(optimal_band >= 0.0, "optimal_band must be >= 0");
    require(tick_hz > 0, "tick_hz must be > 0");
    require(suspension_s > 0.0, "suspension_s must be > 0");
    require(response_window_s > 0.0, "response_window_s must be > 0");
    require(idle_hold_s >= 0.0, "idle_hold_s must be >= 0");
}

std::int64_t SocialParams::ticks(double seconds) const {
    return std::llround(seconds * static_cast<double>(tick_hz));
}

ComfortState ComfortState::initial(const SocialParams& params) {
    ComfortState s;
    s.c = params.c_init;
    s.beta = params.beta0;
    s.tau = params.tau0;
    return s;
}

ComfortState step_comfort(const ComfortState& state, double visual, double tactile,
                          const SocialParams& params) {
    if (!valid_stimulus(visual) || !valid_stimulus(tactile)) {
        throw InvalidInput("stimulus outside [0,1]: F=" + std::to_string(visual) +
                           " T=" + std::to_string(tactile));
    }
    const double c = visual > 0.0 || tactile > 0.0
                         ? (visual + tactile + state.c * state.tau) / (state.tau + 0.1)
                         : state.beta * state.c;
    return advance_to(state, c, params);
}

ComfortState advance_to(const ComfortState& state, double c, const SocialParams& params) {
    ComfortState next = state;
    next.c = std::clamp(c, kComfortFloor, params.c_max);
    next.tick = state.tick + 1;
    if (next.c > params.c_critical) next.critical_armed = true;
    if (next.c < params.c_saturation) next.saturation_armed = true;
    return next;
}

std::optional<ThresholdEvent> check_thresholds(const ComfortState& state,
                                               const SocialParams& params, bool blocked) {
    if (blocked) return std::nullopt;
    if (state.critical_armed && state.c <= params.c_critical) {
        return ThresholdEvent{ThresholdKind::critical, state.tick, std::nullopt};
    }
    if (state.saturation_armed && state.c >= params.c_saturation) {
        return ThresholdEvent{ThresholdKind::saturation, state.tick, std::nullopt};
    }
    return std::nullopt;
}

ComfortState disarm(const ComfortState& state, ThresholdKind kind) {
    ComfortState next = state;
    if (kind == ThresholdKind::critical) {
        next.critical_armed = false;
    } else {
        next.saturation_armed = false;
    }
    return next;
}

ComfortState adapt_critical(const ComfortState& state, const SocialParams& params) {
    ComfortState next = state;
    if (params.critical_step_mode == CriticalStepMode::gap_shrink) {
        // The gap underflows after a few dozen shrinks; stay on the largest double below one.
        next.beta = std::min(1.0 - (1.0 - state.beta) * params.beta_gap_shrink, std::nextafter(1.0, 0.0));
    } else {
        next.beta = std::min(state.beta + params.additive_beta_step, params.additive_beta_cap);
    }
    ++next.n_critical;
    return next;
}

ComfortState adapt_saturation(const ComfortState& state, const SocialParams& params) {
    ComfortState next = state;
    next.tau = state.tau + params.tau_step;
    ++next.n_saturation;
    return next;
}

std::optional<double> time_to_threshold(const ComfortState& state, const SocialParams& params,
                                        ThresholdKind kind, double stimulus_sum) {
    const double hz = static_cast<double>(params.tick_hz);
    const double c0 = state.c;

    if (kind == ThresholdKind::critical) {
        if (c0 <= params.c_critical) return 0.0;
        // c0 * beta^n <= c_critical
        const auto reached = [&](double n) { return c0 * std::pow(state.beta, n) <= params.c_critical; };
        double n = std::ceil(std::log(params.c_critical / c0) / std::log(state.beta));
        while (!reached(n)) n += 1.0;
        while (n > 1.0 && reached(n - 1.0)) n -= 1.0;
        return n / hz;
    }

    if (!(stimulus_sum > 0.0 && stimulus_sum <= 2.0)) {
        throw InvalidInput("stimulus sum must lie in (0,2]");
    }
    if (c0 >= params.c_saturation) return 0.0;
    const double fixed_point = std::min(stimulus_sum / 0.1, params.c_max);
    if (fixed_point <= params.c_saturation) return std::nullopt;
    // fixed_point - (fixed_point - c0) * b^n >= c_saturation
    const double b = state.tau / (state.tau + 0.1);
    const double gap0 = stimulus_sum / 0.1 - c0;
    const auto reached = [&](double n) {
        return stimulus_sum / 0.1 - gap0 * std::pow(b, n) >= params.c_saturation;
    };
    double n = std::ceil(std::log((stimulus_sum / 0.1 - params.c_saturation) / gap0) / std::log(b));
    while (!reached(n)) n += 1.0;
    while (n > 1.0 && reached(n - 1.0)) n -= 1.0;
    return n / hz;
}

Thresholds calibrate_thresholds(const SocialParams& params, double t_critical_s,
                                double t_saturation_s) {
    if (!(t_critical_s > 0.0) || !(t_saturation_s > 0.0)) {
        throw InvalidInput("calibration targets must be > 0 seconds");
    }
    const double hz = static_cast<double>(params.tick_hz);
    const double growth = params.tau0 / (params.tau0 + 0.1);
    Thresholds t{};
    t.c_critical = params.c_init * std::pow(params.beta0, t_critical_s * hz);
    t.c_saturation =
        params.c_max - (params.c_max - params.c_init) * std::pow(growth, t_saturation_s * hz);
    if (!(t.c_critical > 0.0 && t.c_critical < params.c_max) ||
        !(t.c_saturation > 0.0 && t.c_saturation < params.c_max)) {
        throw InvalidInput("calibration targets give thresholds outside (0, c_max)");
    }
    return t;
}

}  // namespace comfortsim
