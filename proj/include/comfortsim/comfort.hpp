#pragma once

// Comfort dynamics of the social motivation architecture: the growth/decay
// recurrence, threshold detection with re-arming, the two adaptation
// dimensions (decay factor and growth constant) and threshold calibration.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace comfortsim {

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class CriticalStepMode {
    gap_shrink,  // (1 - beta) *= beta_gap_shrink
    additive,    // beta += additive_beta_step, clamped at additive_beta_cap
};

enum class ThresholdKind { critical, saturation };

std::string_view to_string(ThresholdKind kind);
std::string_view to_string(CriticalStepMode mode);

struct SocialParams {
    double beta0 = 0.998;
    double tau0 = 500.0;
    double tau_step = 500.0;
    double beta_gap_shrink = 0.44721359549995793;  // 5^(-1/2)
    CriticalStepMode critical_step_mode = CriticalStepMode::gap_shrink;
    double additive_beta_step = 0.005;
    double additive_beta_cap = 0.9999;
    double c_max = 20.0;
    double c_init = 10.0;
    double c_critical = 0.0;    // filled by defaults()
    double c_saturation = 0.0;  // filled by defaults()
    double optimal_band = 1.0;
    int tick_hz = 10;
    double suspension_s = 20.0;
    double response_window_s = 10.0;
    double idle_hold_s = 2.0;

    // Defaults with thresholds calibrated to 90 s for both kinds.
    static SocialParams defaults();

    // Throws InvalidInput naming the first violated constraint.
    void validate() const;

    std::int64_t ticks(double seconds) const;
    std::int64_t suspension_ticks() const { return ticks(suspension_s); }
    std::int64_t response_window_ticks() const { return ticks(response_window_s); }
    std::int64_t idle_hold_ticks() const { return ticks(idle_hold_s); }

    bool operator==(const SocialParams&) const = default;
};

struct ComfortState {
    double c = 0.0;
    double beta = 0.0;
    double tau = 0.0;
    int n_critical = 0;
    int n_saturation = 0;
    std::int64_t tick = 0;
    // A kind fires once per crossing; it re-arms when comfort moves back
    // across its threshold.
    bool critical_armed = true;
    bool saturation_armed = true;

    static ComfortState initial(const SocialParams& params);

    bool operator==(const ComfortState&) const = default;
};

struct ThresholdEvent {
    ThresholdKind kind = ThresholdKind::critical;
    std::int64_t tick = 0;
    std::optional<bool> responded;  // critical only, set when the call resolves

    bool operator==(const ThresholdEvent&) const = default;
};

inline constexpr double kComfortFloor = 1e-9;

// One tick of the comfort recurrence. Growth when either stimulus is present,
// decay otherwise. Also refreshes the re-arm flags.
ComfortState step_comfort(const ComfortState& state, double visual, double tactile,
                          const SocialParams& params);

// Next-tick state holding comfort `c` (clamped), with re-arm flags refreshed.
ComfortState advance_to(const ComfortState& state, double c, const SocialParams& params);

// Pure check. `blocked` covers both suspension and an open response window.
std::optional<ThresholdEvent> check_thresholds(const ComfortState& state,
                                               const SocialParams& params, bool blocked);

// Marks the kind as fired so it cannot trigger again before re-arming.
ComfortState disarm(const ComfortState& state, ThresholdKind kind);

ComfortState adapt_critical(const ComfortState& state, const SocialParams& params);
ComfortState adapt_saturation(const ComfortState& state, const SocialParams& params);

// Seconds until the threshold is reached from `state`, assuming zero stimuli
// (critical) or a constant stimulus sum (saturation, default F = T = 1).
// nullopt when the trajectory never reaches the threshold.
std::optional<double> time_to_threshold(const ComfortState& state, const SocialParams& params,
                                        ThresholdKind kind, double stimulus_sum = 2.0);

struct Thresholds {
    double c_critical;
    double c_saturation;
};

Thresholds calibrate_thresholds(const SocialParams& params, double t_critical_s,
                                double t_saturation_s);

}  // namespace comfortsim
