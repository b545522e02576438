#pragma once

// Symbolic perception: facial action units to expression labels, tactile
// filtering, toy colour validation and fusion into the per-tick (F, T) pair.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace comfortsim {

struct AUSet {
    bool au6_cheek_raiser = false;
    bool au12_lip_corner = false;
    bool au4_brow_lowerer = false;
    bool au9_nose_wrinkler = false;
    bool au10_upper_lip_raiser = false;

    // Bit i set for the i-th field in declaration order (au6, au12, au4, au9, au10).
    static AUSet from_bits(unsigned bits);
    unsigned bits() const;

    bool operator==(const AUSet&) const = default;
};

enum class Expression { neutral, smiling, contemplating, frowning };

enum class Region : std::uint8_t { torso = 0, left_arm = 1, right_arm = 2 };
inline constexpr std::array<Region, 3> kRegions{Region::torso, Region::left_arm, Region::right_arm};

std::string_view to_string(Expression e);
std::string_view to_string(Region r);
std::optional<Expression> parse_expression(std::string_view s);
std::optional<Region> parse_region(std::string_view s);

// Canonical AU flags for an expression label (inverse of classification).
AUSet canonical_aus(Expression e);

struct TouchReading {
    Region region = Region::torso;
    int taxel_count = 0;
    double avg_pressure = 0.0;

    bool operator==(const TouchReading&) const = default;
};

// Raw events for one tick, before validation.
struct PerceptionEvents {
    std::optional<AUSet> face;  // nullopt: no face in view
    std::vector<std::string> toys;
    std::vector<TouchReading> touches;

    bool empty() const { return !face && toys.empty() && touches.empty(); }
    bool operator==(const PerceptionEvents&) const = default;
};

using Palette = std::vector<std::string>;
Palette default_palette();

struct FusionWeights {
    double w_face = 0.5;
    double w_smile = 0.3;
    double w_toy = 0.2;
    double steadiness_bonus = 1.25;
    double steadiness_s = 3.0;

    void validate() const;
    bool operator==(const FusionWeights&) const = default;
};

struct StimulusFrame {
    std::int64_t tick = 0;
    double F = 0.0;
    double T = 0.0;
    bool face_present = false;
    Expression expression = Expression::neutral;
    std::vector<std::string> toys_visible;
    std::array<bool, 3> touched{};  // indexed by Region
    std::int64_t streak_ticks = 0;

    bool any_touch() const { return touched[0] || touched[1] || touched[2]; }
    bool any_stimulus() const { return F > 0.0 || T > 0.0; }
};

Expression classify_expression(const AUSet& aus);

bool filter_touch(const TouchReading& reading);

bool toy_event(std::string_view color, const Palette& palette);

// Streak is the number of consecutive ticks with any stimulus, this tick
// included. Throws InvalidInput for weights outside [0,1].
StimulusFrame fuse_stimuli(bool face_present, Expression expression,
                           const std::vector<std::string>& toys_visible,
                           const std::array<bool, 3>& validated_touches,
                           std::int64_t streak_ticks, const FusionWeights& weights, int tick_hz);

// Validates raw events and fuses them. Tracks the stimulation streak across
// ticks; rejected events are reported through `rejected`.
class PerceptionFuser {
public:
    PerceptionFuser(FusionWeights weights, Palette palette, int tick_hz);

    StimulusFrame fuse(std::int64_t tick, const PerceptionEvents& events,
                       std::vector<std::string>* rejected = nullptr);

    std::int64_t streak() const { return streak_; }

private:
    FusionWeights weights_;
    Palette palette_;
    int tick_hz_;
    std::int64_t streak_ = 0;
};

}  // namespace comfortsim
