#include "comfortsim/perception.hpp"

#include <algorithm>
#include <cmath>

#include "comfortsim/comfort.hpp"

namespace comfortsim {

AUSet AUSet::from_bits(unsigned bits) {
    AUSet a;
    a.au6_cheek_raiser = (bits & 1u) != 0;
    a.au12_lip_corner = (bits & 2u) != 0;
    a.au4_brow_lowerer = (bits & 4u) != 0;
    a.au9_nose_wrinkler = (bits & 8u) != 0;
    a.au10_upper_lip_raiser = (bits & 16u) != 0;
    return a;
}

unsigned AUSet::bits() const {
    return (au6_cheek_raiser ? 1u : 0u) | (au12_lip_corner ? 2u : 0u) |
           (au4_brow_lowerer ? 4u : 0u) | (au9_nose_wrinkler ? 8u : 0u) |
           (au10_upper_lip_raiser ? 16u : 0u);
}

std::string_view to_string(Expression e) {
    switch (e) {
        case Expression::smiling: return "smiling";
        case Expression::contemplating: return "contemplating";
        case Expression::frowning: return "frowning";
        case Expression::neutral: break;
    }
    return "neutral";
}

std::string_view to_string(Region r) {
    switch (r) {
        case Region::left_arm: return "left_arm";
        case Region::right_arm: return "right_arm";
        case Region::torso: break;
    }
    return "torso";
}

std::optional<Expression> parse_expression(std::string_view s) {
    for (Expression e : {Expression::neutral, Expression::smiling, Expression::contemplating,
                         Expression::frowning}) {
        if (to_string(e) == s) return e;
    }
    return std::nullopt;
}

std::optional<Region> parse_region(std::string_view s) {
    for (Region r : kRegions) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

AUSet canonical_aus(Expression e) {
    AUSet a;
    switch (e) {
        case Expression::smiling:
            a.au6_cheek_raiser = a.au12_lip_corner = true;
            break;
        case Expression::contemplating:
            a.au4_brow_lowerer = true;
            break;
        case Expression::frowning:
            a.au4_brow_lowerer = a.au9_nose_wrinkler = a.au10_upper_lip_raiser = true;
            break;
        case Expression::neutral:
            break;
    }
    return a;
}

Palette default_palette() { return {"red", "green", "blue", "yellow"}; }

void FusionWeights::validate() const {
    for (double w : {w_face, w_smile, w_toy}) {
        if (!(w >= 0.0 && w <= 1.0)) throw InvalidInput("fusion weight outside [0,1]");
    }
    if (!(steadiness_bonus >= 1.0) || !std::isfinite(steadiness_bonus)) {
        throw InvalidInput("steadiness bonus must be >= 1");
    }
    if (!(steadiness_s >= 0.0)) throw InvalidInput("steadiness_s must be >= 0");
}

Expression classify_expression(const AUSet& aus) {
    const bool smile = aus.au12_lip_corner && aus.au6_cheek_raiser;
    if (smile) return Expression::smiling;
    if (aus.au4_brow_lowerer && aus.au9_nose_wrinkler && aus.au10_upper_lip_raiser) {
        return Expression::frowning;
    }
    if (aus.au4_brow_lowerer && !aus.au9_nose_wrinkler && !aus.au10_upper_lip_raiser) {
        return Expression::contemplating;
    }
    return Expression::neutral;
}

bool filter_touch(const TouchReading& reading) {
    return reading.taxel_count > 5 && reading.avg_pressure > 12.0;
}

bool toy_event(std::string_view color, const Palette& palette) {
    return std::find(palette.begin(), palette.end(), color) != palette.end();
}

StimulusFrame fuse_stimuli(bool face_present, Expression expression,
                           const std::vector<std::string>& toys_visible,
                           const std::array<bool, 3>& validated_touches,
                           std::int64_t streak_ticks, const FusionWeights& weights, int tick_hz) {
    weights.validate();
    const double steadiness =
        static_cast<double>(streak_ticks) >= weights.steadiness_s * tick_hz ? weights.steadiness_bonus
                                                                           : 1.0;
    StimulusFrame f;
    f.face_present = face_present;
    f.expression = face_present ? expression : Expression::neutral;
    f.toys_visible = toys_visible;
    f.touched = validated_touches;
    f.streak_ticks = streak_ticks;

    double visual = 0.0;
    if (face_present) visual += weights.w_face;
    if (face_present && expression == Expression::smiling) visual += weights.w_smile;
    if (!toys_visible.empty()) visual += weights.w_toy;
    f.F = std::min(1.0, visual * steadiness);

    const int touched = static_cast<int>(std::count(validated_touches.begin(), validated_touches.end(), true));
    f.T = std::min(1.0, (touched / 3.0) * steadiness);
    return f;
}

PerceptionFuser::PerceptionFuser(FusionWeights weights, Palette palette, int tick_hz)
    : weights_(weights), palette_(std::move(palette)), tick_hz_(tick_hz) {
    weights_.validate();
}

StimulusFrame PerceptionFuser::fuse(std::int64_t tick, const PerceptionEvents& events,
                                    std::vector<std::string>* rejected) {
    std::vector<std::string> toys;
    for (const auto& color : events.toys) {
        if (!toy_event(color, palette_)) {
            if (rejected) rejected->push_back("toy:" + color);
            continue;
        }
        if (std::find(toys.begin(), toys.end(), color) == toys.end()) toys.push_back(color);
    }
    std::array<bool, 3> touched{};
    for (const auto& reading : events.touches) {
        if (filter_touch(reading)) {
            touched[static_cast<std::size_t>(reading.region)] = true;
        } else if (rejected) {
            rejected->push_back("touch:" + std::string(to_string(reading.region)));
        }
    }
    const bool face = events.face.has_value();
    const Expression expression = face ? classify_expression(*events.face) : Expression::neutral;
    const bool any = face || !toys.empty() || touched[0] || touched[1] || touched[2];
    streak_ = any ? streak_ + 1 : 0;

    StimulusFrame frame = fuse_stimuli(face, expression, toys, touched, streak_, weights_, tick_hz_);
    frame.tick = tick;
    return frame;
}

}  // namespace comfortsim
