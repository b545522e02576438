#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "comfortsim/session_log.hpp"

namespace comfortsim {

// Percent of the phase's ticks. The three major states plus the
// transitional remainder (engage_call, disengage) sum to 100.
struct PhaseDistribution {
    std::int64_t ticks = 0;
    double idle = 0.0;
    double interact = 0.0;
    double suspend = 0.0;
    double transitional = 0.0;
    double face = 0.0;
    double toy = 0.0;
    double touch = 0.0;
};

struct SessionMetrics {
    char session = 'A';
    int hits_critical = 0;
    int hits_saturation = 0;
    int responded = 0;
    int ignored = 0;
    std::vector<std::int64_t> critical_ticks;
    std::vector<std::int64_t> saturation_ticks;
    std::vector<PhaseDistribution> phases;  // index 0 = phase 1
};

// Throws LogError for an incomplete log, listing the missing tick ranges.
SessionMetrics compute_metrics(const SessionLog& log);

struct ReplayResult {
    bool identical = false;
    std::optional<std::int64_t> first_divergent_tick;
    std::string diagnostic;
    std::string regenerated;
};

// Re-drives the pipeline from the recorded perception events and compares the
// regenerated log byte for byte. `params`, when given, must match the header
// (LogError otherwise).
ReplayResult replay(std::string_view log_text, const SocialParams* params = nullptr);

enum class OrderGroup { AF, FA };
std::string_view to_string(OrderGroup g);
std::optional<OrderGroup> parse_order(std::string_view s);

// Comma-separated table of per-column means (columns A, F, first, second,
// all) of hit counts and per-phase state/modality percentages.
// Throws std::invalid_argument on empty input.
std::string export_summary(const std::vector<SessionMetrics>& sessions, OrderGroup group);

}  // namespace comfortsim
