#pragma once

// Flat `key = value` architecture configuration and the JSON form of a full
// session setup (used in log headers).

#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "comfortsim/perception.hpp"
#include "comfortsim/session.hpp"

namespace comfortsim {

// Shortest text that parses back to exactly `x`.
std::string format_exact(double x);
double parse_double(std::string_view text);

struct ArchitectureConfig {
    SocialParams params = SocialParams::defaults();
    FusionWeights weights;
    Palette palette = default_palette();

    // Keys assigned through set()/load(); thresholds and c_init not named here
    // are derived in finalize().
    std::set<std::string> explicit_keys;

    static const std::vector<std::string>& keys();

    // Throws InvalidInput for unknown keys or unparsable values.
    void set(std::string_view key, std::string_view value);
    std::string get(std::string_view key) const;

    // Reads `key = value` lines; '#' starts a comment.
    void load(std::istream& in);
    void load_file(const std::string& path);

    // c_init follows c_max; unset thresholds are recalibrated to 90 s.
    void finalize();

    std::string to_text() const;
};

nlohmann::json setup_to_json(const SessionSetup& setup);
SessionSetup setup_from_json(const nlohmann::json& j);

}  // namespace comfortsim
