#include "comfortsim/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace comfortsim {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

int parse_int(std::string_view text) {
    int v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw InvalidInput("not an integer: '" + std::string(text) + "'");
    }
    return v;
}

Palette parse_palette(std::string_view text) {
    Palette out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

struct DoubleField {
    const char* key;
    double SocialParams::*social;
    double FusionWeights::*fusion;
};

constexpr DoubleField kDoubleFields[] = {
    {"beta0", &SocialParams::beta0, nullptr},
    {"tau0", &SocialParams::tau0, nullptr},
    {"tau_step", &SocialParams::tau_step, nullptr},
    {"beta_gap_shrink", &SocialParams::beta_gap_shrink, nullptr},
    {"additive_beta_step", &SocialParams::additive_beta_step, nullptr},
    {"additive_beta_cap", &SocialParams::additive_beta_cap, nullptr},
    {"c_max", &SocialParams::c_max, nullptr},
    {"c_init", &SocialParams::c_init, nullptr},
    {"c_critical", &SocialParams::c_critical, nullptr},
    {"c_saturation", &SocialParams::c_saturation, nullptr},
    {"optimal_band", &SocialParams::optimal_band, nullptr},
    {"suspension_s", &SocialParams::suspension_s, nullptr},
    {"response_window_s", &SocialParams::response_window_s, nullptr},
    {"idle_hold_s", &SocialParams::idle_hold_s, nullptr},
    {"w_face", nullptr, &FusionWeights::w_face},
    {"w_smile", nullptr, &FusionWeights::w_smile},
    {"w_toy", nullptr, &FusionWeights::w_toy},
    {"steadiness_bonus", nullptr, &FusionWeights::steadiness_bonus},
    {"steadiness_s", nullptr, &FusionWeights::steadiness_s},
};

const DoubleField* find_double(std::string_view key) {
    for (const auto& f : kDoubleFields) {
        if (key == f.key) return &f;
    }
    return nullptr;
}

}  // namespace

std::string format_exact(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw InvalidInput("not a number: '" + std::string(text) + "'");
    }
    return v;
}

const std::vector<std::string>& ArchitectureConfig::keys() {
    static const std::vector<std::string> all = [] {
        std::vector<std::string> k;
        for (const auto& f : kDoubleFields) k.emplace_back(f.key);
        k.emplace_back("critical_step_mode");
        k.emplace_back("tick_hz");
        k.emplace_back("palette");
        return k;
    }();
    return all;
}

void ArchitectureConfig::set(std::string_view key, std::string_view value) {
    value = trim(value);
    if (const DoubleField* f = find_double(key)) {
        const double v = parse_double(value);
        if (f->social) {
            params.*(f->social) = v;
        } else {
            weights.*(f->fusion) = v;
        }
    } else if (key == "critical_step_mode") {
        if (value == "gap_shrink") {
            params.critical_step_mode = CriticalStepMode::gap_shrink;
        } else if (value == "additive") {
            params.critical_step_mode = CriticalStepMode::additive;
        } else {
            throw InvalidInput("critical_step_mode must be gap_shrink or additive");
        }
    } else if (key == "tick_hz") {
        params.tick_hz = parse_int(value);
    } else if (key == "palette") {
        palette = parse_palette(value);
    } else {
        throw InvalidInput("unknown configuration key '" + std::string(key) + "'");
    }
    explicit_keys.emplace(key);
}

std::string ArchitectureConfig::get(std::string_view key) const {
    if (const DoubleField* f = find_double(key)) {
        return format_exact(f->social ? params.*(f->social) : weights.*(f->fusion));
    }
    if (key == "critical_step_mode") return std::string(to_string(params.critical_step_mode));
    if (key == "tick_hz") return std::to_string(params.tick_hz);
    if (key == "palette") {
        std::string out;
        for (const auto& c : palette) {
            if (!out.empty()) out += ',';
            out += c;
        }
        return out;
    }
    throw InvalidInput("unknown configuration key '" + std::string(key) + "'");
}

void ArchitectureConfig::load(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw InvalidInput("line " + std::to_string(lineno) + ": expected key = value");
        }
        set(trim(view.substr(0, eq)), view.substr(eq + 1));
    }
}

void ArchitectureConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open configuration file " + path);
    load(in);
}

void ArchitectureConfig::finalize() {
    if (!explicit_keys.contains("c_init")) params.c_init = 0.5 * params.c_max;
    const bool crit = explicit_keys.contains("c_critical");
    const bool sat = explicit_keys.contains("c_saturation");
    if (!crit || !sat) {
        const Thresholds t = calibrate_thresholds(params, 90.0, 90.0);
        if (!crit) params.c_critical = t.c_critical;
        if (!sat) params.c_saturation = t.c_saturation;
    }
    params.validate();
    weights.validate();
}

std::string ArchitectureConfig::to_text() const {
    std::ostringstream out;
    for (const auto& key : keys()) out << key << " = " << get(key) << '\n';
    return out.str();
}

nlohmann::json setup_to_json(const SessionSetup& setup) {
    ArchitectureConfig arch{setup.params, setup.weights, setup.palette, {}};
    nlohmann::json params = nlohmann::json::object();
    for (const auto& key : ArchitectureConfig::keys()) {
        if (key == "palette") continue;
        params[key] = arch.get(key);
    }
    nlohmann::json j;
    j["source"] = setup.source;
    j["mode"] = std::string(to_string(setup.config.mode));
    j["seed"] = setup.config.seed;
    j["phase_s"] = format_exact(setup.config.phase_s);
    j["n_phases"] = setup.config.n_phases;
    j["dual_task_phase"] = setup.config.dual_task_phase;
    j["architecture"] = std::move(params);
    j["palette"] = setup.palette;
    j["timing"] = {{"call_display_s", format_exact(setup.timing.call_display_s)},
                   {"disengage_s", format_exact(setup.timing.disengage_s)},
                   {"cue_period_s", format_exact(setup.timing.cue_period_s)}};
    return j;
}

SessionSetup setup_from_json(const nlohmann::json& j) {
    try {
        SessionSetup s;
        ArchitectureConfig arch;
        for (const auto& [key, value] : j.at("architecture").items()) {
            arch.set(key, value.get<std::string>());
        }
        s.params = arch.params;
        s.weights = arch.weights;
        s.palette = j.at("palette").get<Palette>();
        s.source = j.at("source").get<std::string>();
        const auto mode = parse_mode(j.at("mode").get<std::string>());
        if (!mode) throw InvalidInput("bad session mode in header");
        s.config.mode = *mode;
        s.config.seed = j.at("seed").get<std::uint64_t>();
        s.config.phase_s = parse_double(j.at("phase_s").get<std::string>());
        s.config.n_phases = j.at("n_phases").get<int>();
        s.config.dual_task_phase = j.at("dual_task_phase").get<int>();
        const auto& timing = j.at("timing");
        s.timing.call_display_s = parse_double(timing.at("call_display_s").get<std::string>());
        s.timing.disengage_s = parse_double(timing.at("disengage_s").get<std::string>());
        s.timing.cue_period_s = parse_double(timing.at("cue_period_s").get<std::string>());
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed session header: ") + e.what());
    }
}

}  // namespace comfortsim
