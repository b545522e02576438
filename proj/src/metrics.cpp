#include "comfortsim/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace comfortsim {

namespace {

std::string ranges_text(const std::vector<std::pair<std::int64_t, std::int64_t>>& ranges) {
    std::string out;
    for (const auto& [a, b] : ranges) {
        if (!out.empty()) out += ", ";
        out += std::to_string(a);
        if (b != a) out += "-" + std::to_string(b);
    }
    return out;
}

std::string pct(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

}  // namespace

SessionMetrics compute_metrics(const SessionLog& log) {
    const SessionSetup& setup = log.setup;
    const std::int64_t total = setup.total_ticks();

    std::vector<bool> seen(static_cast<std::size_t>(total), false);
    for (const auto& r : log.records) {
        if (r.tick < 0 || r.tick >= total) {
            throw LogError("tick " + std::to_string(r.tick) + " outside the session");
        }
        if (seen[static_cast<std::size_t>(r.tick)]) {
            throw LogError("duplicate tick " + std::to_string(r.tick));
        }
        seen[static_cast<std::size_t>(r.tick)] = true;
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> missing;
    for (std::int64_t t = 0; t < total; ++t) {
        if (seen[static_cast<std::size_t>(t)]) continue;
        if (!missing.empty() && missing.back().second == t - 1) {
            missing.back().second = t;
        } else {
            missing.emplace_back(t, t);
        }
    }
    if (!missing.empty()) throw LogError("incomplete log, missing ticks " + ranges_text(missing));

    SessionMetrics m;
    m.session = setup.session_label();
    m.phases.resize(static_cast<std::size_t>(setup.config.n_phases));
    for (const auto& r : log.records) {
        if (r.event == ThresholdKind::critical) {
            ++m.hits_critical;
            m.critical_ticks.push_back(r.tick);
        } else if (r.event == ThresholdKind::saturation) {
            ++m.hits_saturation;
            m.saturation_ticks.push_back(r.tick);
        }
        if (r.call) {
            ++(*r.call ? m.responded : m.ignored);
        }
        PhaseDistribution& p = m.phases[static_cast<std::size_t>(setup.phase_of(r.tick) - 1)];
        ++p.ticks;
        switch (r.state) {
            case StateLabel::idle: p.idle += 1; break;
            case StateLabel::interact: p.interact += 1; break;
            case StateLabel::suspend_critical:
            case StateLabel::suspend_saturation: p.suspend += 1; break;
            case StateLabel::engage_call:
            case StateLabel::disengage: p.transitional += 1; break;
        }
        if (r.face_present) p.face += 1;
        if (r.toy_visible) p.toy += 1;
        if (r.touch_active) p.touch += 1;
    }
    if (m.responded + m.ignored != m.hits_critical) {
        throw LogError("unresolved engagement calls in log");
    }
    for (auto& p : m.phases) {
        const double n = static_cast<double>(p.ticks);
        for (double* v : {&p.idle, &p.interact, &p.suspend, &p.transitional, &p.face, &p.toy, &p.touch}) {
            *v = n > 0 ? 100.0 * *v / n : 0.0;
        }
    }
    return m;
}

ReplayResult replay(std::string_view log_text, const SocialParams* params) {
    ReplayResult result;
    const auto first_nl = log_text.find('\n');
    const SessionSetup setup = parse_header(log_text.substr(0, first_nl));
    if (params && !(*params == setup.params)) {
        std::string why = "configuration mismatch with log header";
        if (params->tick_hz != setup.params.tick_hz) {
            why += " (tick_hz " + std::to_string(params->tick_hz) + " vs " +
                   std::to_string(setup.params.tick_hz) + ")";
        }
        throw LogError(why);
    }

    SessionEngine engine(setup);
    std::string out = format_header(setup);
    out += '\n';

    std::size_t pos = first_nl == std::string_view::npos ? log_text.size() : first_nl + 1;
    while (pos < log_text.size()) {
        auto nl = log_text.find('\n', pos);
        if (nl == std::string_view::npos) nl = log_text.size();
        const std::string_view line = log_text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        const TickRecord original = parse_record(line);
        if (engine.done()) {
            if (!result.first_divergent_tick) {
                result.first_divergent_tick = original.tick;
                result.diagnostic = "log continues past the end of the session";
            }
            break;
        }
        const std::string regenerated = format_record(engine.advance(original.percept));
        out += regenerated;
        out += '\n';
        if (regenerated != line && !result.first_divergent_tick) {
            result.first_divergent_tick = engine.last().tick;
            result.diagnostic = "first divergence at tick " + std::to_string(engine.last().tick) +
                                "\n  logged:   " + std::string(line) +
                                "\n  replayed: " + regenerated;
        }
    }
    if (!result.first_divergent_tick && !engine.done()) {
        result.first_divergent_tick = engine.next_tick();
        result.diagnostic = "log ends early at tick " + std::to_string(engine.next_tick());
    }
    result.identical = out == log_text && !result.first_divergent_tick;
    if (!result.identical && result.diagnostic.empty()) {
        result.diagnostic = "header or line framing differs";
    }
    result.regenerated = std::move(out);
    return result;
}

std::string_view to_string(OrderGroup g) { return g == OrderGroup::AF ? "AF" : "FA"; }

std::optional<OrderGroup> parse_order(std::string_view s) {
    if (s == "AF") return OrderGroup::AF;
    if (s == "FA") return OrderGroup::FA;
    return std::nullopt;
}

std::string export_summary(const std::vector<SessionMetrics>& sessions, OrderGroup group) {
    if (sessions.empty()) throw std::invalid_argument("export_summary needs at least one session");
    const std::size_t n_phases = sessions.front().phases.size();
    for (const auto& s : sessions) {
        if (s.phases.size() != n_phases) throw std::invalid_argument("sessions differ in phase count");
    }
    const char first = group == OrderGroup::AF ? 'A' : 'F';

    std::ostringstream out;
    out << "group,column,sessions,hits_critical,hits_saturation,hits_total,responded,ignored";
    for (std::size_t p = 1; p <= n_phases; ++p) {
        for (const char* k : {"idle", "interact", "suspend", "transitional", "face", "toy", "touch"}) {
            out << ",p" << p << '_' << k;
        }
    }
    out << '\n';

    auto row = [&](std::string_view column, auto&& include) {
        std::vector<const SessionMetrics*> picked;
        for (const auto& s : sessions) {
            if (include(s)) picked.push_back(&s);
        }
        if (picked.empty()) return;
        const double n = static_cast<double>(picked.size());
        auto mean = [&](auto&& field) {
            double sum = 0.0;
            for (const auto* s : picked) sum += field(*s);
            return sum / n;
        };
        out << to_string(group) << ',' << column << ',' << picked.size() << ','
            << pct(mean([](const SessionMetrics& s) { return s.hits_critical; })) << ','
            << pct(mean([](const SessionMetrics& s) { return s.hits_saturation; })) << ','
            << pct(mean([](const SessionMetrics& s) { return s.hits_critical + s.hits_saturation; }))
            << ',' << pct(mean([](const SessionMetrics& s) { return s.responded; })) << ','
            << pct(mean([](const SessionMetrics& s) { return s.ignored; }));
        for (std::size_t p = 0; p < n_phases; ++p) {
            for (double PhaseDistribution::*f :
                 {&PhaseDistribution::idle, &PhaseDistribution::interact, &PhaseDistribution::suspend,
                  &PhaseDistribution::transitional, &PhaseDistribution::face, &PhaseDistribution::toy,
                  &PhaseDistribution::touch}) {
                out << ',' << pct(mean([&](const SessionMetrics& s) { return s.phases[p].*f; }));
            }
        }
        out << '\n';
    };
    row("A", [](const SessionMetrics& s) { return s.session == 'A'; });
    row("F", [](const SessionMetrics& s) { return s.session == 'F'; });
    row("first", [&](const SessionMetrics& s) { return s.session == first; });
    row("second", [&](const SessionMetrics& s) { return s.session != first; });
    row("all", [](const SessionMetrics&) { return true; });
    return out.str();
}

}  // namespace comfortsim
