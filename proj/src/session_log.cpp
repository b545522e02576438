#include "comfortsim/session_log.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "comfortsim/config.hpp"

namespace comfortsim {

namespace {

constexpr std::size_t kColumns = 18;

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string_view::npos ? text.npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string fixed(double x, int places) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", places, x);
    return buf;
}

std::int64_t to_int(std::string_view s) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw LogError("bad integer field '" + std::string(s) + "'");
    }
    return v;
}

bool to_flag(std::string_view s) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw LogError("bad flag field '" + std::string(s) + "'");
}

double to_double(std::string_view s) {
    try {
        return parse_double(s);
    } catch (const InvalidInput& e) {
        throw LogError(e.what());
    }
}

bool valid_color(std::string_view c) {
    if (c.empty()) return false;
    for (char ch : c) {
        if (ch == ';' || ch == ':' || ch == ',' || ch == '/' || ch == '+' || ch == '\t' ||
            ch == '\n' || ch == ' ' || ch == '\r') {
            return false;
        }
    }
    return true;
}

constexpr const char* kAuNames[] = {"au6", "au12", "au4", "au9", "au10"};

}  // namespace

std::string format_header(const SessionSetup& setup) {
    return std::string(kLogMagic) + setup_to_json(setup).dump();
}

SessionSetup parse_header(std::string_view line) {
    if (!line.starts_with(kLogMagic)) throw LogError("missing log header");
    const auto json = nlohmann::json::parse(line.substr(kLogMagic.size()), nullptr, false);
    if (json.is_discarded()) throw LogError("log header is not valid JSON");
    try {
        return setup_from_json(json);
    } catch (const InvalidInput& e) {
        throw LogError(e.what());
    }
}

std::string format_percept(const PerceptionEvents& events) {
    std::string out;
    auto item = [&](const std::string& s) {
        if (!out.empty()) out += ';';
        out += s;
    };
    if (events.face) {
        std::string aus;
        const unsigned bits = events.face->bits();
        for (unsigned i = 0; i < 5; ++i) {
            if (bits & (1u << i)) {
                if (!aus.empty()) aus += '+';
                aus += kAuNames[i];
            }
        }
        item("face:" + (aus.empty() ? std::string("none") : aus));
    }
    for (const auto& toy : events.toys) {
        if (!valid_color(toy)) throw LogError("colour label not loggable: '" + toy + "'");
        item("toy:" + toy);
    }
    for (const auto& t : events.touches) {
        item("touch:" + std::string(to_string(t.region)) + "/" + std::to_string(t.taxel_count) + "/" +
             format_exact(t.avg_pressure));
    }
    return out.empty() ? "-" : out;
}

PerceptionEvents parse_percept(std::string_view text) {
    PerceptionEvents ev;
    if (text == "-") return ev;
    for (std::string_view item : split(text, ';')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw LogError("bad percept item '" + std::string(item) + "'");
        const std::string_view kind = item.substr(0, colon);
        const std::string_view body = item.substr(colon + 1);
        if (kind == "face") {
            AUSet aus;
            if (body != "none") {
                unsigned bits = 0;
                for (std::string_view name : split(body, '+')) {
                    bool found = false;
                    for (unsigned i = 0; i < 5; ++i) {
                        if (name == kAuNames[i]) {
                            bits |= 1u << i;
                            found = true;
                        }
                    }
                    if (!found) throw LogError("unknown action unit '" + std::string(name) + "'");
                }
                aus = AUSet::from_bits(bits);
            }
            ev.face = aus;
        } else if (kind == "toy") {
            if (!valid_color(body)) throw LogError("bad colour label");
            ev.toys.emplace_back(body);
        } else if (kind == "touch") {
            const auto parts = split(body, '/');
            if (parts.size() != 3) throw LogError("bad touch item '" + std::string(item) + "'");
            const auto region = parse_region(parts[0]);
            if (!region) throw LogError("unknown touch region '" + std::string(parts[0]) + "'");
            ev.touches.push_back({*region, static_cast<int>(to_int(parts[1])), to_double(parts[2])});
        } else {
            throw LogError("unknown percept item '" + std::string(kind) + "'");
        }
    }
    return ev;
}

std::string format_record(const TickRecord& r) {
    std::string line;
    line.reserve(160);
    auto col = [&](std::string_view s) {
        if (!line.empty()) line += '\t';
        line += s;
    };
    col(std::to_string(r.tick));
    col(std::to_string(r.t_ms));
    col(std::string(1, r.session));
    col(std::to_string(r.phase));
    col(to_string(r.state));
    col(fixed(r.comfort, 6));
    col(fixed(r.beta, 9));
    col(fixed(r.tau, 3));
    col(fixed(r.F, 6));
    col(fixed(r.T, 6));
    col(r.face_present ? "1" : "0");
    col(r.toy_visible ? "1" : "0");
    col(r.touch_active ? "1" : "0");
    col(to_string(r.expression));
    col(r.event ? to_string(*r.event) : "-");
    col(!r.call ? "-" : *r.call ? "responded" : "ignored");
    col(format_percept(r.percept));
    std::string actions;
    for (const auto& a : r.actions) {
        if (!actions.empty()) actions += ',';
        actions += a.encode();
    }
    col(actions.empty() ? "-" : actions);
    return line;
}

TickRecord parse_record(std::string_view line) {
    const auto f = split(line, '\t');
    if (f.size() != kColumns) {
        throw LogError("expected " + std::to_string(kColumns) + " columns, got " +
                       std::to_string(f.size()));
    }
    TickRecord r;
    r.tick = to_int(f[0]);
    r.t_ms = to_int(f[1]);
    if (f[2] != "A" && f[2] != "F") throw LogError("bad session label");
    r.session = f[2][0];
    r.phase = static_cast<int>(to_int(f[3]));
    const auto state = parse_state(f[4]);
    if (!state) throw LogError("unknown state '" + std::string(f[4]) + "'");
    r.state = *state;
    r.comfort = to_double(f[5]);
    r.beta = to_double(f[6]);
    r.tau = to_double(f[7]);
    r.F = to_double(f[8]);
    r.T = to_double(f[9]);
    r.face_present = to_flag(f[10]);
    r.toy_visible = to_flag(f[11]);
    r.touch_active = to_flag(f[12]);
    const auto expr = parse_expression(f[13]);
    if (!expr) throw LogError("unknown expression '" + std::string(f[13]) + "'");
    r.expression = *expr;
    if (f[14] == "critical") {
        r.event = ThresholdKind::critical;
    } else if (f[14] == "saturation") {
        r.event = ThresholdKind::saturation;
    } else if (f[14] != "-") {
        throw LogError("bad event field");
    }
    if (f[15] == "responded") {
        r.call = true;
    } else if (f[15] == "ignored") {
        r.call = false;
    } else if (f[15] != "-") {
        throw LogError("bad call field");
    }
    r.percept = parse_percept(f[16]);
    if (f[17] != "-") {
        for (std::string_view a : split(f[17], ',')) {
            try {
                r.actions.push_back(ActionCommand::decode(a));
            } catch (const std::invalid_argument& e) {
                throw LogError(e.what());
            }
        }
    }
    return r;
}

std::string to_text(const SessionLog& log) {
    std::string out = format_header(log.setup);
    out += '\n';
    for (const auto& r : log.records) {
        out += format_record(r);
        out += '\n';
    }
    return out;
}

SessionLog parse_log(std::string_view text) {
    SessionLog log;
    std::size_t pos = 0;
    std::int64_t lineno = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++lineno;
        if (lineno == 1) {
            log.setup = parse_header(line);
            continue;
        }
        if (line.empty()) continue;
        try {
            log.records.push_back(parse_record(line));
        } catch (const LogError& e) {
            throw LogError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (lineno == 0) throw LogError("empty log");
    return log;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LogError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SessionLog read_log_file(const std::string& path) { return parse_log(read_text_file(path)); }

LogWriter::LogWriter(std::ostream& out, const SessionSetup& setup)
    : out_(out), phase_ticks_(setup.phase_ticks()) {
    out_ << format_header(setup) << '\n';
    out_.flush();
}

void LogWriter::append_and_flush(const TickRecord& record) {
    if (record.tick != next_tick_) {
        throw LogError("out-of-order tick " + std::to_string(record.tick) + ", expected " +
                       std::to_string(next_tick_));
    }
    out_ << format_record(record) << '\n';
    ++next_tick_;
    ++lines_;
    if (next_tick_ % phase_ticks_ == 0) out_.flush();
    if (!out_) throw LogError("log write failed");
}

void SessionRecorder::append(const TickRecord& record) {
    const std::int64_t expected = log_.records.empty() ? 0 : log_.records.back().tick + 1;
    if (record.tick != expected) {
        throw LogError("out-of-order tick " + std::to_string(record.tick) + ", expected " +
                       std::to_string(expected));
    }
    log_.records.push_back(record);
}

}  // namespace comfortsim
