#pragma once

// Session log files: one header line carrying the full setup as JSON, then
// one tab-separated line per tick with fixed decimal widths.
//
//   #comfortsim-log v1 {...setup...}
//   tick t_ms session phase state comfort beta tau F T face toy touch
//   expression event call percept actions
//
// Column layout and token grammar are documented in docs/log-format.md.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "comfortsim/session.hpp"

namespace comfortsim {

class LogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SessionLog {
    SessionSetup setup;
    std::vector<TickRecord> records;
};

inline constexpr std::string_view kLogMagic = "#comfortsim-log v1 ";

std::string format_header(const SessionSetup& setup);
SessionSetup parse_header(std::string_view line);

std::string format_record(const TickRecord& record);
TickRecord parse_record(std::string_view line);

std::string format_percept(const PerceptionEvents& events);
PerceptionEvents parse_percept(std::string_view text);

std::string to_text(const SessionLog& log);
SessionLog parse_log(std::string_view text);
SessionLog read_log_file(const std::string& path);
std::string read_text_file(const std::string& path);

// Streams a session to `out`: header on construction, one line per append,
// flushed whenever a phase completes.
class LogWriter {
public:
    LogWriter(std::ostream& out, const SessionSetup& setup);

    // Throws LogError unless record.tick == previous tick + 1 (0 first).
    void append_and_flush(const TickRecord& record);

    std::int64_t lines_written() const { return lines_; }

private:
    std::ostream& out_;
    std::int64_t phase_ticks_;
    std::int64_t next_tick_ = 0;
    std::int64_t lines_ = 0;
};

// Collects records in memory while also validating tick order.
class SessionRecorder {
public:
    explicit SessionRecorder(SessionSetup setup) { log_.setup = std::move(setup); }
    void append(const TickRecord& record);
    const SessionLog& log() const { return log_; }
    SessionLog take() { return std::move(log_); }

private:
    SessionLog log_;
};

}  // namespace comfortsim
