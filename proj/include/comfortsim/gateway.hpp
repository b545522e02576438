#pragma once

// Live session service. A human caretaker connects over TCP (length-prefixed
// JSON frames) or WebSocket (one JSON document per text frame) and drives the
// same SessionEngine the scripted agents use. Message names and fields are
// documented in docs/protocol.md.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "comfortsim/metrics.hpp"
#include "comfortsim/pollinator.hpp"
#include "comfortsim/session.hpp"
#include "comfortsim/session_log.hpp"

namespace comfortsim::gateway {

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Client -> server.
struct Hello {
    std::string name;
};
struct FaceMsg {
    bool present = false;
    AUSet aus;
};
struct TouchMsg {
    TouchReading reading;
};
struct ToyMsg {
    std::string color;
};
struct AnswerMsg {
    pollinator::PuzzleAnswer answer;
};

using ClientMessage = std::variant<Hello, FaceMsg, TouchMsg, ToyMsg, AnswerMsg>;

// Throws ProtocolError describing the first problem found.
ClientMessage parse_client_message(std::string_view text);
nlohmann::json to_json(const ClientMessage& msg);

// Last face message wins, touches are kept per region (last wins), toy
// sightings accumulate. Validation happens later in the perception fuser.
PerceptionEvents fold_messages(const std::vector<ClientMessage>& pending);

// `<decimal length>\n<payload>`
std::string encode_frame(std::string_view payload);

class FrameDecoder {
public:
    explicit FrameDecoder(std::size_t max_payload = 1 << 16) : max_(max_payload) {}

    // Appends bytes; returns complete payloads. Throws ProtocolError on a bad
    // length prefix, after which the decoder is unusable.
    std::vector<std::string> feed(std::string_view bytes);

private:
    std::string buf_;
    std::size_t max_;
};

struct LiveOptions {
    bool debug = false;
    std::uint64_t puzzle_seed = 1;
    std::vector<pollinator::Op> puzzle_ops{pollinator::Op::add, pollinator::Op::sub,
                                           pollinator::Op::mul, pollinator::Op::div};
    int puzzle_constraints = 12;
    pollinator::AccuracyBase accuracy_base = pollinator::AccuracyBase::filled;
};

// Owns the simulation state of one live session. submit() may be called from
// any thread; step() belongs to the tick loop.
class LiveSession {
public:
    using Notice = std::function<void(const std::string&)>;

    LiveSession(SessionSetup setup, LiveOptions options, std::ostream* log_out = nullptr,
                Notice notice = {});

    const SessionSetup& setup() const { return engine_.setup(); }
    bool done() const { return engine_.done(); }

    void submit(ClientMessage msg);
    void client_connected(const std::string& peer);
    void client_disconnected(const std::string& reason);

    // Drains the queue, advances one tick and returns the frames to push to
    // the client, snapshot first.
    std::vector<nlohmann::json> step();

    const SessionLog& log() const { return recorder_.log(); }
    const pollinator::Puzzle& puzzle() const { return puzzle_; }
    const std::optional<pollinator::Score>& puzzle_score() const { return score_; }
    nlohmann::json summary() const;

private:
    LiveOptions options_;
    SessionEngine engine_;
    SessionRecorder recorder_;
    std::unique_ptr<LogWriter> writer_;
    Notice notice_;
    pollinator::Puzzle puzzle_;
    std::optional<pollinator::Score> score_;

    std::mutex mu_;
    std::vector<ClientMessage> queue_;
};

nlohmann::json snapshot_json(const TickRecord& r, const SessionSetup& setup, bool debug,
                             const ComfortState* comfort);
nlohmann::json error_json(const std::string& message);

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 7878;  // 0 picks a free port
    double speed = 1.0;  // ticks run `speed` times faster than real time
    bool wait_for_client = false;
};

// TCP server for one session. run() blocks until the session ends or stop()
// is called. A second concurrent client receives an error frame and is
// closed; the session continues with zero stimuli after a disconnect.
class Server {
public:
    Server(LiveSession& session, ServeOptions options);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and listens; returns the bound port.
    int listen();
    void run();
    void stop() { stopping_ = true; }

    // Tick start times of the last run, for pacing checks.
    const std::vector<std::chrono::steady_clock::time_point>& tick_times() const { return ticks_; }

private:
    struct Client;

    void accept_loop();
    void reader_loop(std::shared_ptr<Client> client);
    void broadcast(const std::vector<nlohmann::json>& frames);

    LiveSession& session_;
    ServeOptions options_;
    int listen_fd_ = -1;
    std::atomic<bool> stopping_{false};
    std::mutex client_mu_;
    std::shared_ptr<Client> client_;
    std::vector<std::chrono::steady_clock::time_point> ticks_;
};

}  // namespace comfortsim::gateway
