#include "comfortsim/gateway.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <map>
#include <sstream>
#include <thread>

namespace comfortsim::gateway {

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
    return *it;
}

template <typename T>
T typed(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ProtocolError(std::string("'") + key + "' must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ProtocolError(std::string("'") + key + "' must be a string");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ProtocolError(std::string("'") + key + "' must be an integer");
    } else {
        if (!v.is_number()) throw ProtocolError(std::string("'") + key + "' must be a number");
    }
    return v.get<T>();
}

constexpr std::array<const char*, 5> kAuNames{"au6", "au12", "au4", "au9", "au10"};

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError("message must be a JSON object");
    const std::string type = typed<std::string>(j, "type");

    if (type == "hello") return Hello{j.value("name", std::string{})};
    if (type == "face") {
        FaceMsg m;
        m.present = typed<bool>(j, "present");
        if (m.present) {
            const auto& aus = field(j, "aus");
            if (!aus.is_array()) throw ProtocolError("'aus' must be an array of AU names");
            unsigned bits = 0;
            for (const auto& a : aus) {
                if (!a.is_string()) throw ProtocolError("'aus' must be an array of AU names");
                const auto name = a.get<std::string>();
                const auto it = std::find(kAuNames.begin(), kAuNames.end(), name);
                if (it == kAuNames.end()) throw ProtocolError("unknown AU '" + name + "'");
                bits |= 1u << (it - kAuNames.begin());
            }
            m.aus = AUSet::from_bits(bits);
        }
        return m;
    }
    if (type == "touch") {
        TouchMsg m;
        const auto region = parse_region(typed<std::string>(j, "region"));
        if (!region) throw ProtocolError("unknown region");
        m.reading.region = *region;
        m.reading.taxel_count = typed<int>(j, "taxels");
        m.reading.avg_pressure = typed<double>(j, "pressure");
        if (m.reading.taxel_count < 0 || !(m.reading.avg_pressure >= 0.0)) {
            throw ProtocolError("taxels and pressure must be >= 0");
        }
        return m;
    }
    if (type == "toy") return ToyMsg{typed<std::string>(j, "color")};
    if (type == "puzzle_answer") {
        try {
            return AnswerMsg{pollinator::answer_from_json(field(j, "filled"))};
        } catch (const std::invalid_argument& e) {
            throw ProtocolError(e.what());
        }
    }
    throw ProtocolError("unknown message type '" + type + "'");
}

nlohmann::json to_json(const ClientMessage& msg) {
    struct Visitor {
        nlohmann::json operator()(const Hello& m) const { return {{"type", "hello"}, {"name", m.name}}; }
        nlohmann::json operator()(const FaceMsg& m) const {
            nlohmann::json j{{"type", "face"}, {"present", m.present}};
            if (m.present) {
                auto aus = nlohmann::json::array();
                for (std::size_t i = 0; i < kAuNames.size(); ++i) {
                    if (m.aus.bits() & (1u << i)) aus.push_back(kAuNames[i]);
                }
                j["aus"] = aus;
            }
            return j;
        }
        nlohmann::json operator()(const TouchMsg& m) const {
            return {{"type", "touch"},
                    {"region", to_string(m.reading.region)},
                    {"taxels", m.reading.taxel_count},
                    {"pressure", m.reading.avg_pressure}};
        }
        nlohmann::json operator()(const ToyMsg& m) const { return {{"type", "toy"}, {"color", m.color}}; }
        nlohmann::json operator()(const AnswerMsg& m) const {
            nlohmann::json filled = nlohmann::json::object();
            for (const auto& [c, d] : m.answer.filled) filled[std::to_string(c)] = d;
            return {{"type", "puzzle_answer"}, {"filled", filled}};
        }
    };
    return std::visit(Visitor{}, msg);
}

PerceptionEvents fold_messages(const std::vector<ClientMessage>& pending) {
    PerceptionEvents ev;
    std::optional<FaceMsg> face;
    std::array<std::optional<TouchReading>, 3> touch;
    for (const auto& msg : pending) {
        if (const auto* f = std::get_if<FaceMsg>(&msg)) {
            face = *f;
        } else if (const auto* t = std::get_if<TouchMsg>(&msg)) {
            touch[static_cast<std::size_t>(t->reading.region)] = t->reading;
        } else if (const auto* y = std::get_if<ToyMsg>(&msg)) {
            ev.toys.push_back(y->color);
        }
    }
    if (face && face->present) ev.face = face->aus;
    for (const auto& t : touch) {
        if (t) ev.touches.push_back(*t);
    }
    return ev;
}

std::string encode_frame(std::string_view payload) {
    std::string out = std::to_string(payload.size());
    out += '\n';
    out += payload;
    return out;
}

std::vector<std::string> FrameDecoder::feed(std::string_view bytes) {
    buf_.append(bytes);
    std::vector<std::string> out;
    while (true) {
        const auto nl = buf_.find('\n');
        if (nl == std::string::npos) {
            if (buf_.size() > 20) throw ProtocolError("frame length prefix too long");
            break;
        }
        std::size_t len = 0;
        const auto [ptr, ec] = std::from_chars(buf_.data(), buf_.data() + nl, len);
        if (nl == 0 || ec != std::errc{} || ptr != buf_.data() + nl) {
            throw ProtocolError("bad frame length prefix");
        }
        if (len > max_) throw ProtocolError("frame exceeds " + std::to_string(max_) + " bytes");
        if (buf_.size() < nl + 1 + len) break;
        out.push_back(buf_.substr(nl + 1, len));
        buf_.erase(0, nl + 1 + len);
    }
    return out;
}

// ---------------------------------------------------------------------------

LiveSession::LiveSession(SessionSetup setup, LiveOptions options, std::ostream* log_out,
                         Notice notice)
    : options_(std::move(options)),
      engine_(setup),
      recorder_(setup),
      notice_(std::move(notice)),
      puzzle_(pollinator::generate(options_.puzzle_seed, options_.puzzle_ops,
                                   options_.puzzle_constraints)) {
    if (log_out) writer_ = std::make_unique<LogWriter>(*log_out, engine_.setup());
}

void LiveSession::submit(ClientMessage msg) {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(msg));
}

void LiveSession::client_connected(const std::string& peer) {
    if (notice_) notice_("client connected: " + peer + " at tick " + std::to_string(engine_.next_tick()));
}

void LiveSession::client_disconnected(const std::string& reason) {
    if (notice_) {
        notice_("client disconnected (" + reason + ") at tick " + std::to_string(engine_.next_tick()) +
                ", continuing with zero stimuli");
    }
}

std::vector<nlohmann::json> LiveSession::step() {
    std::vector<ClientMessage> pending;
    {
        std::lock_guard lock(mu_);
        pending.swap(queue_);
    }
    const SessionSetup& setup = engine_.setup();
    const std::int64_t tick = engine_.next_tick();
    const std::int64_t puzzle_tick = (setup.config.dual_task_phase - 1) * setup.phase_ticks();
    const bool assigned = tick > puzzle_tick;

    std::vector<nlohmann::json> frames;
    std::vector<nlohmann::json> late;
    for (const auto& msg : pending) {
        if (const auto* h = std::get_if<Hello>(&msg)) {
            if (notice_) notice_("hello from '" + h->name + "'");
        } else if (const auto* a = std::get_if<AnswerMsg>(&msg)) {
            if (!assigned) {
                late.push_back(error_json("no puzzle has been assigned yet"));
                continue;
            }
            score_ = pollinator::score(a->answer, *puzzle_.solution, options_.accuracy_base);
            late.push_back({{"type", "puzzle_score"},
                            {"completeness", score_->completeness},
                            {"accuracy", score_->accuracy},
                            {"combined", score_->combined}});
        }
    }

    const TickRecord& r = engine_.advance(fold_messages(pending));
    recorder_.append(r);
    if (writer_) writer_->append_and_flush(r);
    if (notice_) {
        for (const auto& why : engine_.last_rejections()) notice_("tick " + std::to_string(r.tick) + ": rejected " + why);
    }

    frames.push_back(snapshot_json(r, setup, options_.debug, &engine_.comfort()));
    const bool calls = std::any_of(r.actions.begin(), r.actions.end(),
                                   [](const ActionCommand& a) { return a.verb == Verb::straighten_up; });
    if (calls) {
        frames.push_back({{"type", "engage_call"},
                          {"tick", r.tick},
                          {"window_ms", setup.params.response_window_ticks() * 1000 / setup.params.tick_hz}});
    }
    if (tick == puzzle_tick) {
        frames.push_back({{"type", "puzzle_assignment"},
                          {"tick", r.tick},
                          {"deadline_tick", puzzle_tick + setup.phase_ticks()},
                          {"puzzle", pollinator::to_json(puzzle_, false)}});
    }
    frames.insert(frames.end(), late.begin(), late.end());
    if (engine_.done()) frames.push_back({{"type", "session_end"}, {"summary", summary()}});
    return frames;
}

nlohmann::json LiveSession::summary() const {
    nlohmann::json j;
    const auto& log = recorder_.log();
    j["ticks"] = log.records.size();
    if (engine_.done()) {
        const SessionMetrics m = compute_metrics(log);
        j["session"] = std::string(1, m.session);
        j["hits_critical"] = m.hits_critical;
        j["hits_saturation"] = m.hits_saturation;
        j["responded"] = m.responded;
        j["ignored"] = m.ignored;
        auto phases = nlohmann::json::array();
        for (const auto& p : m.phases) {
            phases.push_back({{"idle", p.idle},
                              {"interact", p.interact},
                              {"suspend", p.suspend},
                              {"transitional", p.transitional},
                              {"face", p.face},
                              {"toy", p.toy},
                              {"touch", p.touch}});
        }
        j["phases"] = phases;
    }
    if (score_) {
        j["puzzle"] = {{"completeness", score_->completeness},
                       {"accuracy", score_->accuracy},
                       {"combined", score_->combined}};
    } else {
        j["puzzle"] = nullptr;
    }
    return j;
}

nlohmann::json snapshot_json(const TickRecord& r, const SessionSetup& setup, bool debug,
                             const ComfortState* comfort) {
    const std::int64_t hz = setup.params.tick_hz;
    const std::int64_t total = setup.total_ticks();
    const std::int64_t phase_end = static_cast<std::int64_t>(r.phase) * setup.phase_ticks();
    auto actions = nlohmann::json::array();
    for (const auto& a : r.actions) actions.push_back(a.encode());
    nlohmann::json j{{"type", "snapshot"},
                     {"tick", r.tick},
                     {"t_ms", r.t_ms},
                     {"phase", r.phase},
                     {"state", to_string(r.state)},
                     {"actions", actions},
                     {"remaining_ms", (total - r.tick - 1) * 1000 / hz},
                     {"phase_remaining_ms", (phase_end - r.tick - 1) * 1000 / hz}};
    if (debug) {
        j["debug"] = {{"comfort", r.comfort},
                      {"beta", r.beta},
                      {"tau", r.tau},
                      {"F", r.F},
                      {"T", r.T},
                      {"n_critical", comfort ? comfort->n_critical : 0},
                      {"n_saturation", comfort ? comfort->n_saturation : 0}};
    }
    return j;
}

nlohmann::json error_json(const std::string& message) {
    return {{"type", "error"}, {"message", message}};
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kWsGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string websocket_accept(std::string_view key) {
    std::string input(key);
    input += kWsGuid;
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(input.data()), input.size(), digest);
    unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
    const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
    return std::string(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
}

std::string header_value(const std::string& request, const std::string& name) {
    std::istringstream in(request);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto colon = line.find(':');
        if (colon != name.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < colon && same; ++i) {
            same = std::tolower(static_cast<unsigned char>(line[i])) ==
                   std::tolower(static_cast<unsigned char>(name[i]));
        }
        if (!same) continue;
        const auto first = line.find_first_not_of(' ', colon + 1);
        const auto last = line.find_last_not_of(' ');
        return first == std::string::npos ? std::string{} : line.substr(first, last - first + 1);
    }
    return {};
}

std::string ws_text_frame(std::string_view payload) {
    std::string out;
    out += static_cast<char>(0x81);
    if (payload.size() < 126) {
        out += static_cast<char>(payload.size());
    } else if (payload.size() < 65536) {
        out += static_cast<char>(126);
        out += static_cast<char>((payload.size() >> 8) & 0xff);
        out += static_cast<char>(payload.size() & 0xff);
    } else {
        out += static_cast<char>(127);
        for (int i = 7; i >= 0; --i) out += static_cast<char>((payload.size() >> (8 * i)) & 0xff);
    }
    out += payload;
    return out;
}

bool send_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n <= 0) return false;
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

}  // namespace

struct Server::Client {
    int fd = -1;
    std::string peer;
    bool websocket = false;
    std::atomic<bool> ready{false};
    std::atomic<bool> open{true};
    std::mutex write_mu;
    std::thread reader;

    bool send_json(const nlohmann::json& j) {
        const std::string text = j.dump();
        std::lock_guard lock(write_mu);
        if (!open) return false;
        const bool ok = send_all(fd, websocket ? ws_text_frame(text) : encode_frame(text));
        if (!ok) open = false;
        return ok;
    }
};

Server::Server(LiveSession& session, ServeOptions options)
    : session_(session), options_(std::move(options)) {
    if (!(options_.speed > 0.0)) throw std::invalid_argument("speed must be > 0");
}

Server::~Server() {
    stopping_ = true;
    if (listen_fd_ >= 0) ::close(listen_fd_);
    std::shared_ptr<Client> c;
    {
        std::lock_guard lock(client_mu_);
        c = client_;
    }
    if (c) {
        ::shutdown(c->fd, SHUT_RDWR);
        if (c->reader.joinable()) c->reader.join();
        ::close(c->fd);
    }
}

int Server::listen() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
    if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
        throw std::invalid_argument("bad IPv4 address '" + options_.host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
        ::listen(listen_fd_, 4) < 0) {
        throw std::runtime_error("cannot listen on " + options_.host + ":" + std::to_string(options_.port) +
                                 ": " + std::strerror(errno));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
}

void Server::accept_loop() {
    while (!stopping_) {
        pollfd p{listen_fd_, POLLIN, 0};
        if (::poll(&p, 1, 50) <= 0) continue;
        sockaddr_in addr{};
        socklen_t len = sizeof addr;
        const int fd = ::accept(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        if (fd < 0) continue;
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        char host[INET_ADDRSTRLEN] = {};
        ::inet_ntop(AF_INET, &addr.sin_addr, host, sizeof host);
        const std::string peer = std::string(host) + ":" + std::to_string(ntohs(addr.sin_port));

        std::lock_guard lock(client_mu_);
        if (client_ && client_->open) {
            send_all(fd, encode_frame(error_json("session already has a client").dump()));
            ::close(fd);
            continue;
        }
        if (client_) {
            if (client_->reader.joinable()) client_->reader.join();
            ::close(client_->fd);
        }
        client_ = std::make_shared<Client>();
        client_->fd = fd;
        client_->peer = peer;
        client_->reader = std::thread(&Server::reader_loop, this, client_);
    }
}

void Server::reader_loop(std::shared_ptr<Client> client) {
    std::string buf;
    char chunk[4096];
    auto read_more = [&]() {
        while (!stopping_ && client->open) {
            pollfd p{client->fd, POLLIN, 0};
            const int r = ::poll(&p, 1, 50);
            if (r < 0) return false;
            if (r == 0) continue;
            const ssize_t n = ::recv(client->fd, chunk, sizeof chunk, 0);
            if (n <= 0) return false;
            buf.append(chunk, static_cast<std::size_t>(n));
            return true;
        }
        return false;
    };
    auto close_with = [&](const std::string& reason) {
        {
            std::lock_guard lock(client->write_mu);
            client->open = false;
        }
        ::shutdown(client->fd, SHUT_RDWR);
        session_.client_disconnected(reason);
    };

    // A WebSocket client speaks first; a plain TCP client may wait for the welcome.
    pollfd first{client->fd, POLLIN, 0};
    if (::poll(&first, 1, 200) > 0) {
        if (!read_more()) return close_with("closed before first message");
        while (buf.size() < 4 && std::string_view("GET ").substr(0, buf.size()) == buf) {
            if (!read_more()) return close_with("closed before first message");
        }
    }
    if (buf.rfind("GET ", 0) == 0) {
        while (buf.find("\r\n\r\n") == std::string::npos) {
            if (buf.size() > 8192 || !read_more()) return close_with("bad websocket handshake");
        }
        const auto end = buf.find("\r\n\r\n") + 4;
        const std::string request = buf.substr(0, end);
        buf.erase(0, end);
        const std::string key = header_value(request, "Sec-WebSocket-Key");
        if (key.empty()) {
            send_all(client->fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
            return close_with("http request without websocket upgrade");
        }
        const std::string reply = "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\n"
                                  "Connection: Upgrade\r\nSec-WebSocket-Accept: " +
                                  websocket_accept(key) + "\r\n\r\n";
        if (!send_all(client->fd, reply)) return close_with("write failed");
        client->websocket = true;
    }

    const SessionSetup& setup = session_.setup();
    client->send_json({{"type", "welcome"},
                       {"session", std::string(1, setup.session_label())},
                       {"tick_hz", setup.params.tick_hz},
                       {"phase_s", setup.config.phase_s},
                       {"n_phases", setup.config.n_phases},
                       {"dual_task_phase", setup.config.dual_task_phase},
                       {"palette", setup.palette}});
    client->ready = true;
    session_.client_connected(client->peer);

    auto handle = [&](const std::string& payload) {
        try {
            session_.submit(parse_client_message(payload));
        } catch (const ProtocolError& e) {
            client->send_json(error_json(e.what()));
        }
    };

    FrameDecoder decoder;
    while (true) {
        if (client->websocket) {
            // Parse as many complete frames as the buffer holds.
            while (buf.size() >= 2) {
                const auto b0 = static_cast<unsigned char>(buf[0]);
                const auto b1 = static_cast<unsigned char>(buf[1]);
                const int opcode = b0 & 0x0f;
                const bool masked = b1 & 0x80;
                std::uint64_t len = b1 & 0x7f;
                std::size_t pos = 2;
                if (len == 126) {
                    if (buf.size() < 4) break;
                    len = (static_cast<unsigned char>(buf[2]) << 8) | static_cast<unsigned char>(buf[3]);
                    pos = 4;
                } else if (len == 127) {
                    if (buf.size() < 10) break;
                    len = 0;
                    for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<unsigned char>(buf[2 + i]);
                    pos = 10;
                }
                if (len > (1u << 16)) return close_with("websocket frame too large");
                const std::size_t need = pos + (masked ? 4 : 0) + len;
                if (buf.size() < need) break;
                std::string payload = buf.substr(pos + (masked ? 4 : 0), len);
                if (masked) {
                    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] ^= buf[pos + (i % 4)];
                }
                buf.erase(0, need);
                if (!(b0 & 0x80)) return close_with("fragmented websocket frames are not supported");
                if (opcode == 0x8) return close_with("websocket close");
                if (opcode == 0x9) {
                    std::string pong;
                    pong += static_cast<char>(0x8a);
                    pong += static_cast<char>(payload.size());
                    pong += payload;
                    std::lock_guard lock(client->write_mu);
                    send_all(client->fd, pong);
                } else if (opcode == 0x1) {
                    handle(payload);
                }
            }
        } else {
            try {
                for (const auto& payload : decoder.feed(buf)) handle(payload);
            } catch (const ProtocolError& e) {
                client->send_json(error_json(e.what()));
                return close_with(std::string("framing error: ") + e.what());
            }
            buf.clear();
        }
        if (!read_more()) {
            if (client->open) close_with("connection closed");
            return;
        }
    }
}

void Server::broadcast(const std::vector<nlohmann::json>& frames) {
    std::shared_ptr<Client> c;
    {
        std::lock_guard lock(client_mu_);
        c = client_;
    }
    if (!c || !c->ready || !c->open) return;
    for (const auto& f : frames) {
        if (!c->send_json(f)) {
            ::shutdown(c->fd, SHUT_RDWR);
            break;
        }
    }
}

void Server::run() {
    if (listen_fd_ < 0) listen();
    std::thread acceptor(&Server::accept_loop, this);

    if (options_.wait_for_client) {
        while (!stopping_) {
            {
                std::lock_guard lock(client_mu_);
                if (client_ && client_->ready) break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
    }

    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / (session_.setup().params.tick_hz * options_.speed)));
    ticks_.clear();
    auto next = clock::now();
    while (!stopping_ && !session_.done()) {
        std::this_thread::sleep_until(next);
        ticks_.push_back(clock::now());
        broadcast(session_.step());
        next += period;
    }

    stopping_ = true;
    acceptor.join();
    std::shared_ptr<Client> c;
    {
        std::lock_guard lock(client_mu_);
        c = client_;
    }
    if (c) {
        {
            std::lock_guard lock(c->write_mu);
            c->open = false;
        }
        ::shutdown(c->fd, SHUT_RDWR);
        if (c->reader.joinable()) c->reader.join();
    }
}

}  // namespace comfortsim::gateway
