#include "comfortsim/caretaker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace comfortsim {

namespace {

void require_prob(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidInput(std::string("probability outside [0,1]: ") + what);
    }
}

PhasePolicy policy(double face, double smile, double toy, std::array<double, 3> touch,
                   double episode_s, double respond, double latency_s, double duration_s) {
    PhasePolicy p;
    p.face_prob = face;
    p.smile_prob = smile;
    p.toy_prob = toy;
    p.touch_prob = touch;
    p.episode_s = episode_s;
    p.respond_to_call = respond;
    p.respond_latency_s = latency_s;
    p.respond_duration_s = duration_s;
    p.phantom_touch_prob = 0.01;
    return p;
}

// Engaged most of the time, mostly face with occasional toys and light touch.
// The mean stimulus keeps comfort near the optimal level, below saturation.
CaretakerProfile attentive() {
    CaretakerProfile c;
    c.name = "attentive";
    PhasePolicy p1 = policy(0.9, 0.3, 0.25, {0.12, 0.05, 0.05}, 8.0, 1.0, 1.0, 10.0);
    PhasePolicy p2 = policy(0.6, 0.2, 0.1, {0.1, 0.04, 0.04}, 6.0, 0.9, 2.0, 10.0);
    p2.contemplate_prob = 0.3;
    c.phases = {p1, p2, p1};
    c.seed = 11;
    return c;
}

// Rarely engages, answers only half the calls.
CaretakerProfile sparse() {
    CaretakerProfile c;
    c.name = "sparse";
    PhasePolicy p = policy(0.2, 0.1, 0.05, {0.05, 0.0, 0.0}, 5.0, 0.5, 3.0, 5.0);
    c.phases = {p, p, p};
    c.seed = 23;
    return c;
}

// Attentive at first; during the dual task the face nearly disappears while
// the same amount of touch happens early in the phase, then the caretaker is
// absorbed and ignores calls. Afterwards answers calls but only briefly. In a
// second session the caretaker has learned to keep interacting during the task.
CaretakerProfile distracted() {
    CaretakerProfile c;
    c.name = "distracted";
    PhasePolicy p1 = policy(0.85, 0.35, 0.25, {0.1, 0.0, 0.0}, 8.0, 1.0, 1.0, 10.0);
    PhasePolicy p2 = policy(0.1, 0.0, 0.0, {0.6, 0.0, 0.0}, 6.0, 0.0, 1.0, 0.0);
    p2.engaged_for_s = 40.0;
    p2.contemplate_prob = 0.5;
    PhasePolicy p3 = policy(0.3, 0.2, 0.1, {0.1, 0.0, 0.0}, 4.0, 1.0, 2.0, 20.0);
    c.phases = {p1, p2, p3};

    PhasePolicy learned2 = policy(0.15, 0.1, 0.05, {0.5, 0.0, 0.0}, 6.0, 0.9, 2.0, 20.0);
    learned2.contemplate_prob = 0.5;
    PhasePolicy learned3 = policy(0.7, 0.3, 0.2, {0.1, 0.0, 0.0}, 6.0, 1.0, 1.0, 20.0);
    c.second_session = {p1, learned2, learned3};
    c.seed = 37;
    return c;
}

// Continuous multimodal contact with long steady episodes.
CaretakerProfile intense() {
    CaretakerProfile c;
    c.name = "intense";
    PhasePolicy p1 = policy(1.0, 0.8, 0.7, {0.8, 0.6, 0.6}, 20.0, 1.0, 0.5, 10.0);
    PhasePolicy p2 = policy(0.9, 0.5, 0.5, {0.7, 0.5, 0.5}, 15.0, 1.0, 1.0, 10.0);
    c.phases = {p1, p2, p1};
    c.seed = 41;
    return c;
}

}  // namespace

void PhasePolicy::validate() const {
    require_prob(face_prob, "face_prob");
    require_prob(smile_prob, "smile_prob");
    require_prob(contemplate_prob, "contemplate_prob");
    require_prob(toy_prob, "toy_prob");
    for (double p : touch_prob) require_prob(p, "touch_prob");
    require_prob(phantom_touch_prob, "phantom_touch_prob");
    require_prob(respond_to_call, "respond_to_call");
    if (!(episode_s > 0.0)) throw InvalidInput("episode_s must be > 0");
    if (!(respond_latency_s >= 0.0) || !(respond_duration_s >= 0.0)) {
        throw InvalidInput("response timing must be >= 0");
    }
}

const PhasePolicy& CaretakerProfile::policy(int phase, int session_index) const {
    const auto& set = session_index > 0 && !second_session.empty() ? second_session : phases;
    const auto i = static_cast<std::size_t>(std::clamp(phase, 1, static_cast<int>(set.size())) - 1);
    return set.at(i);
}

void CaretakerProfile::validate() const {
    if (phases.size() != 3) throw InvalidInput("profile '" + name + "' must define exactly 3 phases");
    if (!second_session.empty() && second_session.size() != 3) {
        throw InvalidInput("profile '" + name + "' second_session must define exactly 3 phases");
    }
    for (const auto& p : phases) p.validate();
    for (const auto& p : second_session) p.validate();
}

std::vector<CaretakerProfile> bundled_profiles() { return {attentive(), sparse(), distracted(), intense()}; }

CaretakerProfile silent_profile() {
    CaretakerProfile c;
    c.name = "silent";
    c.phases.assign(3, PhasePolicy{});
    return c;
}

std::optional<CaretakerProfile> profile_by_name(const std::string& name) {
    if (name == "silent") return silent_profile();
    for (auto& p : bundled_profiles()) {
        if (p.name == name) return p;
    }
    return std::nullopt;
}

namespace {

nlohmann::json policy_to_json(const PhasePolicy& p) {
    return {{"face_prob", p.face_prob},
            {"smile_prob", p.smile_prob},
            {"contemplate_prob", p.contemplate_prob},
            {"toy_prob", p.toy_prob},
            {"touch_prob", p.touch_prob},
            {"phantom_touch_prob", p.phantom_touch_prob},
            {"episode_s", p.episode_s},
            {"engaged_for_s", p.engaged_for_s},
            {"respond_to_call", p.respond_to_call},
            {"respond_latency_s", p.respond_latency_s},
            {"respond_duration_s", p.respond_duration_s}};
}

PhasePolicy policy_from_json(const nlohmann::json& j) {
    PhasePolicy p;
    p.face_prob = j.value("face_prob", p.face_prob);
    p.smile_prob = j.value("smile_prob", p.smile_prob);
    p.contemplate_prob = j.value("contemplate_prob", p.contemplate_prob);
    p.toy_prob = j.value("toy_prob", p.toy_prob);
    if (j.contains("touch_prob")) p.touch_prob = j.at("touch_prob").get<std::array<double, 3>>();
    p.phantom_touch_prob = j.value("phantom_touch_prob", p.phantom_touch_prob);
    p.episode_s = j.value("episode_s", p.episode_s);
    p.engaged_for_s = j.value("engaged_for_s", p.engaged_for_s);
    p.respond_to_call = j.value("respond_to_call", p.respond_to_call);
    p.respond_latency_s = j.value("respond_latency_s", p.respond_latency_s);
    p.respond_duration_s = j.value("respond_duration_s", p.respond_duration_s);
    return p;
}

}  // namespace

nlohmann::json profile_to_json(const CaretakerProfile& profile) {
    nlohmann::json j;
    j["name"] = profile.name;
    j["seed"] = profile.seed;
    j["phases"] = nlohmann::json::array();
    for (const auto& p : profile.phases) j["phases"].push_back(policy_to_json(p));
    if (!profile.second_session.empty()) {
        j["second_session"] = nlohmann::json::array();
        for (const auto& p : profile.second_session) j["second_session"].push_back(policy_to_json(p));
    }
    return j;
}

CaretakerProfile profile_from_json(const nlohmann::json& j) {
    try {
        CaretakerProfile c;
        c.name = j.value("name", std::string("custom"));
        c.seed = j.value("seed", std::uint64_t{0});
        for (const auto& p : j.at("phases")) c.phases.push_back(policy_from_json(p));
        if (j.contains("second_session")) {
            for (const auto& p : j.at("second_session")) c.second_session.push_back(policy_from_json(p));
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed caretaker profile: ") + e.what());
    }
}

bool ScriptedCaretaker::Chain::step(Rng& rng, double p, double episode_ticks) {
    // Draw unconditionally so the stream position does not depend on state.
    const double u = rng.uniform();
    if (p <= 0.0) {
        on = false;
    } else if (p >= 1.0) {
        on = true;
    } else {
        const double leave = 1.0 / std::max(1.0, episode_ticks);
        const double enter = std::min(1.0, p * leave / (1.0 - p));
        on = on ? u >= leave : u < enter;
    }
    return on;
}

ScriptedCaretaker::ScriptedCaretaker(CaretakerProfile profile, Palette palette, int tick_hz,
                                     std::uint64_t seed, int session_index)
    : profile_(std::move(profile)),
      palette_(std::move(palette)),
      tick_hz_(tick_hz),
      session_index_(session_index),
      rng_(Rng::mix(seed, profile_.seed ^ 0xca7e)) {
    profile_.validate();
}

PerceptionEvents ScriptedCaretaker::policy_tick(int phase, std::int64_t tick_in_phase,
                                                std::int64_t tick,
                                                const std::vector<ActionCommand>& visible_actions) {
    const PhasePolicy& p = profile_.policy(phase, session_index_);
    const double hz = static_cast<double>(tick_hz_);
    const double episode = p.episode_s * hz;
    const bool engaged =
        p.engaged_for_s < 0.0 || static_cast<double>(tick_in_phase) < p.engaged_for_s * hz;
    const double gate = engaged ? 1.0 : 0.0;

    const bool face = face_.step(rng_, gate * p.face_prob, episode);
    const bool smile = smile_.step(rng_, gate * p.smile_prob, episode);
    const bool was_toy = toy_.on;
    const bool toy = toy_.step(rng_, gate * p.toy_prob, episode);
    const std::uint64_t color_draw = rng_.next();
    if (toy && !was_toy && !palette_.empty()) toy_color_ = palette_[color_draw % palette_.size()];
    std::array<bool, 3> touch{};
    for (std::size_t r = 0; r < 3; ++r) touch[r] = touch_[r].step(rng_, gate * p.touch_prob[r], episode);
    const bool contemplate = rng_.bernoulli(p.contemplate_prob);
    const bool phantom = rng_.bernoulli(gate * p.phantom_touch_prob);
    const std::uint64_t phantom_region = rng_.below(3);
    const std::int64_t phantom_taxels = rng_.between(0, 5);
    const std::int64_t phantom_pressure = rng_.between(0, 119);
    std::array<std::int64_t, 3> taxels{};
    std::array<std::int64_t, 3> pressure_tenths{};
    for (std::size_t r = 0; r < 3; ++r) {
        taxels[r] = rng_.between(6, 14);
        pressure_tenths[r] = rng_.between(125, 250);
    }

    const bool called = std::any_of(visible_actions.begin(), visible_actions.end(),
                                    [](const ActionCommand& a) { return a.verb == Verb::straighten_up; });
    const bool answers = rng_.bernoulli(p.respond_to_call);
    if (called && answers) {
        response_start_ = tick + std::llround(p.respond_latency_s * hz);
        response_end_ = *response_start_ + std::llround(p.respond_duration_s * hz);
    }
    const bool responding = response_start_ && tick >= *response_start_ && tick < response_end_;

    PerceptionEvents ev;
    if (face || responding) {
        AUSet aus;
        if (smile || responding) {
            aus = canonical_aus(Expression::smiling);
        } else if (contemplate) {
            aus = canonical_aus(Expression::contemplating);
        }
        ev.face = aus;
    }
    if (toy && !toy_color_.empty()) ev.toys.push_back(toy_color_);
    for (std::size_t r = 0; r < 3; ++r) {
        if (touch[r] || (responding && r == 0)) {
            ev.touches.push_back({kRegions[r], static_cast<int>(taxels[r]),
                                  static_cast<double>(pressure_tenths[r]) / 10.0});
        }
    }
    if (phantom) {
        ev.touches.push_back({kRegions[phantom_region], static_cast<int>(phantom_taxels),
                              static_cast<double>(phantom_pressure) / 10.0});
    }
    return ev;
}

SessionLog run_session(const SessionSetup& setup, const CaretakerProfile& profile,
                       int session_index, LogWriter* writer) {
    SessionEngine engine(setup);
    ScriptedCaretaker caretaker(profile, setup.palette, setup.params.tick_hz, setup.config.seed,
                                session_index);
    SessionRecorder recorder(setup);
    const SocialParams& params = setup.params;
    const std::int64_t phase_ticks = setup.phase_ticks();

    std::vector<ActionCommand> visible;
    while (!engine.done()) {
        const std::int64_t tick = engine.next_tick();
        const int phase = setup.phase_of(tick);
        const PerceptionEvents events =
            caretaker.policy_tick(phase, tick - (phase - 1) * phase_ticks, tick, visible);
        const TickRecord& r = engine.advance(events);

        const ComfortState& c = engine.comfort();
        if (!(c.c > 0.0 && c.c <= params.c_max) || !(c.beta > 0.0 && c.beta < 1.0)) {
            throw std::logic_error("comfort state out of bounds at tick " + std::to_string(tick));
        }
        if (setup.config.mode == SessionMode::fixed && (c.beta != params.beta0 || c.tau != params.tau0)) {
            throw std::logic_error("fixed-mode parameters changed at tick " + std::to_string(tick));
        }
        recorder.append(r);
        if (writer) writer->append_and_flush(r);
        visible = r.actions;
    }
    return recorder.take();
}

SessionSetup ExperimentConfig::session_setup(int session_index) const {
    SessionSetup s = base;
    const bool adaptive_first = order == OrderGroup::AF;
    const bool adaptive = (session_index == 0) == adaptive_first;
    s.config.mode = adaptive ? SessionMode::adaptive : SessionMode::fixed;
    s.config.seed = Rng::mix(seed, static_cast<std::uint64_t>(session_index));
    s.source = profile.name;
    return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.profile.validate();
    ExperimentResult out;
    // Each session builds its engine from the base setup: architecture values
    // start from (beta0, tau0, c_init) regardless of the previous session.
    out.first = run_session(config.session_setup(0), config.profile, 0);
    out.second = run_session(config.session_setup(1), config.profile, 1);
    out.first_metrics = compute_metrics(out.first);
    out.second_metrics = compute_metrics(out.second);
    out.summary_csv = export_summary({out.first_metrics, out.second_metrics}, config.order);
    return out;
}

}  // namespace comfortsim
