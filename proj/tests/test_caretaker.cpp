#include "doctest.h"

#include "comfortsim/caretaker.hpp"

using namespace comfortsim;

namespace {

struct Rates {
    double face = 0.0;
    double smile = 0.0;
    double toy = 0.0;
    std::array<double, 3> touch{};
};

// Empirical per-tick frequencies of one phase over `replicas` independent
// caretakers, no robot actions visible.
Rates measure(const CaretakerProfile& profile, int phase, int replicas, std::int64_t ticks,
              int session_index = 0) {
    Rates r;
    std::int64_t n = 0;
    for (int k = 0; k < replicas; ++k) {
        ScriptedCaretaker c(profile, default_palette(), 10, 1000 + k, session_index);
        for (std::int64_t t = 0; t < ticks; ++t, ++n) {
            const auto ev = c.policy_tick(phase, t, t, {});
            if (ev.face) {
                r.face += 1;
                if (classify_expression(*ev.face) == Expression::smiling) r.smile += 1;
            }
            if (!ev.toys.empty()) r.toy += 1;
            for (const auto& touch : ev.touches) {
                if (filter_touch(touch)) r.touch[static_cast<std::size_t>(touch.region)] += 1;
            }
        }
    }
    r.face /= n;
    r.smile /= n;
    r.toy /= n;
    for (auto& t : r.touch) t /= n;
    return r;
}

}  // namespace

TEST_CASE("bundled profiles are valid") {
    const auto all = bundled_profiles();
    REQUIRE(all.size() == 4);
    for (const auto& p : all) {
        CHECK_NOTHROW(p.validate());
        CHECK(p.phases.size() == 3);
        CHECK(profile_from_json(profile_to_json(p)).phases.size() == 3);
        CHECK(profile_to_json(profile_from_json(profile_to_json(p))) == profile_to_json(p));
    }
    CHECK(profile_by_name("silent"));
    CHECK_FALSE(profile_by_name("nobody"));

    CaretakerProfile bad = *profile_by_name("attentive");
    bad.phases[1].face_prob = 1.5;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = *profile_by_name("attentive");
    bad.phases.pop_back();
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("attentive phase 1 frequencies follow the policy") {
    const CaretakerProfile p = *profile_by_name("attentive");
    const PhasePolicy& pol = p.phases[0];
    // Markov episodes are correlated, so the tolerance is wider than a
    // binomial interval over independent ticks.
    const Rates r = measure(p, 1, 20, 1000);
    CHECK(std::abs(r.face - pol.face_prob) < 0.05);
    CHECK(std::abs(r.toy - pol.toy_prob) < 0.05);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.touch[i] - pol.touch_prob[i]) < 0.04);
    CHECK(r.face > 0.8);
}

TEST_CASE("distracted caretaker drops the face but keeps touching during the task") {
    const CaretakerProfile p = *profile_by_name("distracted");
    const Rates p1 = measure(p, 1, 40, 2400);
    const Rates p2 = measure(p, 2, 40, 2400);
    CHECK(p2.face < 0.2 * p1.face);
    CHECK(p2.touch[0] > 0.8 * p1.touch[0]);
    CHECK(p2.touch[0] < 1.2 * p1.touch[0]);
}

TEST_CASE("a caretaker that never answers leaves every call ignored") {
    // Interacts for the first 30 s of the session, then only watches.
    CaretakerProfile p = *profile_by_name("attentive");
    for (auto& ph : p.phases) {
        ph.respond_to_call = 0.0;
        ph.engaged_for_s = 0.0;
    }
    p.phases[0].engaged_for_s = 30.0;
    SessionSetup s;
    s.config.mode = SessionMode::fixed;
    const SessionMetrics m = compute_metrics(run_session(s, p));
    CHECK(m.hits_critical > 0);
    CHECK(m.ignored == m.hits_critical);
}

TEST_CASE("answering caretaker responds to a visible call") {
    CaretakerProfile p = silent_profile();
    for (auto& ph : p.phases) {
        ph.respond_to_call = 1.0;
        ph.respond_latency_s = 1.0;
        ph.respond_duration_s = 5.0;
    }
    ScriptedCaretaker c(p, default_palette(), 10, 1);
    CHECK(c.policy_tick(1, 0, 0, {}).empty());
    c.policy_tick(1, 1, 1, {ActionCommand::plain(Verb::straighten_up)});
    for (std::int64_t t = 2; t < 11; ++t) CHECK(c.policy_tick(1, t, t, {}).empty());
    const auto ev = c.policy_tick(1, 11, 11, {});
    REQUIRE(ev.face);
    CHECK(classify_expression(*ev.face) == Expression::smiling);
    REQUIRE(ev.touches.size() == 1);
    CHECK(filter_touch(ev.touches[0]));
    CHECK(c.policy_tick(1, 61, 61, {}).empty());
}

TEST_CASE("saturation only for the intense profile") {
    for (const auto& profile : bundled_profiles()) {
        for (auto mode : {SessionMode::adaptive, SessionMode::fixed}) {
            SessionSetup s;
            s.config.mode = mode;
            s.config.seed = 7;
            const SessionMetrics m = compute_metrics(run_session(s, profile));
            INFO(profile.name << " " << m.session);
            if (profile.name == "intense") {
                if (mode == SessionMode::fixed) CHECK(m.hits_saturation >= 1);
            } else {
                CHECK(m.hits_saturation == 0);
            }
        }
    }
}

TEST_CASE("distracted experiments") {
    ExperimentConfig cfg;
    cfg.profile = *profile_by_name("distracted");
    cfg.seed = 7;
    cfg.order = OrderGroup::FA;
    const auto fa = run_experiment(cfg);
    CHECK(fa.fixed().hits_critical > fa.adaptive().hits_critical);
    CHECK(fa.summary_csv.find("FA,F,") != std::string::npos);

    cfg.order = OrderGroup::AF;
    const auto af = run_experiment(cfg);
    CHECK(std::abs(af.fixed().hits_critical - af.adaptive().hits_critical) <= 1);
}
