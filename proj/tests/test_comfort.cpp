#include "doctest.h"

#include <cmath>
#include <limits>

#include "comfortsim/comfort.hpp"

using namespace comfortsim;

namespace {

std::int64_t ticks_until_critical(ComfortState s, const SocialParams& p) {
    std::int64_t n = 0;
    while (s.c > p.c_critical) {
        s = step_comfort(s, 0.0, 0.0, p);
        ++n;
    }
    return n;
}

std::int64_t ticks_until_saturation(ComfortState s, const SocialParams& p) {
    std::int64_t n = 0;
    while (s.c < p.c_saturation) {
        s = step_comfort(s, 1.0, 1.0, p);
        ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("one-step decay and growth") {
    const SocialParams p = SocialParams::defaults();
    ComfortState s = ComfortState::initial(p);
    CHECK(s.c == 10.0);

    const ComfortState d = step_comfort(s, 0.0, 0.0, p);
    CHECK(d.c == doctest::Approx(9.98).epsilon(1e-12));
    CHECK(d.tick == 1);

    const ComfortState g = step_comfort(s, 1.0, 1.0, p);
    CHECK(g.c == doctest::Approx(5002.0 / 500.1).epsilon(1e-12));
    CHECK(g.c == doctest::Approx(10.0020).epsilon(1e-5));
}

TEST_CASE("900 ticks of decay from 10 reach 1.650") {
    const SocialParams p = SocialParams::defaults();
    ComfortState s = ComfortState::initial(p);
    double loop = 10.0;
    for (int i = 0; i < 900; ++i) {
        s = step_comfort(s, 0.0, 0.0, p);
        loop *= 0.998;
    }
    CHECK(s.c == doctest::Approx(loop).epsilon(1e-12));
    CHECK(s.c == doctest::Approx(10.0 * std::pow(0.998, 900)).epsilon(1e-10));
    CHECK(std::abs(s.c - 1.650) < 5e-4);
}

TEST_CASE("constant stimulus converges to 10 S") {
    const SocialParams p = SocialParams::defaults();
    for (double S : {0.5, 1.0, 1.5, 2.0}) {
        ComfortState s = ComfortState::initial(p);
        s.c = 1.0;
        for (int i = 0; i < 200000; ++i) s = step_comfort(s, S / 2, S / 2, p);
        CHECK(s.c == doctest::Approx(10.0 * S).epsilon(1e-9));
    }
}

TEST_CASE("stimulus validation") {
    const SocialParams p = SocialParams::defaults();
    const ComfortState s = ComfortState::initial(p);
    CHECK_THROWS_AS(step_comfort(s, -0.1, 0.0, p), InvalidInput);
    CHECK_THROWS_AS(step_comfort(s, 0.0, 1.5, p), InvalidInput);
    CHECK_THROWS_AS(step_comfort(s, std::numeric_limits<double>::quiet_NaN(), 0.0, p), InvalidInput);
    CHECK_NOTHROW(step_comfort(s, 1.0, 0.0, p));
}

TEST_CASE("clamping keeps comfort inside (0, c_max]") {
    SocialParams p = SocialParams::defaults();
    ComfortState s = ComfortState::initial(p);
    s.c = 1e-10;
    CHECK(step_comfort(s, 0.0, 0.0, p).c == kComfortFloor);
    s.c = 20.0;
    for (int i = 0; i < 100; ++i) s = step_comfort(s, 1.0, 1.0, p);
    CHECK(s.c <= p.c_max);
    CHECK(s.c > 0.0);
}

TEST_CASE("threshold checks") {
    const SocialParams p = SocialParams::defaults();
    ComfortState s = ComfortState::initial(p);
    CHECK_FALSE(check_thresholds(s, p, false));

    s.c = p.c_critical;
    auto ev = check_thresholds(s, p, false);
    REQUIRE(ev);
    CHECK(ev->kind == ThresholdKind::critical);
    CHECK_FALSE(check_thresholds(s, p, true));

    s.c = p.c_saturation;
    ev = check_thresholds(s, p, false);
    REQUIRE(ev);
    CHECK(ev->kind == ThresholdKind::saturation);
    CHECK_FALSE(check_thresholds(s, p, true));

    SUBCASE("a fired kind waits for re-arming") {
        ComfortState low = ComfortState::initial(p);
        low.c = p.c_critical * 0.9;
        low = disarm(low, ThresholdKind::critical);
        CHECK_FALSE(check_thresholds(low, p, false));
        low = advance_to(low, p.c_critical * 0.8, p);
        CHECK_FALSE(check_thresholds(low, p, false));
        low = advance_to(low, p.c_critical * 1.1, p);
        low = advance_to(low, p.c_critical, p);
        CHECK(check_thresholds(low, p, false));
    }
}

TEST_CASE("critical adaptation shrinks the beta gap") {
    const SocialParams p = SocialParams::defaults();
    ComfortState s = ComfortState::initial(p);
    s = adapt_critical(s, p);
    CHECK(s.n_critical == 1);
    CHECK(s.c == 10.0);
    CHECK(s.beta == doctest::Approx(1.0 - 0.002 / std::sqrt(5.0)).epsilon(1e-14));
    CHECK(s.beta == doctest::Approx(0.999106).epsilon(1e-6));
    s = adapt_critical(s, p);
    CHECK(s.beta == doctest::Approx(0.9996).epsilon(1e-13));
    CHECK(1.0 - s.beta == doctest::Approx(0.0004).epsilon(1e-9));

    ComfortState many = ComfortState::initial(p);
    for (int k = 0; k < 200; ++k) {
        many = adapt_critical(many, p);
        CHECK(many.beta < 1.0);
    }
}

TEST_CASE("additive critical mode is capped below one") {
    SocialParams p = SocialParams::defaults();
    p.critical_step_mode = CriticalStepMode::additive;
    ComfortState s = ComfortState::initial(p);
    s = adapt_critical(s, p);
    CHECK(s.beta == doctest::Approx(0.9999));
    s = adapt_critical(s, p);
    CHECK(s.beta == doctest::Approx(0.9999));
}

TEST_CASE("saturation adaptation adds tau_step") {
    const SocialParams p = SocialParams::defaults();
    ComfortState s = ComfortState::initial(p);
    s = adapt_saturation(s, p);
    CHECK(s.tau == 1000.0);
    s = adapt_saturation(s, p);
    CHECK(s.tau == 1500.0);
    CHECK(s.n_saturation == 2);
    CHECK(s.tau == p.tau0 + s.n_saturation * p.tau_step);

    double prev = 0.0;
    for (double tau : {500.0, 1000.0, 1500.0, 5000.0}) {
        const double factor = tau / (tau + 0.1);
        CHECK(factor > prev);
        prev = factor;
    }
}

TEST_CASE("time to threshold matches simulation") {
    const SocialParams p = SocialParams::defaults();
    ComfortState s = ComfortState::initial(p);

    const auto crit = time_to_threshold(s, p, ThresholdKind::critical);
    REQUIRE(crit);
    CHECK(std::abs(*crit - 90.0) <= 0.1);
    CHECK(std::llabs(std::llround(*crit * 10) - ticks_until_critical(s, p)) <= 1);

    const auto sat = time_to_threshold(s, p, ThresholdKind::saturation);
    REQUIRE(sat);
    CHECK(std::abs(*sat - 90.0) <= 0.1);
    CHECK(std::llabs(std::llround(*sat * 10) - ticks_until_saturation(s, p)) <= 1);

    ComfortState adapted = adapt_critical(adapt_critical(s, p), p);
    const auto slow = time_to_threshold(adapted, p, ThresholdKind::critical);
    REQUIRE(slow);
    CHECK(std::abs(*slow - 450.0) <= 9.0);
    CHECK(std::llabs(std::llround(*slow * 10) - ticks_until_critical(adapted, p)) <= 1);

    CHECK_FALSE(time_to_threshold(s, p, ThresholdKind::saturation, 1.0));
}

TEST_CASE("S = 1 never saturates in a long simulation") {
    const SocialParams p = SocialParams::defaults();
    ComfortState s = ComfortState::initial(p);
    for (int i = 0; i < 100000; ++i) {
        s = step_comfort(s, 0.5, 0.5, p);
        REQUIRE(s.c < p.c_saturation);
    }
}

TEST_CASE("adaptations lengthen time to threshold") {
    const SocialParams p = SocialParams::defaults();
    ComfortState s = ComfortState::initial(p);
    double last_crit = *time_to_threshold(s, p, ThresholdKind::critical);
    double last_sat = *time_to_threshold(s, p, ThresholdKind::saturation);
    for (int k = 0; k < 4; ++k) {
        s = adapt_critical(s, p);
        s = adapt_saturation(s, p);
        const double c = *time_to_threshold(s, p, ThresholdKind::critical);
        const double t = *time_to_threshold(s, p, ThresholdKind::saturation);
        CHECK(c > last_crit);
        CHECK(t > last_sat);
        last_crit = c;
        last_sat = t;
    }
}

TEST_CASE("calibration") {
    SocialParams p = SocialParams::defaults();
    const Thresholds t = calibrate_thresholds(p, 90.0, 90.0);
    CHECK(t.c_critical == doctest::Approx(10.0 * std::pow(0.998, 900)).epsilon(1e-12));
    CHECK(t.c_saturation == doctest::Approx(20.0 - 10.0 * std::pow(500.0 / 500.1, 900)).epsilon(1e-12));
    CHECK(std::abs(t.c_critical - 1.650) < 5e-4);
    CHECK(std::abs(t.c_saturation - 11.647) < 5e-4);

    // Iterative oracles.
    double c = 10.0, g = 10.0;
    for (int i = 0; i < 900; ++i) {
        c *= 0.998;
        g = (2.0 + g * 500.0) / 500.1;
    }
    CHECK(t.c_critical == doctest::Approx(c).epsilon(1e-10));
    CHECK(t.c_saturation == doctest::Approx(g).epsilon(1e-10));

    const Thresholds tiny = calibrate_thresholds(p, 1e-6, 1e-6);
    CHECK(tiny.c_critical == doctest::Approx(p.c_init).epsilon(1e-6));

    CHECK_THROWS_AS(calibrate_thresholds(p, 0.0, 90.0), InvalidInput);
    CHECK_THROWS_AS(calibrate_thresholds(p, 90.0, -1.0), InvalidInput);
    CHECK_THROWS_AS(calibrate_thresholds(p, 1e9, 90.0), InvalidInput);
}

TEST_CASE("parameter validation") {
    SocialParams p = SocialParams::defaults();
    CHECK_NOTHROW(p.validate());
    p.beta0 = 1.0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p = SocialParams::defaults();
    p.c_critical = 12.0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p = SocialParams::defaults();
    p.c_init = 9.0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p = SocialParams::defaults();
    p.tick_hz = 0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
}
