#include "doctest.h"

#include "comfortsim/metrics.hpp"
#include "comfortsim/session.hpp"
#include "comfortsim/session_log.hpp"
#include "property_support.hpp"

using namespace comfortsim;


TEST_CASE("state machine invariants over randomised sessions") {
    int total_hits = 0;
    for (auto mode : {SessionMode::adaptive, SessionMode::fixed}) {
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            const testing::Violations v = testing::run_random(mode, seed, 10000);
            INFO("mode " << to_string(mode) << " seed " << seed);
            CHECK(v.threshold_while_blocked == 0);
            CHECK(v.late_resolution == 0);
            CHECK(v.unresolved == 0);
            CHECK(v.frozen_changed == 0);
            CHECK(v.out_of_bounds == 0);
            CHECK(v.illegal_action == 0);
            total_hits += v.hits;
        }
    }
    CHECK(total_hits > 100);
}

TEST_CASE("random sessions replay identically") {
    for (std::uint64_t seed : {3u, 17u}) {
        SessionSetup setup;
        setup.config.seed = seed;
        setup.config.mode = seed % 2 ? SessionMode::fixed : SessionMode::adaptive;
        SessionEngine engine(setup);
        testing::RandomCaretaker caretaker(seed);
        SessionLog log;
        log.setup = setup;
        while (!engine.done()) log.records.push_back(engine.advance(caretaker.next()));
        const std::string text = to_text(log);
        const ReplayResult r = replay(text);
        CHECK(r.identical);
        CHECK(replay(r.regenerated).regenerated == r.regenerated);
        CHECK_NOTHROW(compute_metrics(log));
    }
}
