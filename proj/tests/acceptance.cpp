// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "comfortsim/caretaker.hpp"
#include "comfortsim/comfort.hpp"
#include "comfortsim/metrics.hpp"
#include "comfortsim/perception.hpp"
#include "comfortsim/pollinator.hpp"
#include "comfortsim/session.hpp"
#include "comfortsim/session_log.hpp"
#include "property_support.hpp"

using namespace comfortsim;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SessionSetup setup_for(SessionMode mode, std::uint64_t seed) {
    SessionSetup s;
    s.config.mode = mode;
    s.config.seed = seed;
    return s;
}

PerceptionEvents full_stimulus() {
    PerceptionEvents ev;
    ev.face = canonical_aus(Expression::smiling);
    ev.toys.push_back(default_palette().front());
    for (auto r : {Region::left_arm, Region::right_arm, Region::torso}) ev.touches.push_back({r, 8, 20.0});
    return ev;
}

std::int64_t first_event_tick(SessionEngine& engine, const PerceptionEvents& ev, ThresholdKind kind) {
    while (!engine.done()) {
        const TickRecord& r = engine.advance(ev);
        if (r.event == kind) return r.tick;
    }
    return -1;
}

std::int64_t brute_ticks_to_critical(ComfortState s, const SocialParams& p) {
    std::int64_t n = 0;
    while (s.c > p.c_critical) {
        s = step_comfort(s, 0.0, 0.0, p);
        ++n;
    }
    return n;
}

Outcome calibration() {
    Outcome o;
    const auto t0 = Clock::now();
    const SocialParams p = SocialParams::defaults();
    const Thresholds th = calibrate_thresholds(p, 90.0, 90.0);
    o.require(std::abs(th.c_critical - p.c_critical) < 1e-9 &&
                  std::abs(th.c_saturation - p.c_saturation) < 1e-9,
              "default thresholds differ from calibration");

    SessionEngine silent(setup_for(SessionMode::fixed, 1));
    const auto crit = first_event_tick(silent, {}, ThresholdKind::critical);
    SessionEngine full(setup_for(SessionMode::fixed, 1));
    const auto sat = first_event_tick(full, full_stimulus(), ThresholdKind::saturation);
    const double elapsed = seconds_since(t0);

    // The trigger tick is record index n-1 after n steps.
    o.require(std::llabs(crit + 1 - 900) <= 1, fmt("critical at tick %lld", (long long)crit));
    o.require(std::llabs(sat + 1 - 900) <= 1, fmt("saturation at tick %lld", (long long)sat));
    o.require(elapsed < 1.0, fmt("took %.3f s", elapsed));
    if (o.pass) {
        o.detail = fmt("c_crit=%.6f c_sat=%.6f critical@%lld saturation@%lld", th.c_critical,
                       th.c_saturation, (long long)crit, (long long)sat);
    }
    return o;
}

Outcome adaptation() {
    Outcome o;
    const SocialParams p = SocialParams::defaults();
    const ComfortState s = adapt_critical(adapt_critical(ComfortState::initial(p), p), p);
    const auto closed = time_to_threshold(s, p, ThresholdKind::critical);
    o.require(closed.has_value(), "closed form reports no crossing");
    if (!closed) return o;
    const std::int64_t brute = brute_ticks_to_critical(s, p);
    o.require(std::abs(*closed - 450.0) <= 9.0, fmt("closed form %.3f s", *closed));
    o.require(std::abs(brute / 10.0 - 450.0) <= 9.0, fmt("simulation %lld ticks", (long long)brute));
    o.require(std::llabs(std::llround(*closed * 10.0) - brute) <= 1,
              fmt("closed %.3f s vs simulated %lld ticks", *closed, (long long)brute));
    if (o.pass) o.detail = fmt("closed=%.3f s simulated=%lld ticks", *closed, (long long)brute);
    return o;
}

Outcome fixed_point() {
    Outcome o;
    const SocialParams p = SocialParams::defaults();
    const double factor = p.tau0 / (p.tau0 + 0.1);
    double worst_ratio = 0.0;
    for (double S : {0.5, 1.0, 1.5, 2.0}) {
        ComfortState s = ComfortState::initial(p);
        s.c = 1.0;
        const double target = 10.0 * S;
        double gap = s.c - target;
        for (int i = 0; i < 200000; ++i) {
            s = step_comfort(s, S / 2.0, S / 2.0, p);
            const double next = s.c - target;
            // Below a gap of 1e-2 the ratio is dominated by the rounding of c (~4e-15 / gap).
            if (std::abs(gap) > 1e-2) {
                const double err = std::abs(next / gap - factor);
                worst_ratio = std::max(worst_ratio, err);
            }
            gap = next;
        }
        o.require(std::abs(s.c - target) <= 1e-6, fmt("S=%.1f ends at %.9f", S, s.c));
    }
    o.require(worst_ratio <= 1e-12, fmt("gap ratio error %.3g", worst_ratio));
    if (o.pass) o.detail = fmt("max gap ratio error %.2g", worst_ratio);
    return o;
}

// Critical trigger ticks paired with their resolution, in order. Windows do
// not overlap, so the k-th resolution belongs to the k-th trigger.
std::vector<std::pair<std::int64_t, bool>> critical_calls(const SessionLog& log) {
    std::vector<std::int64_t> triggers;
    std::vector<bool> resolved;
    for (const auto& r : log.records) {
        if (r.event == ThresholdKind::critical) triggers.push_back(r.tick);
        if (r.call) resolved.push_back(*r.call);
    }
    std::vector<std::pair<std::int64_t, bool>> out;
    for (std::size_t i = 0; i < triggers.size() && i < resolved.size(); ++i) {
        out.emplace_back(triggers[i], resolved[i]);
    }
    return out;
}

Outcome distracted_hits() {
    Outcome o;
    const auto t0 = Clock::now();
    ExperimentConfig cfg;
    cfg.profile = *profile_by_name("distracted");
    cfg.seed = 7;
    cfg.order = OrderGroup::FA;
    const ExperimentResult fa = run_experiment(cfg);
    const ExperimentResult again = run_experiment(cfg);
    cfg.order = OrderGroup::AF;
    const ExperimentResult af = run_experiment(cfg);
    const double elapsed = seconds_since(t0);

    const int f = fa.fixed().hits_critical, a = fa.adaptive().hits_critical;
    o.require(f > a, fmt("FA fixed %d vs adaptive %d", f, a));
    o.require(std::abs(af.fixed().hits_critical - af.adaptive().hits_critical) <= 1,
              fmt("AF fixed %d vs adaptive %d", af.fixed().hits_critical, af.adaptive().hits_critical));
    o.require(to_text(fa.first) == to_text(again.first) && to_text(fa.second) == to_text(again.second),
              "rerun differs");

    // Reference period: consecutive ignored calls with no caretaker at all.
    const SessionMetrics silent =
        compute_metrics(run_session(setup_for(SessionMode::fixed, 7), silent_profile()));
    const std::int64_t period = silent.critical_ticks.size() >= 2
                                    ? silent.critical_ticks[1] - silent.critical_ticks[0]
                                    : -1;

    const SessionLog& fixed_log = fa.first.setup.config.mode == SessionMode::fixed ? fa.first : fa.second;
    std::vector<std::int64_t> pre;
    for (const auto& [tick, responded] : critical_calls(fixed_log)) {
        if (responded) break;
        pre.push_back(tick);
    }
    o.require(pre.size() >= 2, fmt("%zu ignored hits before the first response", pre.size()));
    for (std::size_t i = 1; i < pre.size(); ++i) {
        o.require(pre[i] - pre[i - 1] == period,
                  fmt("interval %lld vs period %lld", (long long)(pre[i] - pre[i - 1]), (long long)period));
    }
    o.require(elapsed < 5.0, fmt("took %.3f s", elapsed));
    if (o.pass) {
        o.detail = fmt("FA F=%d A=%d, AF F=%d A=%d, %zu pre-response hits every %lld ticks", f, a,
                       af.fixed().hits_critical, af.adaptive().hits_critical, pre.size(), (long long)period);
    }
    return o;
}

Outcome saturation_skew() {
    Outcome o;
    int intense = 0, total_critical = 0;
    for (const auto& profile : bundled_profiles()) {
        for (auto mode : {SessionMode::adaptive, SessionMode::fixed}) {
            const SessionMetrics m = compute_metrics(run_session(setup_for(mode, 7), profile));
            total_critical += m.hits_critical;
            if (profile.name == "intense") {
                intense += m.hits_saturation;
            } else {
                o.require(m.hits_saturation == 0,
                          fmt("%s/%c has %d saturation hits", profile.name.c_str(), m.session, m.hits_saturation));
            }
        }
    }
    o.require(intense >= 1, "no saturation hits in the intense sessions");
    o.require(total_critical > intense, "saturation hits do not form the minority");
    if (o.pass) o.detail = fmt("saturation %d (intense only), critical %d", intense, total_critical);
    return o;
}

Outcome perception_rules() {
    Outcome o;
    std::ifstream in(COMFORTSIM_TEST_DATA "/expression_truth_table.csv");
    o.require(static_cast<bool>(in), "golden table missing");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        unsigned bits = 0;
        // Column order au6,au12,au4,au9,au10 matches AUSet::bits.
        for (int i = 0; i < 5; ++i) {
            std::getline(ss, cell, ',');
            if (cell == "1") bits |= 1u << i;
        }
        std::getline(ss, cell, ',');
        const AUSet aus = AUSet::from_bits(bits);
        o.require(to_string(classify_expression(aus)) == cell, "row " + line);
        ++rows;
    }
    o.require(rows == 32, fmt("%d rows", rows));
    int grid = 0;
    for (int taxels = 0; taxels <= 10; ++taxels) {
        for (double pressure : {0.0, 11.9, 12.0, std::nextafter(12.0, 13.0), 12.1, 50.0}) {
            const bool expect = taxels > 5 && pressure > 12.0;
            for (auto r : {Region::left_arm, Region::right_arm, Region::torso}) {
                o.require(filter_touch({r, taxels, pressure}) == expect,
                          fmt("touch %d taxels %.17g", taxels, pressure));
                ++grid;
            }
        }
    }
    if (o.pass) o.detail = fmt("%d expression rows, %d touch grid points", rows, grid);
    return o;
}

Outcome puzzle_oracle() {
    namespace pz = pollinator;
    Outcome o;
    const std::vector<pz::Op> ops{pz::Op::add, pz::Op::sub, pz::Op::mul, pz::Op::div};
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const pz::Puzzle p = pz::generate(seed, ops, 12);
        const auto t0 = Clock::now();
        const auto solutions = pz::solve(p);
        worst = std::max(worst, seconds_since(t0));

        pz::Assignment a{};
        std::iota(a.begin(), a.end(), std::uint8_t{0});
        int count = 0;
        pz::Assignment found{};
        do {
            if (p.satisfied_by(a)) {
                ++count;
                found = a;
            }
        } while (count < 2 && std::next_permutation(a.begin(), a.end()));
        o.require(count == 1, fmt("seed %llu: %d solutions by enumeration", (unsigned long long)seed, count));
        o.require(solutions.size() == 1 && solutions.front() == found && p.solution == found,
                  fmt("seed %llu: solver disagrees", (unsigned long long)seed));
    }
    o.require(worst < 1.0, fmt("slowest solve %.3f s", worst));

    const pz::Assignment sol{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    pz::PuzzleAnswer five;
    for (int i = 0; i < 5; ++i) five.set(i, i);
    const pz::Score s = pz::score(five, sol);
    o.require(s.completeness == 50.0 && s.accuracy == 100.0 && std::abs(s.combined - 80.0) < 1e-9,
              fmt("X=%g Y=%g Z=%g", s.completeness, s.accuracy, s.combined));
    if (o.pass) o.detail = fmt("100 unique puzzles, slowest solve %.1f ms, Z=%g", worst * 1e3, s.combined);
    return o;
}

Outcome determinism() {
    Outcome o;
    std::vector<CaretakerProfile> profiles = bundled_profiles();
    profiles.push_back(silent_profile());
    int logs = 0;
    for (const auto& profile : profiles) {
        for (auto order : {OrderGroup::FA, OrderGroup::AF}) {
            ExperimentConfig cfg;
            cfg.profile = profile;
            cfg.seed = 7;
            cfg.order = order;
            const ExperimentResult r1 = run_experiment(cfg);
            const ExperimentResult r2 = run_experiment(cfg);
            for (const auto* pair : {&r1.first, &r1.second}) {
                const SessionLog& other = pair == &r1.first ? r2.first : r2.second;
                const std::string text = to_text(*pair);
                const std::string label = profile.name + "/" + std::string(to_string(order));
                o.require(text == to_text(other), label + " rerun differs");
                const ReplayResult rr = replay(text);
                o.require(rr.identical, label + " replay diverged: " + rr.diagnostic);
                ++logs;
            }
            o.require(r1.summary_csv == r2.summary_csv, profile.name + " summary differs");
        }
    }
    if (o.pass) o.detail = fmt("%d logs byte-identical on rerun and replay", logs);
    return o;
}

Outcome invariants() {
    Outcome o;
    int hits = 0;
    for (auto mode : {SessionMode::adaptive, SessionMode::fixed}) {
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            const testing::Violations v = testing::run_random(mode, seed, 10000);
            const std::string label = fmt("%s seed %llu", std::string(to_string(mode)).c_str(),
                                          (unsigned long long)seed);
            o.require(v.threshold_while_blocked == 0, label + ": threshold during suspension");
            o.require(v.late_resolution == 0, label + ": call resolved outside its window");
            o.require(v.unresolved == 0, label + ": unresolved call");
            o.require(v.frozen_changed == 0, label + ": fixed-mode parameters changed");
            o.require(v.out_of_bounds == 0, label + ": comfort out of bounds");
            o.require(v.illegal_action == 0, label + ": action outside the state's repertoire");
            hits += v.hits;
        }
    }
    o.require(hits > 0, "no threshold events exercised");
    if (o.pass) o.detail = fmt("100 runs x 10000 ticks, %d threshold events", hits);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"calibration-fidelity", calibration},
        {"adaptation-fidelity", adaptation},
        {"fixed-point", fixed_point},
        {"distracted-fa-hits", distracted_hits},
        {"saturation-skew", saturation_skew},
        {"expression-and-touch-rules", perception_rules},
        {"puzzle-oracle", puzzle_oracle},
        {"determinism-replay", determinism},
        {"state-machine-invariants", invariants},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s %s (%.0f ms) %s\n", o.pass ? "PASS" : "FAIL", name, seconds_since(t0) * 1e3,
                    o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
