// comfortsim command-line entry point.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "comfortsim/caretaker.hpp"
#include "comfortsim/config.hpp"
#include "comfortsim/gateway.hpp"
#include "comfortsim/metrics.hpp"
#include "comfortsim/pollinator.hpp"

namespace fs = std::filesystem;
using namespace comfortsim;

namespace {

// Architecture flags shared by every subcommand that builds a session.
struct ArchFlags {
    std::string config_path;
    std::map<std::string, std::string> values;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path,
                        "key = value parameter file (default: $COMFORTSIM_CONFIG)")
            ->check(CLI::ExistingFile);
        for (const auto& key : ArchitectureConfig::keys()) {
            std::string flag = "--" + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            app->add_option(flag, values[key], "override " + key)->group("Architecture");
        }
    }

    ArchitectureConfig build() const {
        ArchitectureConfig cfg;
        std::string path = config_path;
        if (path.empty()) {
            if (const char* env = std::getenv("COMFORTSIM_CONFIG"); env && *env) path = env;
        }
        if (!path.empty()) cfg.load_file(path);
        for (const auto& [key, value] : values) {
            if (!value.empty()) cfg.set(key, value);
        }
        cfg.finalize();
        return cfg;
    }

    SessionSetup setup() const {
        const ArchitectureConfig cfg = build();
        SessionSetup s;
        s.params = cfg.params;
        s.weights = cfg.weights;
        s.palette = cfg.palette;
        return s;
    }
};

struct SessionFlags {
    double phase_s = 240.0;
    void attach(CLI::App* app) {
        app->add_option("--phase-s", phase_s, "phase length in seconds")->check(CLI::PositiveNumber);
    }
};

CaretakerProfile load_profile(const std::string& name_or_path) {
    if (auto p = profile_by_name(name_or_path)) return *p;
    if (fs::exists(name_or_path)) {
        std::ifstream in(name_or_path);
        return profile_from_json(nlohmann::json::parse(in));
    }
    throw CLI::ValidationError("--profile",
                               "unknown profile '" + name_or_path +
                                   "' (attentive, sparse, distracted, intense, silent or a JSON file)");
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void print_metrics(const SessionMetrics& m, std::ostream& out) {
    out << "session " << m.session << ": critical " << m.hits_critical << " (responded " << m.responded
        << ", ignored " << m.ignored << "), saturation " << m.hits_saturation << '\n';
    for (std::size_t p = 0; p < m.phases.size(); ++p) {
        const auto& d = m.phases[p];
        char line[256];
        std::snprintf(line, sizeof line,
                      "  phase %zu: idle %.1f%% interact %.1f%% suspend %.1f%% transitional %.1f%% | "
                      "face %.1f%% toy %.1f%% touch %.1f%%\n",
                      p + 1, d.idle, d.interact, d.suspend, d.transitional, d.face, d.toy, d.touch);
        out << line;
    }
}

std::vector<pollinator::Op> parse_ops(const std::string& text) {
    std::vector<pollinator::Op> ops;
    for (char c : text) {
        if (c == ',' || c == ' ') continue;
        const auto op = pollinator::parse_op(c);
        if (!op) throw CLI::ValidationError("--ops", std::string("unknown operator '") + c + "'");
        ops.push_back(*op);
    }
    if (ops.empty()) throw CLI::ValidationError("--ops", "no operators given");
    return ops;
}

pollinator::PuzzleAnswer parse_answer(const std::string& text) {
    pollinator::PuzzleAnswer a;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw CLI::ValidationError("--answer", "expected cell:digit pairs");
        a.set(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    }
    return a;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Comfort-driven social robot simulator"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run one scripted session and write its log");
    ArchFlags sim_arch;
    SessionFlags sim_session;
    std::string sim_profile = "attentive", sim_mode = "adaptive", sim_out;
    std::uint64_t sim_seed = 1;
    sim_arch.attach(sim);
    sim_session.attach(sim);
    sim->add_option("--profile", sim_profile, "bundled profile name or JSON file");
    sim->add_option("--mode", sim_mode, "adaptive|fixed (or A|F)");
    sim->add_option("--seed", sim_seed, "session seed");
    sim->add_option("--out,-o", sim_out, "log path (default: stdout summary only)");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run both sessions of an AF or FA experiment");
    ArchFlags exp_arch;
    SessionFlags exp_session;
    std::string exp_order = "FA", exp_profile = "distracted", exp_dir = "out";
    std::uint64_t exp_seed = 1;
    exp_arch.attach(exp);
    exp_session.attach(exp);
    exp->add_option("--order", exp_order, "AF or FA");
    exp->add_option("--profile", exp_profile, "bundled profile name or JSON file");
    exp->add_option("--seed", exp_seed, "experiment seed");
    exp->add_option("--out-dir", exp_dir, "directory for logs and summary.csv");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "solve thresholds for target crossing times");
    ArchFlags cal_arch;
    double t_crit = 90.0, t_sat = 90.0;
    bool cal_dump = false;
    cal_arch.attach(cal);
    cal->add_option("--t-critical", t_crit, "seconds from c_init to critical without stimuli");
    cal->add_option("--t-saturation", t_sat, "seconds from c_init to saturation under F=T=1");
    cal->add_flag("--dump-config", cal_dump, "print the full key = value configuration as well");

    // replay
    auto* rep = app.add_subcommand("replay", "re-drive a log and compare byte for byte");
    std::string rep_path, rep_out, rep_tick_hz;
    rep->add_option("log", rep_path, "session log")->required()->check(CLI::ExistingFile);
    rep->add_option("--tick-hz", rep_tick_hz,
                    "expected tick rate; rejected when it differs from the log");
    rep->add_option("--regenerated", rep_out, "also write the regenerated log here");

    // metrics
    auto* met = app.add_subcommand("metrics", "compute metrics and the summary table for logs");
    std::vector<std::string> met_logs;
    std::string met_group = "FA", met_csv;
    met->add_option("logs", met_logs, "session logs")->required()->check(CLI::ExistingFile);
    met->add_option("--group", met_group, "order group label for the table (AF or FA)");
    met->add_option("--csv", met_csv, "write the summary table here");

    // puzzle
    auto* puz = app.add_subcommand("puzzle", "pollinator puzzle tools");
    puz->require_subcommand(1);
    auto* gen = puz->add_subcommand("generate", "generate a unique-solution puzzle");
    std::uint64_t gen_seed = 1;
    std::string gen_ops = "+,-,*,/", gen_out;
    int gen_n = 12;
    bool gen_hide = false;
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--ops", gen_ops, "operator palette, e.g. \"+,*\"");
    gen->add_option("--constraints", gen_n, "initial number of constraints (>= 9)");
    gen->add_option("--out,-o", gen_out, "write the puzzle here instead of stdout");
    gen->add_flag("--hide-solution", gen_hide, "omit the solution line");
    auto* sol = puz->add_subcommand("solve", "list every solution of a puzzle file");
    std::string sol_path;
    std::size_t sol_limit = 20;
    sol->add_option("puzzle", sol_path, "puzzle file")->required()->check(CLI::ExistingFile);
    sol->add_option("--show", sol_limit, "print at most this many solutions");
    auto* sco = puz->add_subcommand("score", "score an answer against a puzzle's solution");
    std::string sco_path, sco_answer;
    bool sco_all = false;
    sco->add_option("puzzle", sco_path, "puzzle file with solution")->required()->check(CLI::ExistingFile);
    sco->add_option("--answer", sco_answer, "cell:digit pairs, e.g. 0:3,1:7")->required();
    sco->add_flag("--all-cells", sco_all, "accuracy over all ten cells instead of filled ones");

    // serve
    auto* srv = app.add_subcommand("serve", "run a live session for one remote caretaker");
    ArchFlags srv_arch;
    SessionFlags srv_session;
    gateway::ServeOptions srv_opts;
    gateway::LiveOptions live;
    std::string srv_mode = "adaptive", srv_log;
    std::uint64_t srv_seed = 1;
    srv_arch.attach(srv);
    srv_session.attach(srv);
    srv->add_option("--host", srv_opts.host, "IPv4 address to bind");
    srv->add_option("--port", srv_opts.port, "TCP port (0 = any free port)");
    srv->add_option("--mode", srv_mode, "adaptive|fixed");
    srv->add_option("--seed", srv_seed, "session seed");
    srv->add_option("--log", srv_log, "session log path");
    srv->add_option("--speed", srv_opts.speed, "run this many times faster than real time");
    srv->add_flag("--debug", live.debug, "include comfort, beta, tau, F, T in snapshots");
    srv->add_flag("--wait", srv_opts.wait_for_client, "start the clock when the first client connects");
    srv->add_option("--puzzle-seed", live.puzzle_seed, "seed of the phase-2 puzzle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim) {
            SessionSetup setup = sim_arch.setup();
            const auto mode = parse_mode(sim_mode);
            if (!mode) throw CLI::ValidationError("--mode", "expected adaptive or fixed");
            const CaretakerProfile profile = load_profile(sim_profile);
            setup.config.mode = *mode;
            setup.config.seed = sim_seed;
            setup.config.phase_s = sim_session.phase_s;
            setup.source = profile.name;
            setup.validate();
            std::ofstream file;
            std::unique_ptr<LogWriter> writer;
            if (!sim_out.empty()) {
                if (fs::path(sim_out).has_parent_path()) fs::create_directories(fs::path(sim_out).parent_path());
                file.open(sim_out, std::ios::binary);
                if (!file) throw std::runtime_error("cannot write " + sim_out);
                writer = std::make_unique<LogWriter>(file, setup);
            }
            const SessionLog log = run_session(setup, profile, 0, writer.get());
            print_metrics(compute_metrics(log), std::cout);
            if (!sim_out.empty()) std::cout << "log: " << sim_out << '\n';
        } else if (*exp) {
            ExperimentConfig cfg;
            const auto order = parse_order(exp_order);
            if (!order) throw CLI::ValidationError("--order", "expected AF or FA");
            cfg.order = *order;
            cfg.base = exp_arch.setup();
            cfg.base.config.phase_s = exp_session.phase_s;
            cfg.profile = load_profile(exp_profile);
            cfg.seed = exp_seed;
            const ExperimentResult r = run_experiment(cfg);
            const fs::path dir(exp_dir);
            const std::string stem = std::string(to_string(*order)) + "-" + cfg.profile.name + "-" +
                                     std::to_string(exp_seed);
            const fs::path first = dir / (stem + "-1" + r.first_metrics.session + ".log");
            const fs::path second = dir / (stem + "-2" + r.second_metrics.session + ".log");
            const fs::path summary = dir / (stem + "-summary.csv");
            write_file(first, to_text(r.first));
            write_file(second, to_text(r.second));
            write_file(summary, r.summary_csv);
            print_metrics(r.first_metrics, std::cout);
            print_metrics(r.second_metrics, std::cout);
            std::cout << "logs: " << first.string() << ' ' << second.string() << "\nsummary: " << summary.string()
                      << '\n';
        } else if (*cal) {
            const ArchitectureConfig cfg = cal_arch.build();
            const Thresholds t = calibrate_thresholds(cfg.params, t_crit, t_sat);
            std::printf("c_critical = %.6f\nc_saturation = %.6f\n", t.c_critical, t.c_saturation);
            if (cal_dump) {
                ArchitectureConfig out = cfg;
                out.params.c_critical = t.c_critical;
                out.params.c_saturation = t.c_saturation;
                std::cout << out.to_text();
            }
        } else if (*rep) {
            const std::string text = read_text_file(rep_path);
            std::optional<SocialParams> expected;
            if (!rep_tick_hz.empty()) {
                SocialParams p = parse_header(text.substr(0, text.find('\n'))).params;
                ArchitectureConfig arch{p, {}, {}, {}};
                arch.set("tick_hz", rep_tick_hz);
                expected = arch.params;
            }
            const ReplayResult r = replay(text, expected ? &*expected : nullptr);
            if (!rep_out.empty()) write_file(rep_out, r.regenerated);
            if (r.identical) {
                std::cout << "identical\n";
            } else {
                std::cout << "diverged\n" << r.diagnostic << '\n';
                return 1;
            }
        } else if (*met) {
            const auto group = parse_order(met_group);
            if (!group) throw CLI::ValidationError("--group", "expected AF or FA");
            std::vector<SessionMetrics> all;
            for (const auto& path : met_logs) {
                all.push_back(compute_metrics(read_log_file(path)));
                std::cout << path << '\n';
                print_metrics(all.back(), std::cout);
            }
            const std::string csv = export_summary(all, *group);
            if (met_csv.empty()) {
                std::cout << csv;
            } else {
                write_file(met_csv, csv);
            }
        } else if (*gen) {
            const auto puzzle = pollinator::generate(gen_seed, parse_ops(gen_ops), gen_n);
            const std::string text = pollinator::to_text(puzzle, !gen_hide);
            if (gen_out.empty()) {
                std::cout << text;
            } else {
                write_file(gen_out, text);
            }
        } else if (*sol) {
            const auto puzzle = pollinator::puzzle_from_text(read_text_file(sol_path));
            const auto t0 = std::chrono::steady_clock::now();
            const auto solutions = pollinator::solve(puzzle);
            const double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            std::cout << solutions.size() << " solution(s) in " << ms << " ms\n";
            for (std::size_t i = 0; i < solutions.size() && i < sol_limit; ++i) {
                for (auto d : solutions[i]) std::cout << static_cast<int>(d);
                std::cout << '\n';
            }
        } else if (*sco) {
            const auto puzzle = pollinator::puzzle_from_text(read_text_file(sco_path));
            if (!puzzle.solution) throw std::runtime_error(sco_path + " has no solution line");
            const auto s = pollinator::score(parse_answer(sco_answer), *puzzle.solution,
                                             sco_all ? pollinator::AccuracyBase::all_cells
                                                     : pollinator::AccuracyBase::filled);
            std::printf("X = %.2f\nY = %.2f\nZ = %.2f\n", s.completeness, s.accuracy, s.combined);
        } else if (*srv) {
            SessionSetup setup = srv_arch.setup();
            const auto mode = parse_mode(srv_mode);
            if (!mode) throw CLI::ValidationError("--mode", "expected adaptive or fixed");
            setup.config.mode = *mode;
            setup.config.seed = srv_seed;
            setup.config.phase_s = srv_session.phase_s;
            setup.source = "live";
            setup.validate();
            std::ofstream file;
            if (!srv_log.empty()) {
                file.open(srv_log, std::ios::binary);
                if (!file) throw std::runtime_error("cannot write " + srv_log);
            }
            gateway::LiveSession session(setup, live, srv_log.empty() ? nullptr : &file,
                                         [](const std::string& msg) { std::cerr << msg << '\n'; });
            gateway::Server server(session, srv_opts);
            const int port = server.listen();
            std::cerr << "listening on " << srv_opts.host << ':' << port << '\n';
            server.run();
            std::cout << session.summary().dump(2) << '\n';
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
