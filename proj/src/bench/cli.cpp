#include <vmor/bench.hpp>
#include <vmor/problems.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace vmor::bench {

using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

// Flag values; only flags that were given override the config file.
struct SolveFlags {
    std::string config, algorithm, problem, theta_policy, trace, summary;
    double sigma = 0, theta = 0, beta = 0, beta_growth = 0, xi0 = 0, tol = 0, r = 0, s = 0, gamma = 0, alpha = 0,
           relaxation = 0;
    long max_iters = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<CLI::Option *, std::function<void(ExperimentConfig &)>>> setters;
};

void add_solver_flags(CLI::App &cmd, SolveFlags &f, bool with_outputs) {
    cmd.add_option("--config", f.config, "JSON config file; flags override its entries");
    auto bind = [&](const char *name, auto &var, auto apply, const char *help) {
        CLI::Option *o = cmd.add_option(name, var, help);
        f.setters.emplace_back(o, [&var, apply](ExperimentConfig &c) { apply(c, var); });
    };
    bind("--problem", f.problem, [](ExperimentConfig &c, const std::string &v) { c.problem = parse_problem(v); },
         "qp:seed=1,p=2,n=5,m=3 | lrr:seed=1,d=40,n=40 | manifest:<file.json>");
    bind("--sigma", f.sigma, [](ExperimentConfig &c, double v) { c.solver.sigma = v; }, "relative error tolerance");
    bind("--theta-policy", f.theta_policy,
         [](ExperimentConfig &c, const std::string &v) { c.solver.theta_policy = v; }, "adaptive | fixed");
    bind("--theta", f.theta, [](ExperimentConfig &c, double v) { c.solver.theta = v; },
         "over-relaxation for the fixed policy");
    bind("--beta", f.beta, [](ExperimentConfig &c, double v) { c.solver.beta = v; }, "penalty parameter");
    bind("--beta-growth", f.beta_growth, [](ExperimentConfig &c, double v) { c.solver.beta_growth = v; },
         "penalty growth factor");
    bind("--xi0", f.xi0, [](ExperimentConfig &c, double v) { c.solver.xi0 = v; }, "metric growth schedule scale");
    bind("--tol", f.tol, [](ExperimentConfig &c, double v) { c.solver.tol = v; }, "stopping tolerance");
    bind("--max-iters", f.max_iters, [](ExperimentConfig &c, long v) { c.solver.max_iters = v; },
         "iteration limit");
    bind("--r", f.r, [](ExperimentConfig &c, double v) { c.solver.r = v; }, "condat-vu primal metric weight");
    bind("--s", f.s, [](ExperimentConfig &c, double v) { c.solver.s = v; }, "condat-vu dual metric weight");
    bind("--gamma", f.gamma, [](ExperimentConfig &c, double v) { c.solver.gamma = v; },
         "fbhf step / afbas-pd primal step");
    bind("--alpha", f.alpha, [](ExperimentConfig &c, double v) { c.solver.alpha = v; },
         "ppg step / afbas-pd dual step");
    bind("--relaxation", f.relaxation, [](ExperimentConfig &c, double v) { c.solver.relaxation = v; },
         "afbas-pd relaxation");
    if (with_outputs) {
        bind("--algorithm", f.algorithm,
             [](ExperimentConfig &c, const std::string &v) { c.algorithm = parse_algorithm(v); },
             "padmm-ebb | condat-vu | ppg | fbhf | afbas-pd");
        bind("--seed", f.seed, [](ExperimentConfig &c, std::uint64_t v) { c.seed = v; }, "starting-point seed");
        bind("--trace", f.trace, [](ExperimentConfig &c, const std::string &v) { c.trace_path = v; },
             "trace CSV output");
        bind("--summary", f.summary, [](ExperimentConfig &c, const std::string &v) { c.summary_path = v; },
             "summary JSON output (stdout when absent)");
    }
}

ExperimentConfig assemble(const SolveFlags &f) {
    ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    for (const auto &[opt, set] : f.setters)
        if (opt->count() > 0)
            set(cfg);
    return cfg;
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path);
    out << text;
}

int cmd_solve(const SolveFlags &f, std::ostream &out, std::ostream &err) {
    const ExperimentConfig cfg = assemble(f);
    const RunOutcome run = run_experiment(cfg);
    const std::string text = summary_json(run).dump(2) + "\n";
    if (cfg.summary_path.empty())
        out << text;
    else
        write_text(cfg.summary_path, text);
    if (run.aborted()) {
        err << "solver aborted: " << run.diagnostic << "\n";
        return kExitAbort;
    }
    return kExitOk;
}

std::vector<std::uint64_t> parse_seeds(const std::string &s) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(s);
    std::string item;
    try {
        while (std::getline(ss, item, ',')) {
            const auto dash = item.find('-');
            if (dash == std::string::npos) {
                seeds.push_back(std::stoull(item));
            } else {
                const auto lo = std::stoull(item.substr(0, dash)), hi = std::stoull(item.substr(dash + 1));
                if (hi < lo)
                    throw ConfigError("empty seed range " + item);
                for (auto k = lo; k <= hi; ++k)
                    seeds.push_back(k);
            }
        }
    } catch (const std::logic_error &) {
        throw ConfigError("malformed seed list '" + s + "'");
    }
    if (seeds.empty())
        throw ConfigError("no seeds given");
    return seeds;
}

int cmd_bench(const SolveFlags &f, const std::string &algorithms, const std::string &seeds_text, int threads,
              const std::string &out_path, std::ostream &out, std::ostream &err) {
    const ExperimentConfig base = assemble(f);
    std::vector<Algorithm> algs;
    {
        std::stringstream ss(algorithms);
        std::string a;
        while (std::getline(ss, a, ','))
            algs.push_back(parse_algorithm(a));
    }
    if (algs.empty())
        throw ConfigError("no algorithms given");
    const auto seeds = parse_seeds(seeds_text);

    // Cells ordered by (algorithm as listed, seed); the seed drives both the
    // generated instance and the starting point.
    std::vector<ExperimentConfig> cells;
    for (auto a : algs)
        for (auto s : seeds) {
            ExperimentConfig c = base;
            c.algorithm = a;
            c.seed = s;
            if (c.problem.kind != "manifest")
                c.problem.params["seed"] = std::to_string(s);
            c.trace_path.clear();
            c.summary_path.clear();
            validate(c);
            cells.push_back(std::move(c));
        }

    std::vector<json> results(cells.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < cells.size(); i = next++) {
            try {
                results[i] = summary_json(run_experiment(cells[i]));
            } catch (const std::exception &e) {
                results[i] = {{"schema", 1}, {"config", cells[i].to_json()}, {"error", e.what()}};
            }
        }
    };
    const int nt = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();

    json doc = {{"schema", 1}, {"cells", results}};
    const std::string text = doc.dump(2) + "\n";
    if (out_path.empty())
        out << text;
    else
        write_text(out_path, text);
    int code = kExitOk;
    for (const auto &r : results) {
        if (r.contains("error")) {
            err << "cell " << r["config"]["algorithm"].get<std::string>() << " seed " << r["config"]["seed"]
                << ": " << r["error"].get<std::string>() << "\n";
            code = std::max(code, kExitConfig);
        } else if (r["termination"] != "converged" && r["termination"] != "max_iters") {
            code = kExitAbort;
        }
    }
    return code;
}

int cmd_oracle(const std::string &problem, std::ostream &out) {
    const ProblemSpec spec = parse_problem(problem);
    QpInstance qp;
    try {
        if (spec.kind == "qp") {
            auto idx = [&](const char *k, double d) { return static_cast<Index>(spec.number(k, d)); };
            qp = gen_qp(static_cast<std::uint64_t>(idx("seed", 1)), static_cast<int>(idx("p", 2)), idx("n", 5),
                        idx("m", 3));
        } else if (spec.kind == "manifest" && manifest_kind(spec.path) == "qp") {
            qp = read_qp_manifest(spec.path);
        } else {
            throw ConfigError("the oracle command supports qp problems only");
        }
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    json j;
    j["schema"] = 1;
    j["problem"] = spec.text();
    j["x_star"] = std::vector<double>(qp.x_star.data().begin(), qp.x_star.data().end());
    j["y_star"] = std::vector<double>(qp.y_star.begin(), qp.y_star.end());
    j["kkt_residual"] = qp.kkt_residual;
    out << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_check(const std::string &filter, std::ostream &out) {
    const auto results = run_acceptance(out, filter);
    size_t passed = 0;
    for (const auto &r : results)
        passed += r.pass ? 1 : 0;
    out << passed << "/" << results.size() << " criteria passed\n";
    return passed == results.size() ? kExitOk : kExitFailed;
}

} // namespace

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Variable-metric over-relaxed HPE solvers and benchmarks", "vmor_cli"};
    app.require_subcommand(1);

    SolveFlags solve_flags;
    CLI::App *solve = app.add_subcommand("solve", "run one solver on one problem");
    add_solver_flags(*solve, solve_flags, true);

    SolveFlags bench_flags;
    std::string bench_algs = "padmm-ebb", bench_seeds = "1", bench_out;
    int bench_threads = 1;
    CLI::App *bench = app.add_subcommand("bench", "run (algorithm, seed) cells in parallel");
    add_solver_flags(*bench, bench_flags, false);
    bench->add_option("--algorithms", bench_algs, "comma-separated algorithm list");
    bench->add_option("--seeds", bench_seeds, "seed list, e.g. 1-10 or 1,4,7");
    bench->add_option("--threads", bench_threads, "worker threads")->check(CLI::PositiveNumber);
    bench->add_option("--out", bench_out, "merged JSON output (stdout when absent)");

    std::string oracle_problem;
    CLI::App *oracle = app.add_subcommand("oracle", "print the reference solution of a qp problem");
    oracle->add_option("--problem", oracle_problem, "qp:seed=1,p=2,n=5,m=3 or manifest:<file.json>")->required();

    std::string check_filter;
    CLI::App *check = app.add_subcommand("check", "run the acceptance suite");
    check->add_option("--filter", check_filter, "only criteria whose name contains this text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    try {
        if (*solve)
            return cmd_solve(solve_flags, out, err);
        if (*bench)
            return cmd_bench(bench_flags, bench_algs, bench_seeds, bench_threads, bench_out, out, err);
        if (*oracle)
            return cmd_oracle(oracle_problem, out);
        if (*check)
            return cmd_check(check_filter, out);
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SolverAbort &e) {
        err << "solver aborted: " << e.what() << "\n";
        return kExitAbort;
    }
    return kExitConfig;
}

} // namespace vmor::bench
