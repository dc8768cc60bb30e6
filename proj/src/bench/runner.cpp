#include <vmor/bench.hpp>
#include <vmor/problems.hpp>
#include <vmor/trace.hpp>

#include <chrono>
#include <cmath>
#include <optional>

namespace vmor::bench {

namespace {

struct Instance {
    std::optional<QpInstance> qp;
    std::optional<LrrInstance> lrr;
};

Index as_index(const ProblemSpec &spec, const std::string &key, double fallback) {
    const double v = spec.number(key, fallback);
    if (v != std::floor(v) || v < 0)
        throw ConfigError("problem parameter '" + key + "' must be a nonnegative integer");
    return static_cast<Index>(v);
}

Instance load_instance(const ExperimentConfig &cfg) {
    const auto &spec = cfg.problem;
    Instance inst;
    try {
        if (spec.kind == "qp") {
            inst.qp = gen_qp(static_cast<std::uint64_t>(as_index(spec, "seed", 1)),
                             static_cast<int>(as_index(spec, "p", 2)), as_index(spec, "n", 5), as_index(spec, "m", 3));
        } else if (spec.kind == "lrr") {
            const Index d = as_index(spec, "d", 40), n = as_index(spec, "n", 40);
            const Mat X = randn(d, n, static_cast<std::uint64_t>(as_index(spec, "seed", 1)));
            const auto [LZ, LG] = lrr_laplacians(X, static_cast<int>(as_index(spec, "k", 5)));
            const auto it = spec.params.find("orientation");
            const std::string orient = it == spec.params.end() ? "rows" : it->second;
            if (orient != "rows" && orient != "columns")
                throw ConfigError("lrr orientation must be 'rows' or 'columns'");
            inst.lrr = build_lrr(X, LZ, LG, spec.number("lambda", 1e3), spec.number("mu", 1e4),
                                 spec.number("gamma", 1e4),
                                 orient == "rows" ? LaplacianOrientation::rows : LaplacianOrientation::columns);
        } else {
            const std::string kind = manifest_kind(spec.path);
            if (kind == "qp")
                inst.qp = read_qp_manifest(spec.path);
            else if (kind == "lrr")
                inst.lrr = read_lrr_manifest(spec.path);
            else
                throw ConfigError("manifest kind '" + kind + "' is not supported");
        }
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    } catch (const std::runtime_error &e) {
        if (dynamic_cast<const ConfigError *>(&e))
            throw;
        throw ConfigError(e.what());
    }
    if (inst.lrr && cfg.algorithm != Algorithm::padmm_ebb)
        throw ConfigError("the lrr problem is only supported by padmm-ebb");
    return inst;
}

double lambda_max(const Mat &S) {
    return Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

// Running |v-bar| with unit weights.
struct ErgodicTracker {
    Vec sum;
    double weight = 0;
    std::vector<double> *out;

    void add(const HpeCertificate &cert) {
        const double w = (1 + cert.theta) * cert.c;
        if (sum.size() == 0)
            sum = Vec::Zero(cert.v.dim());
        sum += w * cert.v.data();
        weight += w;
        out->push_back(sum.norm() / weight);
    }
};

HpeConfig kernel_config(const SolverParams &s) {
    HpeConfig h;
    h.sigma = s.sigma;
    h.theta_min = std::min(-0.5, s.theta);
    h.xi.xi0 = s.xi0;
    h.max_iters = s.max_iters;
    h.tol = s.tol;
    return h;
}

void run_kernel(RunOutcome &out, const StepOracle &oracle, const BlockPoint &x0, const MetricPtr &M0,
                const HpeConfig &hcfg, const BlockPoint *ref) {
    ErgodicTracker erg{Vec(), 0, &out.ergodic_v};
    RunOptions opts;
    opts.reference = ref;
    opts.observer = [&erg](const StepView &sv) { erg.add(sv.cert); };
    RunResult r = run(oracle, x0, M0, hcfg, opts);
    out.trace = std::move(r.trace);
    out.termination = r.termination;
    out.diagnostic = std::move(r.diagnostic);
    out.solution = std::move(r.solution);
    for (const auto &rec : out.trace.records)
        out.residual.push_back(std::max(rec.v_norm, rec.eps));
}

void run_on_qp(RunOutcome &out, const ExperimentConfig &cfg, const QpInstance &qp) {
    const auto &s = cfg.solver;
    const HpeConfig hcfg = kernel_config(s);
    const bool adaptive = s.theta_policy == "adaptive";
    const Mat Qf = qp.Q_full();
    const double L = lambda_max(Qf);
    const Index n = Qf.rows(), m = qp.dual_dim();

    switch (cfg.algorithm) {
    case Algorithm::condat_vu: {
        const PrimalDualProblem p = qp_primal_dual(qp);
        const double bn = spectral_upper_bound(p.B);
        const double r = std::isnan(s.r) ? L + 2 * bn : s.r;
        const double ss = std::isnan(s.s) ? 2 * bn : s.s;
        const CondatVu cv(p, r, ss, s.sigma);
        const double theta = adaptive ? cv.max_theta() : s.theta;
        const BlockPoint z0(p.layout(), random_normal(n + m, cfg.seed));
        const BlockPoint ref = qp.z_star();
        run_kernel(out, cv.oracle(theta), z0, cv.metric(), hcfg, &ref);
        return;
    }
    case Algorithm::afbas_pd: {
        const PrimalDualProblem p = qp_primal_dual(qp);
        const double bn = spectral_upper_bound(p.B);
        AfbasPdParams q;
        q.primal_step = std::isnan(s.gamma) ? 1 / (L + bn) : s.gamma;
        q.dual_step = std::isnan(s.alpha) ? 1 / bn : s.alpha;
        q.relaxation = 1e-3;
        if (std::isnan(s.relaxation))
            q.relaxation = 0.9 * AfbasPd(p, q, s.sigma).delta_sigma();
        else
            q.relaxation = s.relaxation;
        const AfbasPd af(p, q, s.sigma);
        const BlockPoint z0(p.layout(), random_normal(n + m, cfg.seed));
        const BlockPoint ref = qp.z_star();
        HpeConfig h = hcfg;
        h.theta_min = -0.999;
        h.omega_lower = std::min(h.omega_lower, af.metric()->omega_lower());
        h.omega_upper = std::max(h.omega_upper, af.metric()->omega_upper());
        run_kernel(out, af.oracle(), z0, af.metric(), h, &ref);
        return;
    }
    case Algorithm::ppg: {
        const double alpha = std::isnan(s.alpha) ? 1 / L : s.alpha;
        const PpgProblem p = qp_ppg(qp, alpha);
        const double theta = adaptive ? s.sigma - L * alpha / 2 : s.theta;
        const Layout zl = ppg_layout(1, n);
        const BlockPoint z0(zl, random_normal(n, cfg.seed));
        const BlockPoint ref(zl, Vec(qp.x_star.data() - alpha * (Qf * qp.x_star.data() - qp.q_full())));
        run_kernel(out, ppg_oracle(p, theta, s.sigma), z0, std::make_shared<ScaledIdentityMetric>(n), hcfg,
                   &ref);
        return;
    }
    case Algorithm::fbhf: {
        const FbhfProblem p = qp_fbhf(qp);
        const double gamma = std::isnan(s.gamma) ? s.sigma * p.beta : s.gamma;
        const double theta = adaptive ? fbhf_max_theta(gamma, p.L, p.beta, s.sigma) : s.theta;
        const BlockPoint x0(Layout::single(n), random_normal(n, cfg.seed));
        const BlockPoint ref(Layout::single(n), qp.x_star.data());
        HpeConfig h = hcfg;
        h.c_min = std::min(1.0, gamma);
        run_kernel(out, fbhf_oracle(p, gamma, theta, s.sigma, n), x0, std::make_shared<ScaledIdentityMetric>(n),
                   h, &ref);
        return;
    }
    case Algorithm::padmm_ebb:
        break;
    }
}

void run_padmm_on(RunOutcome &out, const ExperimentConfig &cfg, const MultiBlockProblem &p, const BlockPoint *ref) {
    const auto &s = cfg.solver;
    PadmmConfig pc;
    pc.beta = !std::isnan(s.beta) ? s.beta : ref ? 1.0 : lrr_default_config().beta;
    pc.beta_growth = s.beta_growth;
    pc.sigma = s.sigma;
    pc.policy = s.theta_policy == "adaptive" ? ThetaPolicy::adaptive : ThetaPolicy::fixed;
    pc.theta_fixed = s.theta;
    pc.theta_min = std::min(-0.5, s.theta);
    pc.xi.xi0 = s.xi0;
    pc.tol = s.tol;
    pc.max_iters = s.max_iters;
    const Layout zl = p.z_layout();
    const BlockPoint z0(zl, ref ? random_normal(zl.dim(), cfg.seed) : Vec(Vec::Zero(zl.dim())));

    ErgodicTracker erg{Vec(), 0, &out.ergodic_v};
    PadmmRunOptions opts;
    opts.reference = ref;
    opts.observer = [&erg](const StepView &sv) { erg.add(sv.cert); };
    PadmmResult r = run_padmm(p, pc, z0, opts);
    out.trace = std::move(r.trace);
    out.termination = r.termination;
    out.diagnostic = std::move(r.diagnostic);
    out.solution = std::move(r.solution);
    for (const auto &rec : out.trace.records)
        out.residual.push_back(rec.extra[0]);
}

} // namespace

RunOutcome run_experiment(const ExperimentConfig &cfg) {
    validate(cfg);
    const Instance inst = load_instance(cfg);
    RunOutcome out;
    out.config = cfg;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (cfg.algorithm == Algorithm::padmm_ebb) {
            if (inst.qp) {
                const BlockPoint ref = inst.qp->z_star();
                run_padmm_on(out, cfg, qp_multiblock(*inst.qp), &ref);
            } else {
                run_padmm_on(out, cfg, inst.lrr->problem, nullptr);
            }
        } else {
            run_on_qp(out, cfg, *inst.qp);
        }
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!cfg.trace_path.empty())
        write_trace_csv(cfg.trace_path, out.trace);
    return out;
}

} // namespace vmor::bench
