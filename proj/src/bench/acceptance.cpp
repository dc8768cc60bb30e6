#include <vmor/bench.hpp>
#include <vmor/problems.hpp>
#include <vmor/reference.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace vmor::bench {

namespace {

namespace ref = vmor::reference;

// Every tolerance and budget of the suite.
constexpr double kSlackFloor = -1e-9;
constexpr double kFejerRel = 1e-9;
constexpr int kInvarianceSeeds = 20;
constexpr long kInvarianceIters = 100;
constexpr double kInvarianceBudget = 60;
constexpr long kBoundIters = 10000;
constexpr double kBoundBudget = 10;
constexpr long kErgodicIters = 1000;
constexpr double kErgodicSlope = -0.8;
constexpr double kErgodicEpsFloor = -1e-12;
constexpr double kOracleTol = 1e-8;
constexpr long kOracleIters = 5000;
constexpr double kOracleDist = 1e-6;
constexpr int kOracleSeeds = 10;
constexpr double kOracleBudget = 30;
constexpr long kDirectIters = 200;
constexpr double kDirectTol = 1e-12;
constexpr long kRateTail = 50;
constexpr double kRateSlack = 0.05;
constexpr int kAccelSeeds = 10;
constexpr double kLrrPkkt = 1e-3;
constexpr double kLrrFeas = 1e-4;
constexpr long kLrrIters = 3000;
constexpr double kLrrBudget = 120;
constexpr int kProxProbes = 100;
constexpr double kProxTol = 1e-10;

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(3) << v;
    return os.str();
}

// Worst margin of the contraction inequality
//   |x+ - x*|^2_{M+} <= (1 + xi)(|x - x*|^2_M - (1 - sigma)(1 + theta)|x - y|^2_M)
// relative to 1 + |x - x*|^2_M (positive means satisfied).
struct FejerMonitor {
    BlockPoint z_star;
    double sigma;
    XiSchedule xi;
    double worst = std::numeric_limits<double>::infinity();

    void operator()(const StepView &sv) {
        const double d0 = weighted_norm_sq(sv.metric, sv.x - z_star);
        const double d1 = weighted_norm_sq(sv.metric_next, sv.x_next - z_star);
        const double gap = weighted_norm_sq(sv.metric, sv.x - sv.cert.y);
        const double x = xi(sv.k);
        const double rhs = (1 + x) * d0 - (1 - sigma) * (1 + x) * (1 + sv.cert.theta) * gap;
        worst = std::min(worst, (rhs - d1) / (1 + d0));
    }
};

struct InvarianceStats {
    double min_slack = std::numeric_limits<double>::infinity();
    double worst_fejer = std::numeric_limits<double>::infinity();
    int aborted = 0;
    int runs = 0;
    std::string first_abort;
};

void absorb(InvarianceStats &st, const IterTrace &trace, Termination t, const std::string &diag,
            const FejerMonitor &mon) {
    ++st.runs;
    for (const auto &r : trace.records)
        st.min_slack = std::min(st.min_slack, r.criterion_slack);
    st.worst_fejer = std::min(st.worst_fejer, mon.worst);
    if (t != Termination::max_iters && t != Termination::converged) {
        ++st.aborted;
        if (st.first_abort.empty())
            st.first_abort = diag;
    }
}

HpeConfig fixed_metric_config(double sigma, long iters) {
    HpeConfig h;
    h.sigma = sigma;
    h.theta_min = -0.999;
    h.c_min = 1e-6;
    h.xi.xi0 = 0;
    h.omega_lower = 1e-12;
    h.omega_upper = 1e12;
    h.max_iters = iters;
    h.tol = 0;
    return h;
}

void run_kernel_case(InvarianceStats &st, const StepOracle &oracle, const BlockPoint &x0, const MetricPtr &M,
                     double sigma, const BlockPoint &z_star) {
    const HpeConfig h = fixed_metric_config(sigma, kInvarianceIters);
    FejerMonitor mon{z_star, sigma, h.xi};
    RunOptions opts;
    opts.observer = std::ref(mon);
    const RunResult r = run(oracle, x0, M, h, opts);
    absorb(st, r.trace, r.termination, r.diagnostic, mon);
}

BlockPoint qp_reference_point(const QpInstance &qp) {
    const auto s = ref::kkt_schur(qp.Q_full(), qp.q_full(), qp.C_full(), qp.b);
    const Layout zl = qp.x_layout().concat(Layout::single(qp.dual_dim()));
    Vec z(zl.dim());
    z << s.x, s.y;
    return BlockPoint(zl, z);
}

std::map<std::string, InvarianceStats> invariance_runs(double &elapsed) {
    const auto t0 = clock_type::now();
    std::map<std::string, InvarianceStats> stats;
    for (int seed = 1; seed <= kInvarianceSeeds; ++seed) {
        const auto useed = static_cast<std::uint64_t>(seed);
        {
            const auto inst = ref::fbhf_instance(useed, 30);
            const BlockPoint x0(Layout::single(30), inst.x0), xs(Layout::single(30), inst.x_star);
            run_kernel_case(stats["fbhf"], fbhf_oracle(inst.problem, inst.gamma, inst.theta, inst.sigma, 30), x0,
                            std::make_shared<ScaledIdentityMetric>(30), inst.sigma, xs);
        }
        {
            const auto inst = ref::ppg_instance(useed, 15);
            run_kernel_case(stats["ppg"], ppg_oracle(inst.problem, inst.theta, inst.sigma), inst.z0,
                            std::make_shared<ScaledIdentityMetric>(inst.z0.dim()), inst.sigma, inst.z_star);
        }
        {
            const auto inst = ref::primal_dual_instance(useed, 30, 15);
            const auto cs = ref::condat_vu_setup(inst.problem, 0.9);
            const CondatVu cv(inst.problem, cs.r, cs.s, cs.sigma);
            run_kernel_case(stats["condat-vu"], cv.oracle(cs.theta), inst.z0, cv.metric(), cs.sigma, inst.z_star);
            const AfbasPd af(inst.problem, ref::afbas_setup(inst.problem, 0.9), 0.9);
            run_kernel_case(stats["afbas-pd"], af.oracle(), inst.z0, af.metric(), 0.9, inst.z_star);
        }
        {
            const QpInstance qp = gen_qp(useed, 3, 10, 8);
            const MultiBlockProblem p = qp_multiblock(qp);
            PadmmConfig pc;
            pc.max_iters = kInvarianceIters;
            pc.tol = 0;
            FejerMonitor mon{qp_reference_point(qp), pc.sigma, pc.xi};
            PadmmRunOptions opts;
            opts.observer = std::ref(mon);
            const BlockPoint z0(p.z_layout(), random_normal(p.z_layout().dim(), useed));
            const PadmmResult r = run_padmm(p, pc, z0, opts);
            absorb(stats["padmm-ebb"], r.trace, r.termination, r.diagnostic, mon);
        }
    }
    elapsed = seconds_since(t0);
    return stats;
}

CriterionResult criterion_invariance(const std::map<std::string, InvarianceStats> &stats, double elapsed) {
    CriterionResult c{"criterion_invariance", true, "", 0};
    std::ostringstream os;
    for (const auto &[name, st] : stats) {
        const bool ok = st.aborted == 0 && st.min_slack >= kSlackFloor && st.runs == kInvarianceSeeds;
        c.pass = c.pass && ok;
        os << name << " min slack " << fmt(st.min_slack);
        if (st.aborted)
            os << " (" << st.aborted << " aborted: " << st.first_abort << ")";
        os << "; ";
    }
    c.pass = c.pass && stats.size() == 5 && elapsed < kInvarianceBudget;
    os << "runs took " << fmt(elapsed) << " s (budget " << kInvarianceBudget << " s)";
    c.detail = os.str();
    return c;
}

CriterionResult criterion_fejer(const std::map<std::string, InvarianceStats> &stats) {
    CriterionResult c{"fejer_contraction", true, "", 0};
    std::ostringstream os;
    for (const auto &[name, st] : stats) {
        c.pass = c.pass && st.aborted == 0 && st.worst_fejer >= -kFejerRel;
        os << name << " worst relative margin " << fmt(st.worst_fejer) << "; ";
    }
    c.pass = c.pass && stats.size() == 5;
    c.detail = os.str();
    return c;
}

CriterionResult criterion_pointwise_bounds() {
    CriterionResult c{"pointwise_bounds", true, "", 0};
    const auto t0 = clock_type::now();
    const auto inst = ref::affine_instance(11, 20, 0.05);
    HpeConfig h = fixed_metric_config(0.5, kBoundIters);
    h.theta_min = -0.5;
    h.c_min = 1;
    h.omega_lower = h.omega_upper = 1; // M = I throughout
    const double theta = 0.3;
    const BlockPoint x0(Layout::single(20), inst.x0);
    const double d0 = (inst.x0 - inst.x_star).norm();
    const RunResult r = run(ref::affine_oracle(inst, 1.0, theta), x0, std::make_shared<ScaledIdentityMetric>(20), h);
    double min_v = std::numeric_limits<double>::infinity(), min_e = min_v;
    double worst_v = std::numeric_limits<double>::infinity(), worst_e = worst_v;
    for (const auto &rec : r.trace.records) {
        min_v = std::min(min_v, rec.v_norm);
        min_e = std::min(min_e, rec.eps);
        const auto b = pointwise_bound(rec.iter, h, d0);
        worst_v = std::min(worst_v, b.bound_v - min_v);
        worst_e = std::min(worst_e, b.bound_eps - min_e);
    }
    const double el = seconds_since(t0);
    c.pass = worst_v >= 0 && worst_e >= 0 && el < kBoundBudget && r.iterations() > 0 &&
             r.termination != Termination::criterion_violation;
    c.detail = std::to_string(r.iterations()) + " iterations; smallest bound_v - min|v| " + fmt(worst_v) +
               ", bound_eps - min eps " + fmt(worst_e) + "; " + fmt(el) + " s (budget " + fmt(kBoundBudget) + " s)";
    return c;
}

CriterionResult criterion_ergodic_rate() {
    CriterionResult c{"ergodic_rate", true, "", 0};
    std::ostringstream os;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const QpInstance qp = gen_qp(seed, 2, 5, 3);
        const MultiBlockProblem p = qp_multiblock(qp);
        PadmmConfig pc;
        pc.max_iters = kErgodicIters;
        pc.tol = 0;
        PadmmRunOptions opts;
        opts.keep_history = true;
        const PadmmResult r = run_padmm(p, pc, BlockPoint(p.z_layout(), random_normal(p.z_layout().dim(), seed)), opts);
        const size_t K = r.history.size();
        for (int rule = 0; rule < 2; ++rule) {
            std::vector<double> alpha(K);
            for (size_t i = 0; i < K; ++i)
                alpha[i] = rule == 0 ? 1.0 : static_cast<double>(i + 1);
            std::vector<double> vbar;
            double min_eps = std::numeric_limits<double>::infinity();
            for (size_t k = 1; k <= K; ++k) {
                const ErgodicAggregate agg = ergodic_aggregate(r.history, alpha, k);
                vbar.push_back(agg.v.norm());
                min_eps = std::min(min_eps, agg.eps);
            }
            const long hi = std::min<long>(static_cast<long>(K), kErgodicIters);
            const auto slope = loglog_slope(vbar, 100, hi);
            const bool ok = K >= 100 && slope && *slope <= kErgodicSlope && min_eps >= kErgodicEpsFloor;
            c.pass = c.pass && ok;
            os << "seed " << seed << (rule == 0 ? " alpha=1" : " alpha=i") << ": " << K << " its, slope "
               << (slope ? fmt(*slope) : "n/a") << ", min eps-bar " << fmt(min_eps) << "; ";
        }
    }
    c.detail = os.str();
    return c;
}

CriterionResult criterion_oracle_equivalence() {
    CriterionResult c{"oracle_equivalence", true, "", 0};
    const auto t0 = clock_type::now();
    double worst_dist = 0, worst_res = 0;
    long worst_iters = 0;
    int failures = 0;
    for (int seed = 1; seed <= kOracleSeeds; ++seed) {
        const QpInstance qp = gen_qp(static_cast<std::uint64_t>(seed), 2, 5, 3);
        const MultiBlockProblem p = qp_multiblock(qp);
        PadmmConfig pc;
        pc.tol = kOracleTol;
        pc.max_iters = kOracleIters;
        const PadmmResult r = run_padmm(p, pc, BlockPoint(p.z_layout()));
        const BlockPoint zs = qp_reference_point(qp);
        const double dist = (r.solution - zs).norm();
        const double res = pkkt_residual(r.solution, p).norm;
        worst_dist = std::max(worst_dist, dist);
        worst_res = std::max(worst_res, res);
        worst_iters = std::max(worst_iters, r.iterations());
        if (r.termination != Termination::converged || res > kOracleTol || dist > kOracleDist)
            ++failures;
    }
    const double el = seconds_since(t0);
    c.pass = failures == 0 && el < kOracleBudget;
    c.detail = std::to_string(kOracleSeeds - failures) + "/" + std::to_string(kOracleSeeds) +
               " seeds converged; max |R| " + fmt(worst_res) + ", max distance " + fmt(worst_dist) +
               ", max iterations " + std::to_string(worst_iters) + "; " + fmt(el) + " s (budget " +
               fmt(kOracleBudget) + " s)";
    return c;
}

CriterionResult criterion_direct_vs_kernel() {
    CriterionResult c{"direct_vs_kernel", true, "", 0};
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto inst = ref::primal_dual_instance(seed, 30, 15);
        const auto cs = ref::condat_vu_setup(inst.problem, 0.9);
        const CondatVu cv(inst.problem, cs.r, cs.s, cs.sigma);
        std::vector<BlockPoint> kernel;
        RunOptions opts;
        opts.observer = [&kernel](const StepView &sv) { kernel.push_back(sv.x_next); };
        opts.native_tol = std::numeric_limits<double>::infinity(); // compared below instead
        const RunResult r = run(cv.oracle(cs.theta), inst.z0, cv.metric(), fixed_metric_config(cs.sigma, kDirectIters),
                                opts);
        BlockPoint z = inst.z0;
        if (kernel.size() != static_cast<size_t>(kDirectIters))
            c.pass = false;
        for (const auto &zk : kernel) {
            z = cv.native_step(z, cs.theta);
            worst = std::max(worst, (zk - z).norm() / (1 + z.norm()));
        }
        (void)r;
    }
    c.pass = c.pass && worst <= kDirectTol;
    c.detail = std::to_string(kDirectIters) + " iterations x 5 seeds; max relative deviation " + fmt(worst);
    return c;
}

CriterionResult criterion_local_linear_rate() {
    CriterionResult c{"local_linear_rate", true, "", 0};
    // T(x) = Q x - q with Q positive definite; kappa = 1 / lambda_min(Q).
    const QpInstance qp = gen_qp(5, 1, 20, 0);
    ref::AffineInstance inst;
    inst.A = qp.Q[0];
    inst.A.diagonal().array() -= 0.48; // lambda_min(Q) becomes about 0.02
    const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(inst.A, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    inst.a = -qp.q[0];
    inst.x_star = inst.A.llt().solve(qp.q[0]);
    inst.x0 = random_normal(20, 5);
    const double sigma = 0.5, theta = 0.3;
    const long iters = 100;
    HpeConfig h = fixed_metric_config(sigma, iters);
    h.c_min = 1;
    const BlockPoint x0(Layout::single(20), inst.x0), xs(Layout::single(20), inst.x_star);
    RunOptions opts;
    opts.reference = &xs;
    const RunResult r = run(ref::affine_oracle(inst, 1.0, theta), x0, std::make_shared<ScaledIdentityMetric>(20), h, opts);
    const double kappa = 1 / lmin;
    const double rho = linear_rate_factor(kappa, sigma, theta, 1.0, h.xi.product_total(), 1.0, 1.0);
    const double bound = 1 - rho / 2 + kRateSlack;
    double worst = 0;
    const auto &rec = r.trace.records;
    const long n = static_cast<long>(rec.size());
    for (long k = std::max(1L, n - kRateTail); k < n; ++k) {
        const double ratio = rec[static_cast<size_t>(k)].dist_to_ref / rec[static_cast<size_t>(k - 1)].dist_to_ref;
        worst = std::max(worst, ratio);
    }
    c.pass = n == iters && rec.back().dist_to_ref > 0 && worst <= bound;
    c.detail = "kappa " + fmt(kappa) + ", rho " + fmt(rho) + ", max tail ratio " + fmt(worst) + " <= " + fmt(bound) +
               " required; final distance " + fmt(rec.back().dist_to_ref);
    return c;
}

CriterionResult criterion_theta_acceleration() {
    CriterionResult c{"theta_acceleration", true, "", 0};
    std::vector<long> adaptive, fixed;
    for (int seed = 1; seed <= kAccelSeeds; ++seed) {
        const QpInstance qp = gen_qp(static_cast<std::uint64_t>(seed), 2, 5, 3);
        const MultiBlockProblem p = qp_multiblock(qp);
        for (int pol = 0; pol < 2; ++pol) {
            PadmmConfig pc;
            pc.tol = kOracleTol;
            pc.max_iters = kOracleIters;
            pc.policy = pol == 0 ? ThetaPolicy::adaptive : ThetaPolicy::fixed;
            pc.theta_fixed = 0;
            const PadmmResult r = run_padmm(p, pc, BlockPoint(p.z_layout()));
            const long its = r.termination == Termination::converged ? r.iterations() : kOracleIters + 1;
            (pol == 0 ? adaptive : fixed).push_back(its);
        }
    }
    auto median = [](std::vector<long> v) {
        std::sort(v.begin(), v.end());
        const size_t h = v.size() / 2;
        return v.size() % 2 ? static_cast<double>(v[h]) : 0.5 * static_cast<double>(v[h - 1] + v[h]);
    };
    const double ma = median(adaptive), mf = median(fixed);
    c.pass = ma <= mf;
    c.detail = "median iterations: adaptive " + fmt(ma) + ", theta = 0 " + fmt(mf);
    return c;
}

CriterionResult criterion_lrr() {
    CriterionResult c{"lrr_desk_scale", true, "", 0};
    const auto t0 = clock_type::now();
    const Mat X = randn(40, 40, 1);
    const auto [LZ, LG] = lrr_laplacians(X, 5);
    const LrrInstance inst = build_lrr(X, LZ, LG, 1e3, 1e4, 1e4);
    PadmmConfig pc = lrr_default_config();
    pc.max_iters = kLrrIters;
    pc.tol = kLrrFeas;
    const PadmmResult r = run_padmm(inst.problem, pc, BlockPoint(inst.problem.z_layout()));
    const double el = seconds_since(t0);
    long hit = -1;
    double best = std::numeric_limits<double>::infinity();
    for (const auto &rec : r.trace.records) {
        best = std::min(best, rec.extra[0]);
        if (hit < 0 && rec.extra[0] <= kLrrPkkt && rec.extra[1] <= kLrrFeas)
            hit = rec.iter;
    }
    const double feas = inst.feasibility(r.solution);
    c.pass = hit > 0 && el < kLrrBudget && r.termination != Termination::criterion_violation &&
             r.termination != Termination::metric_violation;
    c.detail = (hit > 0 ? "|R| <= 1e-3 with feasibility <= 1e-4 at iteration " + std::to_string(hit)
                        : "thresholds not reached, best |R| " + fmt(best)) +
               "; final |X - XZ - GX - E| " + fmt(feas) + "; " + std::to_string(r.iterations()) + " iterations, " +
               fmt(el) + " s (budget " + fmt(kLrrBudget) + " s)";
    return c;
}

CriterionResult criterion_prox() {
    CriterionResult c{"prox_correctness", true, "", 0};
    double l1_err = 0, nuc_err = 0, nn_err = 0;
    for (int probe = 0; probe < kProxProbes; ++probe) {
        const auto seed = static_cast<std::uint64_t>(1000 + probe);
        const Vec v = 2 * random_normal(30, seed);
        const double t = 0.1 + 0.02 * probe, lam = 0.5 + 0.01 * probe;
        // l1: subgradient membership and Moreau with the box projection.
        const Vec u = prox_l1(t, lam, v);
        for (Index i = 0; i < v.size(); ++i) {
            const double g = (v[i] - u[i]) / t;
            const double err = u[i] != 0 ? std::abs(g - lam * (u[i] > 0 ? 1 : -1)) : std::max(0.0, std::abs(g) - lam);
            l1_err = std::max(l1_err, err);
        }
        l1_err = std::max(l1_err, (u + t * (v / t).cwiseMax(-lam).cwiseMin(lam) - v).cwiseAbs().maxCoeff());
        // Nuclear norm: Moreau with the spectral-ball projection and shrunk singular values.
        const Mat V = Eigen::Map<const Mat>(random_normal(48, seed + 7).data(), 8, 6);
        const Mat P = prox_nuclear(t * 5, V);
        nuc_err = std::max(nuc_err, (P + t * 5 * proj_spectral_ball(V / (t * 5)) - V).cwiseAbs().maxCoeff());
        const Vec sv = Eigen::JacobiSVD<Mat>(V).singularValues();
        const Vec sp = Eigen::JacobiSVD<Mat>(P).singularValues();
        nuc_err = std::max(nuc_err, (sp - (sv.array() - t * 5).max(0.0).matrix()).cwiseAbs().maxCoeff());
        // Nonnegativity: complementarity, feasibility, idempotence.
        const Vec w = proj_nonneg(v);
        nn_err = std::max(nn_err, std::max(0.0, -w.minCoeff()));
        nn_err = std::max(nn_err, (w.array() * (w - v).array()).abs().maxCoeff());
        nn_err = std::max(nn_err, std::max(0.0, (v - w).maxCoeff()));
        if (proj_nonneg(w) != w)
            nn_err = std::max(nn_err, 1.0);
    }
    c.pass = l1_err <= kProxTol && nuc_err <= kProxTol && nn_err <= kProxTol;
    c.detail = std::to_string(kProxProbes) + " probes each; max errors l1 " + fmt(l1_err) + ", nuclear " +
               fmt(nuc_err) + ", nonneg " + fmt(nn_err);
    return c;
}

} // namespace

std::vector<CriterionResult> run_acceptance(std::ostream &out, const std::string &filter) {
    std::vector<CriterionResult> results;
    auto wanted = [&](const std::string &name) { return filter.empty() || name.find(filter) != std::string::npos; };
    auto report = [&](CriterionResult r, clock_type::time_point t0) {
        r.seconds = seconds_since(t0);
        out << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " [" << fmt(r.seconds) << " s]"
            << std::endl;
        results.push_back(std::move(r));
    };

    if (wanted("criterion_invariance") || wanted("fejer_contraction")) {
        const auto t0 = clock_type::now();
        double elapsed = 0;
        const auto stats = invariance_runs(elapsed);
        if (wanted("criterion_invariance"))
            report(criterion_invariance(stats, elapsed), t0);
        if (wanted("fejer_contraction"))
            report(criterion_fejer(stats), t0);
    }
    const std::vector<std::pair<std::string, std::function<CriterionResult()>>> rest = {
        {"pointwise_bounds", criterion_pointwise_bounds},
        {"ergodic_rate", criterion_ergodic_rate},
        {"oracle_equivalence", criterion_oracle_equivalence},
        {"direct_vs_kernel", criterion_direct_vs_kernel},
        {"local_linear_rate", criterion_local_linear_rate},
        {"theta_acceleration", criterion_theta_acceleration},
        {"lrr_desk_scale", criterion_lrr},
        {"prox_correctness", criterion_prox},
    };
    for (const auto &[name, fn] : rest) {
        if (!wanted(name))
            continue;
        const auto t0 = clock_type::now();
        try {
            report(fn(), t0);
        } catch (const std::exception &e) {
            report({name, false, std::string("exception: ") + e.what(), 0}, t0);
        }
    }
    return results;
}

} // namespace vmor::bench
