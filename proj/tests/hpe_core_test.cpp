#include <vmor/hpe_core.hpp>
#include <vmor/reference.hpp>
#include <vmor/trace.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

namespace vmor {
namespace {

BlockPoint vec_point(const Vec &v) { return BlockPoint(Layout::single(v.size()), v); }

HpeCertificate cert_of(const Vec &y, const Vec &v, double eps, double c, double theta) {
    return {vec_point(y), vec_point(v), eps, c, theta};
}

TEST(CheckCriterionTest, ExactFixedPoint) {
    const Vec x = random_normal(4, 1);
    for (double theta : {-0.5, 0.0, 3.0}) {
        const auto r = check_criterion(vec_point(x), cert_of(x, Vec::Zero(4), 0, 1, theta), ScaledIdentityMetric(4), 0);
        EXPECT_EQ(r.lhs, 0);
        EXPECT_EQ(r.rhs, 0);
        EXPECT_TRUE(r.ok);
    }
}

TEST(CheckCriterionTest, ExactProximalStep) {
    const Vec x = random_normal(5, 2), y = random_normal(5, 3);
    for (double sigma : {0.0, 0.3, 0.9}) {
        const auto r = check_criterion(vec_point(x), cert_of(y, x - y, 0, 1, 0), ScaledIdentityMetric(5), sigma);
        EXPECT_NEAR(r.lhs, 0, 1e-14);
        EXPECT_TRUE(r.ok);
    }
}

TEST(CheckCriterionTest, OvershootRejected) {
    const Vec x = random_normal(5, 4), y = random_normal(5, 5);
    const auto r =
        check_criterion(vec_point(x), cert_of(y, 1.2 * (x - y), 0, 1, 0), ScaledIdentityMetric(5), 0.01);
    EXPECT_NEAR(r.lhs, 0.04 * (y - x).squaredNorm(), 1e-12);
    EXPECT_FALSE(r.ok);
}

TEST(CheckCriterionTest, NegativeEpsAndLayoutMismatchThrow) {
    const Vec x = Vec::Zero(3);
    EXPECT_THROW(check_criterion(vec_point(x), cert_of(x, x, -1e-3, 1, 0), ScaledIdentityMetric(3), 0.5),
                 std::invalid_argument);
    HpeCertificate bad = cert_of(x, x, 0, 1, 0);
    bad.y = BlockPoint(Layout::vectors({1, 2}), x);
    EXPECT_THROW(check_criterion(vec_point(x), bad, ScaledIdentityMetric(3), 0.5), std::invalid_argument);
}

TEST(ExtragradientTest, Examples) {
    const Vec x = random_normal(3, 6), v = random_normal(3, 7);
    EXPECT_EQ(extragradient_step(vec_point(x), cert_of(x, v, 0, 1, 0), ScaledIdentityMetric(3)).data(), x - v);
    EXPECT_EQ(extragradient_step(vec_point(x), cert_of(x, Vec::Zero(3), 0, 2.5, 1.7), DenseMetric(Mat::Identity(3, 3)))
                  .data(),
              x);
    const BlockPoint out =
        extragradient_step(vec_point(Vec::Constant(1, 5)), cert_of(Vec::Zero(1), Vec::Ones(1), 0, 2, 1),
                           ScaledIdentityMetric(1, 2));
    EXPECT_DOUBLE_EQ(out.data()[0], 3);
}

TEST(MetricUpdateTest, Examples) {
    const Layout l = Layout::vectors({2, 3});
    const BlockDiagonalMetric M(l, {1.0, 4.0});
    EXPECT_TRUE(validate_metric_update(M, M, 0.0, 1e-8));
    EXPECT_TRUE(validate_metric_update(M, BlockDiagonalMetric(l, {0.5, 2.0}), 0.01, 1e-3));
    const double xi = 0.01;
    const auto grown = validate_metric_update(M, BlockDiagonalMetric(l, {1.0 + 2 * xi, 4.0}), xi, 1e-8);
    EXPECT_FALSE(grown);
    EXPECT_NE(grown.diagnostic.find("block 0"), std::string::npos);
    EXPECT_FALSE(validate_metric_update(M, BlockDiagonalMetric(l, {0.5, 2.0}), 0.01, 0.6));
}

TEST(MetricUpdateTest, SampledForDenseMetrics) {
    const DenseMetric A(2 * Mat::Identity(4, 4));
    EXPECT_TRUE(validate_metric_update(A, DenseMetric(2.01 * Mat::Identity(4, 4)), 0.01, 1e-8));
    EXPECT_FALSE(validate_metric_update(A, DenseMetric(2.1 * Mat::Identity(4, 4)), 0.01, 1e-8));
}

TEST(XiScheduleTest, ClosedFormProduct) {
    for (double xi0 : {0.0, 0.01, 0.5, 2.0}) {
        const XiSchedule s{xi0};
        EXPECT_NEAR(s.product(200000), s.product_total(), 1e-5 * s.product_total());
        const double a = std::numbers::pi * std::sqrt(xi0);
        EXPECT_NEAR(s.product_total(), xi0 == 0 ? 1.0 : std::sinh(a) / a, 1e-14);
    }
}

TEST(XiScheduleTest, ProductBelowExponentialOfSum) {
    for (double xi0 : {0.001, 0.01, 0.3, 1.0, 5.0})
        for (long k : {0L, 1L, 5L, 50L, 500L}) {
            const XiSchedule s{xi0};
            EXPECT_LE(s.product(k), std::exp(s.partial_sum(0, k)) * (1 + 1e-14));
        }
}

TEST(PointwiseBoundTest, Examples) {
    HpeConfig cfg;
    cfg.xi.xi0 = 0;
    cfg.sigma = 0;
    cfg.theta_min = 0;
    cfg.c_min = 1;
    cfg.omega_lower = cfg.omega_upper = 1;
    auto b = pointwise_bound(4, cfg, 1);
    EXPECT_NEAR(b.bound_v, 1, 1e-15);
    EXPECT_NEAR(b.bound_eps, 0.25, 1e-15);
    EXPECT_NEAR(pointwise_bound(100, cfg, 1).bound_v, 0.2, 1e-15);
}

TEST(PointwiseBoundTest, MatchesIndependentFormula) {
    HpeConfig cfg;
    cfg.sigma = 0.5;
    cfg.theta_min = 0.5;
    cfg.c_min = 0.7;
    cfg.omega_upper = 3;
    cfg.xi.xi0 = 0.2;
    const double d0 = 2.5;
    for (long k : {1L, 7L, 40L}) {
        double S = 0, Xi = 1;
        for (long i = 1; i <= k; ++i)
            S += 0.2 / double((i + 1) * (i + 1));
        for (long i = 0; i < 2000000; ++i)
            Xi *= 1 + 0.2 / (double(i + 1) * double(i + 1));
        const double v = std::sqrt(4 * (1 + S) * Xi * Xi * 3 / (k * 0.5 * std::pow(1.5, 3) * 0.49)) * d0;
        const double e = (1 + S) * Xi / (k * 0.5 * 1.5 * 1.5 * 0.7) * d0 * d0;
        const auto b = pointwise_bound(k, cfg, d0);
        EXPECT_NEAR(b.bound_v, v, 1e-5 * v);
        EXPECT_NEAR(b.bound_eps, e, 1e-5 * e);
    }
}

TEST(LinearRateTest, Examples) {
    // kappa / c * sqrt(Xi w_up / w_lo) = 1
    EXPECT_NEAR(linear_rate_factor(0.5, 0, 0, 1, 1, 4, 1), 0.25, 1e-15);
    double prev = 1;
    for (double kappa : {0.1, 1.0, 10.0, 1e3, 1e6}) {
        const double r = linear_rate_factor(kappa, 0.3, 0.2, 1, 1.01, 2, 1);
        EXPECT_LT(r, prev);
        EXPECT_GT(r, 0);
        prev = r;
    }
    EXPECT_LT(prev, 1e-10);
    EXPECT_THROW(linear_rate_factor(0, 0.3, 0, 1, 1, 1, 1), std::invalid_argument);
    EXPECT_THROW(linear_rate_factor(1, 1.0, 0, 1, 1, 1, 1), std::invalid_argument);
}

TEST(LinearRateTest, MatchesIndependentFormula) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Vec r = random_normal(6, seed).cwiseAbs();
        const double kappa = 0.1 + r[0], sigma = std::min(0.9, r[1] / 3), theta = -0.5 + r[2] / 2, c = 0.5 + r[3],
                     Xi = 1 + r[4] / 10, lo = 0.5, hi = 0.5 + r[5];
        const double t = kappa / c * std::sqrt(Xi * hi / lo);
        const double s = std::sqrt(sigma + 4 * std::max(-theta, 0.0) / std::pow(1 + theta, 2));
        const double expected = (1 - sigma) * (1 + theta) / (std::pow(1 + t, 2) * std::pow(1 + s, 2));
        EXPECT_NEAR(linear_rate_factor(kappa, sigma, theta, c, Xi, hi, lo), expected, 1e-14);
    }
}

TEST(ErgodicTest, SingleAndConstantHistories) {
    const HpeCertificate a = cert_of(random_normal(3, 1), random_normal(3, 2), 0.3, 1, 0.5);
    auto one = ergodic_aggregate({a}, {1.0});
    EXPECT_EQ(one.y.data(), a.y.data());
    EXPECT_EQ(one.v.data(), a.v.data());
    EXPECT_DOUBLE_EQ(one.eps, 0.3);

    HpeCertificate b = a;
    b.eps = 0.7;
    b.theta = 0.1;
    const auto two = ergodic_aggregate({a, b}, {1.0, 2.0});
    EXPECT_LE((two.y.data() - a.y.data()).norm(), 1e-15);
    const double w1 = 1.5, w2 = 1.1 * 2;
    EXPECT_NEAR(two.eps, (w1 * 0.3 + w2 * 0.7) / (w1 + w2), 1e-15);

    EXPECT_THROW(ergodic_aggregate({a}, {0.0}), std::invalid_argument);
}

TEST(ErgodicTest, WeightedMeanOnFbhfRun) {
    const auto inst = reference::fbhf_instance(3, 12);
    HpeConfig cfg;
    cfg.sigma = inst.sigma;
    cfg.c_min = inst.gamma;
    cfg.max_iters = 50;
    cfg.tol = 0;
    RunOptions opts;
    opts.keep_history = true;
    const auto res = run(fbhf_oracle(inst.problem, inst.gamma, inst.theta, inst.sigma, 12), vec_point(inst.x0),
                         std::make_shared<ScaledIdentityMetric>(12), cfg, opts);
    ASSERT_EQ(res.history.size(), 50u);
    std::vector<double> alpha(50);
    for (size_t i = 0; i < 50; ++i)
        alpha[i] = double(i + 1);
    const auto agg = ergodic_aggregate(res.history, alpha);
    Vec v = Vec::Zero(12), y = Vec::Zero(12);
    double W = 0;
    for (size_t i = 0; i < 50; ++i) {
        const double w = (1 + res.history[i].theta) * res.history[i].c * alpha[i];
        v += w * res.history[i].v.data();
        y += w * res.history[i].y.data();
        W += w;
    }
    EXPECT_LE((agg.v.data() - v / W).norm(), 1e-12 * (1 + v.norm() / W));
    EXPECT_LE((agg.y.data() - y / W).norm(), 1e-12 * (1 + y.norm() / W));
    EXPECT_GE(agg.eps, -1e-12);
}

TEST(RunTest, AffineResolventConvergesGeometrically) {
    // T(x) = x: resolvent x / (1 + c).
    const StepOracle oracle = [](const BlockPoint &x, const Metric &, long) {
        OracleStep s;
        s.cert.y = (1.0 / 2.0) * x;
        s.cert.v = x - s.cert.y;
        return s;
    };
    HpeConfig cfg;
    cfg.sigma = 0.1;
    cfg.theta_min = 0;
    cfg.tol = 1e-12;
    const auto res = run(oracle, vec_point(random_normal(6, 3)), std::make_shared<ScaledIdentityMetric>(6), cfg);
    EXPECT_EQ(res.termination, Termination::converged);
    EXPECT_LE(res.solution.norm(), 1e-11);
    for (size_t i = 1; i < res.trace.size(); ++i)
        EXPECT_LE(res.trace.records[i].v_norm, 0.5 * res.trace.records[i - 1].v_norm * (1 + 1e-12));
}

TEST(RunTest, ZeroAtStartTerminatesImmediately) {
    const StepOracle oracle = [](const BlockPoint &x, const Metric &, long) {
        OracleStep s;
        s.cert.y = x;
        s.cert.v = BlockPoint(x.layout());
        return s;
    };
    const BlockPoint x0 = vec_point(random_normal(4, 9));
    const auto res = run(oracle, x0, std::make_shared<ScaledIdentityMetric>(4), HpeConfig{});
    EXPECT_EQ(res.termination, Termination::converged);
    EXPECT_EQ(res.iterations(), 1);
    EXPECT_EQ(res.solution.data(), x0.data());
}

TEST(RunTest, CriterionViolationAborts) {
    const StepOracle oracle = [](const BlockPoint &x, const Metric &, long) {
        OracleStep s;
        s.cert.y = BlockPoint(x.layout());
        s.cert.v = 3.0 * x;
        return s;
    };
    const auto res =
        run(oracle, vec_point(random_normal(4, 10)), std::make_shared<ScaledIdentityMetric>(4), HpeConfig{});
    EXPECT_EQ(res.termination, Termination::criterion_violation);
    EXPECT_FALSE(res.diagnostic.empty());
}

TEST(RunTest, MetricScheduleViolationAborts) {
    const StepOracle oracle = [](const BlockPoint &x, const Metric &, long) {
        OracleStep s;
        s.cert.y = 0.5 * x;
        s.cert.v = x - s.cert.y;
        return s;
    };
    RunOptions opts;
    opts.metric_schedule = [](long, const MetricPtr &) -> MetricPtr {
        return std::make_shared<ScaledIdentityMetric>(3, 2.0);
    };
    HpeConfig cfg;
    cfg.tol = 0;
    cfg.max_iters = 5;
    const auto res = run(oracle, vec_point(random_normal(3, 11)), std::make_shared<ScaledIdentityMetric>(3), cfg, opts);
    EXPECT_EQ(res.termination, Termination::metric_violation);
}

// Fejer-type contraction and step bounds along runs of the exact affine oracle.
TEST(RunTest, ContractionAndStepBounds) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto inst = reference::affine_instance(seed, 15, 0.1);
        for (double theta : {-0.3, 0.0, 0.4}) {
            const double c = 0.8, sigma = 0.6;
            HpeConfig cfg;
            cfg.sigma = sigma;
            cfg.theta_min = -0.5;
            cfg.c_min = c;
            cfg.tol = 0;
            cfg.max_iters = 60;
            cfg.xi.xi0 = 0;
            RunOptions opts;
            const BlockPoint xs = vec_point(inst.x_star);
            opts.reference = &xs;
            bool ok = true;
            opts.observer = [&](const StepView &sv) {
                const Vec d = sv.x.data() - sv.cert.y.data();
                const double dm = weighted_norm_sq(sv.metric, d);
                const double lhs = weighted_norm_sq(sv.metric_next, Vec(sv.x_next.data() - inst.x_star));
                const double prev = weighted_norm_sq(sv.metric, Vec(sv.x.data() - inst.x_star));
                const double t1 = 1 + sv.cert.theta;
                ok &= lhs <= prev - (1 - sigma) * t1 * dm + 1e-9 * (1 + prev);
                const Vec step = sv.cert.c * sv.metric.solve(sv.cert.v.data());
                ok &= weighted_norm_sq(sv.metric, step) <= 4 / (t1 * t1) * dm * (1 + 1e-10) + 1e-14;
                ok &= sv.cert.c * sv.cert.eps <= dm / t1 * (1 + 1e-10) + 1e-14;
            };
            const auto res = run(reference::affine_oracle(inst, c, theta), vec_point(inst.x0),
                                 std::make_shared<ScaledIdentityMetric>(15), cfg, opts);
            EXPECT_EQ(res.termination, Termination::max_iters);
            EXPECT_TRUE(ok) << "seed " << seed << " theta " << theta;
        }
    }
}

TEST(RunTest, DeterministicTraces) {
    const auto inst = reference::fbhf_instance(5, 20);
    HpeConfig cfg;
    cfg.sigma = inst.sigma;
    cfg.c_min = inst.gamma;
    cfg.max_iters = 80;
    auto once = [&] {
        auto r = run(fbhf_oracle(inst.problem, inst.gamma, inst.theta, inst.sigma, 20), vec_point(inst.x0),
                     std::make_shared<ScaledIdentityMetric>(20), cfg);
        for (auto &rec : r.trace.records)
            rec.time_s = 0;
        std::ostringstream os;
        write_trace_csv(os, r.trace);
        return os.str();
    };
    EXPECT_EQ(once(), once());
}

TEST(LogLogSlopeTest, RecoversPowerLaw) {
    std::vector<double> y(200);
    for (size_t k = 0; k < y.size(); ++k)
        y[k] = 3.0 / std::pow(double(k + 1), 1.5);
    EXPECT_NEAR(*loglog_slope(y, 20, 200), -1.5, 1e-12);
    EXPECT_FALSE(loglog_slope({1.0, 0.5}, 1, 2).has_value());
}

TEST(TraceTest, CsvHasOneRowPerRecord) {
    IterTrace t;
    t.extra_columns = {"a"};
    for (long k = 1; k <= 3; ++k) {
        IterRecord r;
        r.iter = k;
        r.extra = {double(k)};
        t.append(r);
    }
    std::ostringstream os;
    write_trace_csv(os, t);
    const std::string s = os.str();
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
    EXPECT_EQ(s.substr(0, s.find('\n')), std::string(kTraceColumns) + ",a");
}

} // namespace
} // namespace vmor
