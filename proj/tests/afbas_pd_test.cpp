#include <vmor/reference.hpp>
#include <vmor/splitters.hpp>

#include <gtest/gtest.h>

namespace vmor {
namespace {

AfbasPd with_relaxation(const PrimalDualProblem &p, AfbasPdParams q, double sigma, double fraction) {
    q.relaxation = 1e-6;
    const double ds = AfbasPd(p, q, sigma).delta_sigma();
    q.relaxation = fraction * ds;
    return AfbasPd(p, q, sigma);
}

TEST(AfbasPdTest, FullExtrapolationFollowsCondatVuDirection) {
    const auto inst = reference::primal_dual_instance(3, 8, 5);
    const double bn = spectral_upper_bound(inst.problem.B);
    AfbasPdParams q;
    q.primal_step = 1 / (inst.problem.L + 2 * bn);
    q.dual_step = 1 / (2 * bn);
    q.extrapolation = 2;
    const AfbasPd af = with_relaxation(inst.problem, q, 0.5, 0.9);
    const CondatVu cv(inst.problem, 1 / q.primal_step, 1 / q.dual_step, 0.5);
    BlockPoint z = inst.z0;
    for (int k = 0; k < 30; ++k) {
        const Vec a = af.step(z).next.data() - z.data();
        const Vec b = cv.native_step(z, 0).data() - z.data();
        EXPECT_GE(std::abs(a.dot(b)) / (a.norm() * b.norm()), 1 - 1e-10);
        z = af.step(z).next;
    }
}

TEST(AfbasPdTest, DecoupledCaseIsProximalGradient) {
    const Mat Q = Eigen::Vector3d(1, 2, 4).asDiagonal();
    const Vec c = random_normal(3, 1);
    PrimalDualProblem p;
    p.grad_f = [Q, c](const Vec &x) -> Vec { return Q * x - c; };
    p.L = 4;
    p.prox_g = l1_fn(0.3).prox;
    p.prox_h = zero_fn().prox;
    p.B = LinearMap::zero(2, 3);
    AfbasPdParams q;
    q.primal_step = 0.25;
    q.dual_step = 1;
    q.extrapolation = 0;
    q.skew_split = 0.5;
    q.relaxation = 1;
    const AfbasPd af(p, q, 0.9);
    BlockPoint z(p.layout());
    z.block(0) = random_normal(3, 2);
    for (int k = 0; k < 10; ++k) {
        const Vec x = z.block(0);
        const Vec pg = prox_l1(0.25, 0.3, x - 0.25 * (Q * x - c));
        z = af.step(z).next;
        EXPECT_LE((z.block(0) - pg).norm(), 1e-14);
    }
}

TEST(AfbasPdTest, LimitMatchesReference) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto inst = reference::primal_dual_instance(seed, 6, 4);
        const AfbasPd af(inst.problem, reference::afbas_setup(inst.problem, 0.5), 0.5);
        HpeConfig cfg;
        cfg.sigma = 0.5;
        cfg.theta_min = -0.999;
        cfg.omega_lower = af.metric()->omega_lower();
        cfg.omega_upper = af.metric()->omega_upper();
        cfg.max_iters = 200000;
        cfg.tol = 1e-10;
        const auto res = run(af.oracle(), inst.z0, af.metric(), cfg);
        ASSERT_EQ(res.termination, Termination::converged) << res.diagnostic;
        EXPECT_LE((res.solution.data() - inst.z_star.data()).norm(), 1e-6);
    }
}

TEST(AfbasPdTest, CertificatesPassCriterionAndMatchKernel) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto inst = reference::primal_dual_instance(seed, 4 + static_cast<Index>(seed), 2 + static_cast<Index>(seed % 6));
        const double sigma = 0.3 + 0.03 * static_cast<double>(seed);
        const AfbasPd af(inst.problem, reference::afbas_setup(inst.problem, sigma), sigma);
        BlockPoint z = inst.z0;
        for (int k = 0; k < 100; ++k) {
            const SplitStep s = af.step(z);
            ASSERT_GE(check_criterion(z, s.cert, *af.metric(), sigma).slack, -1e-10) << "seed " << seed;
            ASSERT_LE((extragradient_step(z, s.cert, *af.metric()).data() - s.next.data()).norm(),
                      1e-10 * (1 + z.norm()));
            z = s.next;
        }
    }
}

TEST(AfbasPdTest, StepRulesAgree) {
    const auto inst = reference::primal_dual_instance(4, 7, 5);
    const AfbasPdParams q = reference::afbas_setup(inst.problem, 0.5);
    const AfbasPd a(inst.problem, q, 0.5, AfbasStepRule::quadratic_form);
    const AfbasPd b(inst.problem, q, 0.5, AfbasStepRule::metric_form);
    BlockPoint z = inst.z0;
    for (int k = 0; k < 20; ++k) {
        const SplitStep sa = a.step(z), sb = b.step(z);
        EXPECT_NEAR(sa.cert.theta, sb.cert.theta, 1e-10 * (1 + std::abs(sa.cert.theta)));
        z = sa.next;
    }
}

TEST(AfbasPdTest, ParameterConditionsEnforced) {
    const auto inst = reference::primal_dual_instance(5, 6, 4);
    AfbasPdParams q = reference::afbas_setup(inst.problem, 0.5);
    const AfbasPd ok(inst.problem, q, 0.5);
    EXPECT_GT(ok.delta(), ok.delta_sigma());
    q.relaxation = 1.01 * ok.delta_sigma();
    EXPECT_THROW(AfbasPd(inst.problem, q, 0.5), std::invalid_argument);
    q = reference::afbas_setup(inst.problem, 0.5);
    q.primal_step = 10;
    EXPECT_THROW(AfbasPd(inst.problem, q, 0.5), std::invalid_argument);
    q = reference::afbas_setup(inst.problem, 0.5);
    q.skew_split = 1.5;
    EXPECT_THROW(AfbasPd(inst.problem, q, 0.5), std::invalid_argument);
}

} // namespace
} // namespace vmor
