#include <vmor/prox.hpp>

#include <gtest/gtest.h>

#include <Eigen/SVD>

namespace vmor {
namespace {

Mat random_mat(Index r, Index c, std::uint64_t seed) { return Eigen::Map<const Mat>(random_normal(r * c, seed).data(), r, c); }

TEST(ProxL1Test, Examples) {
    const Vec v = Eigen::Vector3d(2, -0.5, 0);
    EXPECT_EQ(prox_l1(1, 1, v), Vec(Eigen::Vector3d(1, 0, 0)));
    EXPECT_EQ(prox_l1(0.7, 0, v), v);
}

TEST(ProxL1Test, SubgradientOptimality) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Vec v = 3 * random_normal(25, seed);
        const double t = 0.3, lam = 1.1;
        const Vec u = prox_l1(t, lam, v);
        for (Index i = 0; i < v.size(); ++i) {
            const double g = (v[i] - u[i]) / t;
            if (u[i] != 0)
                EXPECT_NEAR(g, lam * (u[i] > 0 ? 1 : -1), 1e-12);
            else
                EXPECT_LE(std::abs(g), lam + 1e-12);
        }
    }
}

TEST(ProxNuclearTest, Examples) {
    const Mat V = Eigen::Vector2d(3, 1).asDiagonal();
    const Mat expected = Eigen::Vector2d(2, 0).asDiagonal();
    EXPECT_LE((prox_nuclear(1, V) - expected).norm(), 1e-12);

    const Mat R = random_mat(5, 4, 2);
    const double smax = Eigen::JacobiSVD<Mat>(R).singularValues()(0);
    EXPECT_LE(prox_nuclear(1.01 * smax, R).norm(), 1e-12);
}

TEST(ProxNuclearTest, MoreauDecomposition) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Mat V = random_mat(8, 6, seed);
        const double t = 0.5 + 0.2 * static_cast<double>(seed);
        const Mat split = prox_nuclear(t, V) + t * proj_spectral_ball(V / t);
        EXPECT_LE((split - V).norm(), 1e-10 * (1 + V.norm()));
    }
}

TEST(ProxNuclearTest, ShrinksSingularValues) {
    const Mat V = random_mat(6, 7, 9);
    const double t = 0.8;
    const Vec s = Eigen::JacobiSVD<Mat>(V).singularValues();
    const Vec sp = Eigen::JacobiSVD<Mat>(prox_nuclear(t, V)).singularValues();
    for (Index i = 0; i < s.size(); ++i)
        EXPECT_NEAR(sp[i], std::max(s[i] - t, 0.0), 1e-10);
}

TEST(ProjNonnegTest, Examples) {
    EXPECT_EQ(proj_nonneg(Eigen::Vector2d(-1, 2)), Vec(Eigen::Vector2d(0, 2)));
    EXPECT_EQ(proj_nonneg(-Vec::Ones(4)), Vec(Vec::Zero(4)));
    const Vec v = random_normal(30, 4);
    EXPECT_EQ(proj_nonneg(proj_nonneg(v)), proj_nonneg(v));
}

TEST(ProjNonnegTest, Complementarity) {
    const Vec v = random_normal(40, 5);
    const Vec u = proj_nonneg(v);
    for (Index i = 0; i < v.size(); ++i) {
        EXPECT_GE(u[i], 0);
        EXPECT_LE(u[i] * (u[i] - v[i]), 0);
    }
}

TEST(ProxConjugateTest, MoreauIdentityForL1) {
    // h = |.|_1 has h* the indicator of the unit box.
    const ProxFn h = l1_fn(1.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Vec u = 2 * random_normal(12, seed);
        const double t = 0.25 * static_cast<double>(seed);
        EXPECT_LE((prox_conjugate(h.prox, t, u) - proj_box(u, -1, 1)).norm(), 1e-10);
    }
}

TEST(ProxFnTest, FirmlyNonexpansive) {
    const std::vector<ProxFn> fns = {zero_fn(), l1_fn(0.7), nonneg_fn(), box_fn(-1, 2), nuclear_fn(4, 3, 1.5),
                                     point_fn(random_normal(12, 3)), sq_dist_fn(2.0, random_normal(12, 4))};
    for (const auto &g : fns) {
        for (int probe = 0; probe < 30; ++probe) {
            const Vec a = random_normal(12, 1000 + 2 * probe), b = random_normal(12, 1001 + 2 * probe);
            const Vec pa = g(0.9, a), pb = g(0.9, b);
            EXPECT_LE((pa - pb).squaredNorm(), (pa - pb).dot(a - b) + 1e-10) << g.name;
            EXPECT_LE((pa - pb).norm(), (a - b).norm() + 1e-10) << g.name;
        }
    }
}

TEST(ProxFnTest, ValuesMatchDefinitions) {
    const Vec v = Eigen::Vector3d(1, -2, 0.5);
    EXPECT_DOUBLE_EQ(l1_fn(2).value(v), 7);
    EXPECT_TRUE(std::isinf(nonneg_fn().value(v)));
    EXPECT_EQ(nonneg_fn().value(Vec(v.cwiseAbs())), 0);
    EXPECT_DOUBLE_EQ(sq_dist_fn(2, Vec::Zero(3)).value(v), 5.25);
    const Mat M = Eigen::Vector2d(3, 1).asDiagonal();
    EXPECT_NEAR(nuclear_fn(2, 2, 2).value(Eigen::Map<const Vec>(M.data(), 4)), 8, 1e-12);
}

TEST(ProxFnTest, SqDistProxClosedForm) {
    const Vec c = random_normal(6, 7), v = random_normal(6, 8);
    const double w = 3, t = 0.4;
    EXPECT_LE((sq_dist_fn(w, c)(t, v) - (v + t * w * c) / (1 + t * w)).norm(), 1e-14);
}

} // namespace
} // namespace vmor
