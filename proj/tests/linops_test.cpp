#include <vmor/linops.hpp>

#include <gtest/gtest.h>

#include <Eigen/SVD>

namespace vmor {
namespace {

Mat random_spd(Index n, std::uint64_t seed) {
    const Mat G = Eigen::Map<const Mat>(random_normal(n * n, seed).data(), n, n);
    return G * G.transpose() + 0.5 * Mat::Identity(n, n);
}

TEST(LayoutTest, OffsetsAndConcat) {
    const Layout a = Layout::vectors({2, 3});
    const Layout b(std::vector<BlockShape>{{2, 2}});
    const Layout c = a.concat(b);
    EXPECT_EQ(c.num_blocks(), 3);
    EXPECT_EQ(c.dim(), 9);
    EXPECT_EQ(c.offset(2), 5);
    EXPECT_EQ(c.shape(2).cols, 2);
}

TEST(BlockPointTest, ArithmeticRequiresSameLayout) {
    BlockPoint a(Layout::vectors({2, 1}), Vec::Ones(3));
    BlockPoint b(Layout::vectors({1, 2}), Vec::Ones(3));
    EXPECT_THROW(a += b, std::invalid_argument);
    EXPECT_THROW(inner(a, b), std::invalid_argument);
}

TEST(BlockPointTest, InnerIsSumOfBlockInnerProducts) {
    const Layout l = Layout::vectors({2, 3});
    BlockPoint a(l, random_normal(5, 1)), b(l, random_normal(5, 2));
    const double expected = a.block(0).dot(b.block(0)) + a.block(1).dot(b.block(1));
    EXPECT_NEAR(inner(a, b), expected, 1e-14);
}

TEST(BlockPointTest, MatrixBlocksAreColumnMajor) {
    BlockPoint p(Layout(std::vector<BlockShape>{{2, 3}}));
    p.data() << 1, 2, 3, 4, 5, 6;
    EXPECT_EQ(p.matrix(0)(1, 0), 2);
    EXPECT_EQ(p.matrix(0)(0, 2), 5);
}

TEST(WeightedNormTest, Examples) {
    EXPECT_DOUBLE_EQ(weighted_norm_sq(ScaledIdentityMetric(2), Vec(Eigen::Vector2d(3, 4))), 25);
    EXPECT_DOUBLE_EQ(weighted_norm_sq(ScaledIdentityMetric(2, 2.0), Vec(Eigen::Vector2d(1, 1))), 4);

    const Mat M = random_spd(5, 3);
    const Vec v = random_normal(5, 4);
    double dense = 0;
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j)
            dense += v[i] * M(i, j) * v[j];
    EXPECT_NEAR(weighted_norm_sq(DenseMetric(M), v), dense, 1e-12 * (1 + dense));
}

TEST(WeightedNormTest, DimensionMismatchThrows) {
    EXPECT_THROW(weighted_norm_sq(ScaledIdentityMetric(3), Vec(Vec::Ones(2))), std::invalid_argument);
}

TEST(MetricTest, RayleighQuotientsWithinBounds) {
    const Layout l = Layout::vectors({3, 2, 4});
    const std::vector<MetricPtr> metrics = {
        std::make_shared<ScaledIdentityMetric>(9, 0.3),
        std::make_shared<BlockDiagonalMetric>(l, std::vector<double>{0.5, 2.0, 7.0}),
        std::make_shared<DenseMetric>(random_spd(9, 5)),
    };
    for (const auto &M : metrics) {
        for (int probe = 0; probe < 100; ++probe) {
            const Vec v = random_normal(9, 100 + probe);
            const double q = weighted_norm_sq(*M, v), n2 = v.squaredNorm();
            EXPECT_GE(q, M->omega_lower() * n2 * (1 - 1e-12));
            EXPECT_LE(q, M->omega_upper() * n2 * (1 + 1e-12));
        }
    }
}

TEST(MetricTest, ApplySolveRoundTrip) {
    const Layout l = Layout::vectors({3, 2});
    const BlockDiagonalMetric B(l, {0.25, 3.0});
    const DenseMetric D(random_spd(5, 8));
    for (int probe = 0; probe < 20; ++probe) {
        const Vec v = random_normal(5, 200 + probe);
        EXPECT_LE((B.apply(B.solve(v)) - v).norm(), 1e-15 * v.norm() * 4);
        EXPECT_LE((D.apply(D.solve(v)) - v).norm(), 1e-10 * v.norm());
    }
}

TEST(MetricTest, DenseRejectsIndefinite) {
    Mat M = Mat::Identity(3, 3);
    M(2, 2) = -1;
    EXPECT_THROW(DenseMetric{M}, std::invalid_argument);
    EXPECT_THROW(DenseMetric(Mat(2, 3)), std::invalid_argument);
}

TEST(MetricTest, BlockDiagonalRejectsNonpositiveScalars) {
    EXPECT_THROW(BlockDiagonalMetric(Layout::vectors({1, 1}), {1.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(BlockDiagonalMetric(Layout::vectors({1, 1}), {1.0}), std::invalid_argument);
}

TEST(SpectralBoundTest, Examples) {
    EXPECT_NEAR(spectral_upper_bound(LinearMap::identity(3)), 1.05, 1e-12);
    const Mat D = Eigen::Vector3d(1, 2, 3).asDiagonal();
    const double b = spectral_upper_bound(LinearMap::from_matrix(D));
    EXPECT_GE(b, 3);
    EXPECT_LE(b, 3.15 * (1 + 1e-12));
}

TEST(SpectralBoundTest, AboveSvdAndMonotoneInInflation) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Index r = 2 + static_cast<Index>(seed * 7 % 60), c = 2 + static_cast<Index>(seed * 13 % 60);
        const Mat A = Eigen::Map<const Mat>(random_normal(r * c, seed).data(), r, c);
        const double smax = Eigen::JacobiSVD<Mat>(A).singularValues()(0);
        const LinearMap map = LinearMap::from_matrix(A);
        const double b = spectral_upper_bound(map);
        EXPECT_GE(b, smax);
        EXPECT_LE(b, 1.05 * smax * (1 + 1e-12));
        EXPECT_LE(spectral_upper_bound(map, 100, 0, 1.0), spectral_upper_bound(map, 100, 0, 1.2));
    }
}

TEST(AdjointCheckTest, Examples) {
    const Mat A = Eigen::Map<const Mat>(random_normal(24, 3).data(), 4, 6);
    EXPECT_LE(adjoint_check(LinearMap::from_matrix(A)).max_residual, 1e-12);
    EXPECT_FALSE(adjoint_check(LinearMap::from_matrix(A)).flagged);

    // Square map whose "adjoint" is the map itself.
    const Mat S = Eigen::Map<const Mat>(random_normal(25, 4).data(), 5, 5);
    LinearMap wrong = LinearMap::from_matrix(S);
    wrong.adjoint = [S](const Vec &u) -> Vec { return S * u; };
    const AdjointReport bad = adjoint_check(wrong);
    EXPECT_GT(bad.max_residual, 1e-2);
    EXPECT_TRUE(bad.flagged);

    const Mat K = S - S.transpose();
    LinearMap skew{5, 5, [K](const Vec &v) -> Vec { return K * v; }, [K](const Vec &u) -> Vec { return -(K * u); }};
    EXPECT_LE(adjoint_check(skew).max_residual, 1e-12);
}

TEST(LinearMapTest, TransposedAndDense) {
    const Mat A = Eigen::Map<const Mat>(random_normal(12, 9).data(), 3, 4);
    const LinearMap m = LinearMap::from_matrix(A);
    EXPECT_TRUE(m.to_dense().isApprox(A));
    EXPECT_TRUE(m.transposed().to_dense().isApprox(A.transpose()));
    EXPECT_EQ(LinearMap::zero(2, 3).to_dense().norm(), 0);
}

TEST(RandomNormalTest, SeededAndDistinct) {
    EXPECT_EQ(random_normal(10, 5), random_normal(10, 5));
    EXPECT_NE(random_normal(10, 5), random_normal(10, 6));
}

} // namespace
} // namespace vmor
