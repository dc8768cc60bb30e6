#include <vmor/problems.hpp>
#include <vmor/reference.hpp>

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <filesystem>

namespace vmor {
namespace {

TEST(GenQpTest, HandKktExample) {
    Vec e1 = Vec::Zero(3);
    e1[0] = 1;
    const QpInstance qp = make_qp({Mat::Identity(3, 3)}, {Vec::Zero(3)}, {Mat::Identity(3, 3)}, e1);
    EXPECT_LE((qp.x_star.data() - e1).norm(), 1e-14);
    EXPECT_LE((qp.y_star + e1).norm(), 1e-14);
}

TEST(GenQpTest, StoredSolutionSolvesKkt) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const QpInstance qp = gen_qp(seed, 1 + static_cast<int>(seed % 3), 4 + static_cast<Index>(seed % 5),
                                     static_cast<Index>(seed % 4));
        EXPECT_LE(qp.kkt_residual, 1e-10);
        EXPECT_LE(qp.residual(qp.x_star.data(), qp.y_star), 1e-10);
        if (qp.dual_dim() > 0) {
            // Independent route: Schur complement on the assembled system.
            const auto ref = reference::kkt_schur(qp.Q_full(), qp.q_full(), qp.C_full(), qp.b);
            EXPECT_LE((ref.x - qp.x_star.data()).norm(), 1e-8 * (1 + ref.x.norm()));
            EXPECT_LE((ref.y - qp.y_star).norm(), 1e-8 * (1 + ref.y.norm()));
        }
    }
}

TEST(GenQpTest, DeterministicPerSeed) {
    const QpInstance a = gen_qp(7, 2, 5, 3), b = gen_qp(7, 2, 5, 3), c = gen_qp(8, 2, 5, 3);
    for (size_t i = 0; i < a.Q.size(); ++i) {
        EXPECT_EQ(a.Q[i], b.Q[i]);
        EXPECT_EQ(a.q[i], b.q[i]);
        EXPECT_EQ(a.C[i], b.C[i]);
    }
    EXPECT_EQ(a.b, b.b);
    EXPECT_EQ(a.x_star.data(), b.x_star.data());
    EXPECT_NE(a.b, c.b);
}

TEST(GenQpTest, RejectsBadShapes) {
    EXPECT_THROW(gen_qp(1, 0, 5, 3), std::invalid_argument);
    EXPECT_THROW(gen_qp(1, 1, 2, 3), std::invalid_argument);
    EXPECT_THROW(make_qp({Mat::Identity(2, 2)}, {Vec::Zero(3)}, {Mat::Identity(2, 2)}, Vec::Zero(2)),
                 std::invalid_argument);
}

TEST(QpAdaptersTest, MultiBlockMatchesInstance) {
    const QpInstance qp = gen_qp(3, 2, 5, 3);
    MultiBlockProblem p = qp_multiblock(qp);
    EXPECT_NO_THROW(p.validate());
    EXPECT_LE((p.constraint_value(qp.x_star) - qp.C_full() * qp.x_star.data()).norm(), 1e-12);
    const BlockPoint g = p.grad_f(qp.x_star);
    EXPECT_LE((g.data() - (qp.Q_full() * qp.x_star.data() - qp.q_full())).norm(), 1e-12);
}

TEST(QpAdaptersTest, AffineProjection) {
    const QpInstance qp = gen_qp(4, 1, 6, 2);
    const Vec x = random_normal(6, 5);
    const Vec px = project_affine(qp.C[0], qp.b, x);
    EXPECT_LE((qp.C[0] * px - qp.b).norm(), 1e-12);
    // x - px lies in the row space of C.
    const Vec coef = (qp.C[0] * qp.C[0].transpose()).ldlt().solve(qp.C[0] * (x - px));
    EXPECT_LE((qp.C[0].transpose() * coef - (x - px)).norm(), 1e-10);
}

TEST(GraphLaplacianTest, Examples) {
    Mat W(2, 2);
    W << 0, 1, 1, 0;
    Mat L(2, 2);
    L << 1, -1, -1, 1;
    EXPECT_EQ(build_graph_laplacian(W), L);
    EXPECT_EQ(build_graph_laplacian(Mat::Zero(4, 4)), Mat(Mat::Zero(4, 4)));
}

TEST(GraphLaplacianTest, RandomAffinityIsPsdWithNullOnes) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Mat A = randn(12, 12, seed).cwiseAbs();
        Mat W = A + A.transpose();
        W.diagonal().setZero();
        const Mat L = build_graph_laplacian(W);
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(L).eigenvalues().minCoeff(), -1e-10);
        EXPECT_LE((L * Vec::Ones(12)).norm(), 1e-12);
    }
}

TEST(GraphLaplacianTest, RejectsInvalidAffinity) {
    Mat W(2, 2);
    W << 0, 1, 2, 0;
    EXPECT_THROW(build_graph_laplacian(W), std::invalid_argument);
    W << 0, -1, -1, 0;
    EXPECT_THROW(build_graph_laplacian(W), std::invalid_argument);
    W << 1, 1, 1, 0;
    EXPECT_THROW(build_graph_laplacian(W), std::invalid_argument);
    EXPECT_THROW(build_graph_laplacian(Mat::Zero(2, 3)), std::invalid_argument);
}

TEST(GraphLaplacianTest, KnnAffinity) {
    const Mat P = randn(3, 15, 2);
    const Mat W = knn_heat_affinity(P, 4);
    EXPECT_EQ(W, W.transpose());
    EXPECT_EQ(W.diagonal().cwiseAbs().maxCoeff(), 0);
    EXPECT_GE(W.minCoeff(), 0);
    EXPECT_LE(W.maxCoeff(), 1);
    for (Index i = 0; i < 15; ++i)
        EXPECT_GE((W.col(i).array() > 0).count(), 4);
    const auto [LZ, LG] = lrr_laplacians(P, 4);
    EXPECT_EQ(LZ.rows(), 15);
    EXPECT_EQ(LG.rows(), 3);
}

class LrrTest : public testing::Test {
  protected:
    void SetUp() override {
        X = randn(6, 8, 11);
        std::tie(LZ, LG) = lrr_laplacians(X, 3);
    }
    Mat X, LZ, LG;
};

TEST_F(LrrTest, NullDataHasZeroResidualAtOrigin) {
    const LrrInstance inst =
        build_lrr_unchecked(Mat::Zero(6, 8), LZ, LG, 1.0, 0.0, 0.0, LaplacianOrientation::rows);
    const BlockPoint z0(inst.problem.z_layout());
    EXPECT_LE(pkkt_residual(z0, inst.problem).norm, 1e-12);
    EXPECT_EQ(inst.problem.f_value(inst.problem.primal(z0)), 0);
}

TEST_F(LrrTest, PaperWeightsAccepted) {
    EXPECT_NO_THROW(build_lrr(X, LZ, LG, 1e3, 1e4, 1e4));
    EXPECT_THROW(build_lrr(X, LZ, LG, 0.0, 1e4, 1e4), std::invalid_argument);
    EXPECT_THROW(build_lrr(X, LZ, -LG, 1, 1, 1), std::invalid_argument);
    EXPECT_THROW(build_lrr(X, LG, LZ, 1, 1, 1), std::invalid_argument);
}

TEST_F(LrrTest, GradientMatchesFiniteDifferences) {
    for (auto orientation : {LaplacianOrientation::rows, LaplacianOrientation::columns}) {
        const LrrInstance inst = build_lrr(X, LZ, LG, 1.0, 2.0, 3.0, orientation);
        const auto &p = inst.problem;
        const BlockPoint x(p.x_layout, random_normal(p.x_layout.dim(), 5));
        const BlockPoint dir(p.x_layout, random_normal(p.x_layout.dim(), 6));
        const double h = 1e-5;
        const double fd = (p.f_value(x + h * dir) - p.f_value(x - h * dir)) / (2 * h);
        const double an = inner(p.grad_f(x), dir);
        EXPECT_LE(std::abs(fd - an), 1e-6 * (1 + std::abs(an)));
    }
}

TEST_F(LrrTest, OrientationsDiffer) {
    const Mat Z = randn(8, 8, 3);
    const LrrInstance rows = build_lrr(X, LZ, LG, 1, 1, 1, LaplacianOrientation::rows);
    const LrrInstance cols = build_lrr(X, LZ, LG, 1, 1, 1, LaplacianOrientation::columns);
    BlockPoint x(rows.problem.x_layout);
    x.matrix(0) = Z;
    EXPECT_NEAR(rows.problem.f_value(x), 0.5 * (Z * LZ * Z.transpose()).trace(), 1e-10);
    EXPECT_NEAR(cols.problem.f_value(x), 0.5 * (Z.transpose() * LZ * Z).trace(), 1e-10);
}

TEST_F(LrrTest, ConstraintMapsAndAdjoints) {
    const LrrInstance inst = build_lrr(X, LZ, LG, 1, 1, 1);
    const auto &p = inst.problem;
    for (const auto &A : p.constraint)
        EXPECT_LE(adjoint_check(A, 20, 3).max_residual, 1e-10);

    BlockPoint x(p.x_layout, random_normal(p.x_layout.dim(), 9));
    const Mat Z = x.matrix(0), G = x.matrix(1), E = x.matrix(2), H = x.matrix(3), F = x.matrix(4);
    const Vec r = p.b - p.constraint_value(x);
    const Index d = 6, n = 8;
    const Mat r1 = Eigen::Map<const Mat>(r.data(), d, n);
    EXPECT_LE((r1 - (X - X * Z - G * X - E)).norm(), 1e-12);
    EXPECT_LE((Eigen::Map<const Mat>(r.data() + d * n, n, n) - (H - Z)).norm(), 1e-12);
    EXPECT_LE((Eigen::Map<const Mat>(r.data() + d * n + n * n, d, d) - (F - G)).norm(), 1e-12);

    BlockPoint z(p.z_layout());
    z.data().head(p.x_layout.dim()) = x.data();
    EXPECT_NEAR(inst.feasibility(z), (X - X * Z - G * X - E).norm(), 1e-12);
}

TEST_F(LrrTest, ConstraintNormsBoundOperators) {
    const LrrInstance inst = build_lrr(X, LZ, LG, 1, 1, 1);
    for (size_t i = 0; i < inst.problem.constraint.size(); ++i) {
        const Mat A = inst.problem.constraint[i].to_dense();
        const double s = Eigen::JacobiSVD<Mat>(A).singularValues()(0);
        EXPECT_NEAR(inst.problem.constraint_norm[i], s, 1e-10 * (1 + s));
    }
}

TEST(ManifestTest, QpRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "vmor_manifest_qp";
    std::filesystem::create_directories(dir);
    const QpInstance qp = gen_qp(2, 2, 4, 3);
    write_qp_manifest(dir / "inst.json", qp);
    EXPECT_EQ(manifest_kind(dir / "inst.json"), "qp");
    const QpInstance back = read_qp_manifest(dir / "inst.json");
    ASSERT_EQ(back.Q.size(), 2u);
    EXPECT_LE((back.Q_full() - qp.Q_full()).norm(), 1e-14);
    EXPECT_LE((back.C_full() - qp.C_full()).norm(), 1e-14);
    EXPECT_LE((back.b - qp.b).norm(), 1e-14);
    EXPECT_LE((back.x_star.data() - qp.x_star.data()).norm(), 1e-10);
    std::filesystem::remove_all(dir);
}

TEST(ManifestTest, LrrRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "vmor_manifest_lrr";
    std::filesystem::create_directories(dir);
    const Mat X = randn(5, 7, 3);
    const auto [LZ, LG] = lrr_laplacians(X, 3);
    const LrrInstance inst = build_lrr(X, LZ, LG, 2, 3, 4, LaplacianOrientation::columns);
    write_lrr_manifest(dir / "lrr.json", inst);
    EXPECT_EQ(manifest_kind(dir / "lrr.json"), "lrr");
    const LrrInstance back = read_lrr_manifest(dir / "lrr.json");
    EXPECT_LE((back.X - X).norm(), 1e-14);
    EXPECT_LE((back.L_Z - LZ).norm(), 1e-14);
    EXPECT_EQ(back.lambda, 2);
    EXPECT_EQ(back.gamma, 4);
    EXPECT_EQ(back.orientation, LaplacianOrientation::columns);
    std::filesystem::remove_all(dir);
}

TEST(ManifestTest, MissingFileThrows) {
    EXPECT_THROW(manifest_kind("/nonexistent/manifest.json"), std::runtime_error);
}

} // namespace
} // namespace vmor
