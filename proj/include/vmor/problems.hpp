#pragma once

#include <vmor/padmm_ebb.hpp>
#include <vmor/splitters.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vmor {

// ---------------------------------------------------------------------------
// Separable quadratic programs with linear equality constraints:
//   min sum_i (1/2) x_i' Q_i x_i - q_i' x_i   s.t.  sum_i C_i x_i = b.

struct QpInstance {
    std::vector<Mat> Q;
    std::vector<Vec> q;
    std::vector<Mat> C;
    Vec b;
    /// Reference solution of [Q C'; C 0][x; y] = [q; b].
    BlockPoint x_star;
    Vec y_star;
    double kkt_residual = 0;

    Layout x_layout() const;
    Index dual_dim() const { return b.size(); }
    /// Block-diagonal Hessian and horizontally stacked constraint matrix.
    Mat Q_full() const;
    Vec q_full() const;
    Mat C_full() const;
    /// |Q x - q + C' y| + |C x - b| (Euclidean norm of the stacked residual).
    double residual(const Vec &x, const Vec &y) const;
    /// z* = (x*, y*) on the layout of the multi-block problem.
    BlockPoint z_star() const;
};

/// Assembles an instance and solves its KKT system densely. Throws
/// std::invalid_argument on shape mismatch and std::runtime_error when the
/// KKT matrix is singular.
QpInstance make_qp(std::vector<Mat> Q, std::vector<Vec> q, std::vector<Mat> C, Vec b);

/// Random strongly convex instance with p blocks of size n and m constraints.
/// Redraws until the constraints have full row rank. Deterministic per seed.
QpInstance gen_qp(std::uint64_t seed, int p, Index n, Index m);

MultiBlockProblem qp_multiblock(const QpInstance &qp);
/// Stacked x, f the whole quadratic, g = 0, h the indicator of {b}, B = C.
PrimalDualProblem qp_primal_dual(const QpInstance &qp);
/// One summand, r the indicator of {x : C x = b}.
PpgProblem qp_ppg(const QpInstance &qp, double alpha);
/// A the normal cone of {x : C x = b}, B1 = grad f.
FbhfProblem qp_fbhf(const QpInstance &qp);
/// Euclidean projection onto {x : C x = b}.
Vec project_affine(const Mat &C, const Vec &b, const Vec &x);

// ---------------------------------------------------------------------------
// Low-rank representation with graph regularization, in slack form:
//   min |H|_* + |F|_* + lambda |E|_1 + (mu/2)|Z|_{L_Z}^2 + (gamma/2)|G|_{L_G}^2
//   s.t. X = X Z + G X + E, Z = H, G = F, Z >= 0, G >= 0.

/// rows: tr(Z L Z'); columns: tr(Z' L Z).
enum class LaplacianOrientation { rows, columns };

struct LrrInstance {
    Mat X;
    Mat L_Z, L_G;
    double lambda = 0, mu = 0, gamma = 0;
    LaplacianOrientation orientation = LaplacianOrientation::rows;
    /// Blocks Z (n x n), G (d x d), E (d x n), H (n x n), F (d x d); the dual
    /// block stacks the three constraint residuals.
    MultiBlockProblem problem;

    Index d() const { return X.rows(); }
    Index n() const { return X.cols(); }
    /// |X - X Z - G X - E|_F at the primal part of z.
    double feasibility(const BlockPoint &z) const;
};

/// Throws std::invalid_argument on shape mismatch, nonpositive weights or a
/// Laplacian that is not symmetric positive semidefinite.
LrrInstance build_lrr(const Mat &X, const Mat &L_Z, const Mat &L_G, double lambda, double mu, double gamma,
                      LaplacianOrientation orientation = LaplacianOrientation::rows);

/// Same, with weights allowed to be zero (the null-data checks use it).
LrrInstance build_lrr_unchecked(const Mat &X, const Mat &L_Z, const Mat &L_G, double lambda, double mu,
                                double gamma, LaplacianOrientation orientation);

/// Solver settings used for LRR runs.
PadmmConfig lrr_default_config();

/// L = D - W. Throws std::invalid_argument unless W is symmetric, nonnegative
/// and has a zero diagonal.
Mat build_graph_laplacian(const Mat &W);

/// Symmetrized k-nearest-neighbour heat-kernel affinity over the columns of
/// `points`, exp(-|p_i - p_j|^2 / h^2) with h the median pairwise distance.
Mat knn_heat_affinity(const Mat &points, int k = 5);

/// Laplacians over samples (columns of X) and features (rows of X).
std::pair<Mat, Mat> lrr_laplacians(const Mat &X, int k = 5);

/// Seeded standard normal matrix.
Mat randn(Index rows, Index cols, std::uint64_t seed);

// ---------------------------------------------------------------------------
// JSON manifests referencing MatrixMarket files. Relative paths resolve
// against the manifest's directory.

void write_qp_manifest(const std::filesystem::path &manifest, const QpInstance &qp);
void write_lrr_manifest(const std::filesystem::path &manifest, const LrrInstance &lrr);
/// "qp" or "lrr"; throws std::runtime_error on unreadable manifests.
std::string manifest_kind(const std::filesystem::path &manifest);
QpInstance read_qp_manifest(const std::filesystem::path &manifest);
LrrInstance read_lrr_manifest(const std::filesystem::path &manifest);

} // namespace vmor
