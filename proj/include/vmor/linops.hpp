#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vmor {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Shape of one block. Vector blocks have cols == 1; matrix blocks are stored
/// flattened in column-major order.
struct BlockShape {
    Index rows = 0;
    Index cols = 1;

    Index size() const { return rows * cols; }
    bool operator==(const BlockShape &) const = default;
};

class Layout {
  public:
    Layout() = default;
    explicit Layout(std::vector<BlockShape> shapes);

    static Layout vectors(const std::vector<Index> &sizes);
    static Layout single(Index n) { return vectors({n}); }

    Index num_blocks() const { return static_cast<Index>(shapes_.size()); }
    Index dim() const { return offsets_.back(); }
    Index offset(Index i) const { return offsets_[static_cast<size_t>(i)]; }
    const BlockShape &shape(Index i) const { return shapes_[static_cast<size_t>(i)]; }
    const std::vector<BlockShape> &shapes() const { return shapes_; }

    /// Layout with the blocks of `other` appended.
    Layout concat(const Layout &other) const;

    bool operator==(const Layout &other) const { return shapes_ == other.shapes_; }

  private:
    std::vector<BlockShape> shapes_;
    std::vector<Index> offsets_{0};
};

/// Throws std::invalid_argument naming `what` when the layouts differ.
void require_same_layout(const Layout &a, const Layout &b, const char *what);

/// Element of a product space, stored as one contiguous vector plus layout.
class BlockPoint {
  public:
    BlockPoint() = default;
    explicit BlockPoint(Layout layout);
    BlockPoint(Layout layout, Vec data);

    const Layout &layout() const { return layout_; }
    Vec &data() { return data_; }
    const Vec &data() const { return data_; }
    Index dim() const { return data_.size(); }

    Eigen::VectorBlock<Vec> block(Index i);
    Eigen::VectorBlock<const Vec> block(Index i) const;
    Eigen::Map<Mat> matrix(Index i);
    Eigen::Map<const Mat> matrix(Index i) const;

    double squared_norm() const { return data_.squaredNorm(); }
    double norm() const { return data_.norm(); }

    BlockPoint &operator+=(const BlockPoint &o);
    BlockPoint &operator-=(const BlockPoint &o);
    BlockPoint &operator*=(double s);

  private:
    Layout layout_;
    Vec data_;
};

BlockPoint operator+(BlockPoint a, const BlockPoint &b);
BlockPoint operator-(BlockPoint a, const BlockPoint &b);
BlockPoint operator*(double s, BlockPoint a);

/// Sum of blockwise Euclidean inner products.
double inner(const BlockPoint &a, const BlockPoint &b);

/// Linear operator between flat vector spaces together with its adjoint.
struct LinearMap {
    Index domain_dim = 0;
    Index codomain_dim = 0;
    std::function<Vec(const Vec &)> apply;
    std::function<Vec(const Vec &)> adjoint;

    Vec operator()(const Vec &v) const { return apply(v); }

    /// The map u -> A* u, whose adjoint is A.
    LinearMap transposed() const;
    /// Dense matrix obtained by applying the map to unit vectors.
    Mat to_dense() const;

    static LinearMap from_matrix(Mat A);
    static LinearMap identity(Index n);
    static LinearMap zero(Index rows, Index cols);
};

/// Self-adjoint positive-definite operator.
class Metric {
  public:
    virtual ~Metric() = default;
    virtual Index dim() const = 0;
    virtual Vec apply(const Vec &v) const = 0;
    virtual Vec solve(const Vec &v) const = 0;
    virtual double omega_lower() const = 0;
    virtual double omega_upper() const = 0;
};
using MetricPtr = std::shared_ptr<const Metric>;

class ScaledIdentityMetric final : public Metric {
  public:
    ScaledIdentityMetric(Index n, double scale = 1.0);
    Index dim() const override { return n_; }
    Vec apply(const Vec &v) const override { return scale_ * v; }
    Vec solve(const Vec &v) const override { return v / scale_; }
    double omega_lower() const override { return scale_; }
    double omega_upper() const override { return scale_; }
    double scale() const { return scale_; }

  private:
    Index n_;
    double scale_;
};

/// Each block i is d_i times the identity.
class BlockDiagonalMetric final : public Metric {
  public:
    BlockDiagonalMetric(Layout layout, std::vector<double> scalars);
    Index dim() const override { return layout_.dim(); }
    Vec apply(const Vec &v) const override;
    Vec solve(const Vec &v) const override;
    double omega_lower() const override;
    double omega_upper() const override;

    const Layout &layout() const { return layout_; }
    const std::vector<double> &scalars() const { return scalars_; }

  private:
    Layout layout_;
    std::vector<double> scalars_;
};

/// Dense SPD matrix with a cached Cholesky factor and exact spectral bounds.
class DenseMetric final : public Metric {
  public:
    /// Throws std::invalid_argument when `M` is not symmetric positive definite.
    explicit DenseMetric(Mat M);
    Index dim() const override { return M_.rows(); }
    Vec apply(const Vec &v) const override { return M_ * v; }
    Vec solve(const Vec &v) const override { return llt_.solve(v); }
    double omega_lower() const override { return lo_; }
    double omega_upper() const override { return hi_; }
    const Mat &matrix() const { return M_; }

  private:
    Mat M_;
    Eigen::LLT<Mat> llt_;
    double lo_ = 0, hi_ = 0;
};

/// Metric given by callables; the spectral bounds are supplied by the caller.
class OperatorMetric final : public Metric {
  public:
    OperatorMetric(Index n, std::function<Vec(const Vec &)> apply,
                   std::function<Vec(const Vec &)> solve, double omega_lower,
                   double omega_upper);
    Index dim() const override { return n_; }
    Vec apply(const Vec &v) const override { return apply_(v); }
    Vec solve(const Vec &v) const override { return solve_(v); }
    double omega_lower() const override { return lo_; }
    double omega_upper() const override { return hi_; }

  private:
    Index n_;
    std::function<Vec(const Vec &)> apply_, solve_;
    double lo_, hi_;
};

/// <v, M v>. Throws std::invalid_argument on a dimension or layout mismatch.
double weighted_norm_sq(const Metric &M, const BlockPoint &v);
double weighted_norm_sq(const Metric &M, const Vec &v);

/// Upper estimate of the largest singular value: power iteration on A*A
/// followed by multiplication with `inflation`.
double spectral_upper_bound(const LinearMap &A, int iters = 100, std::uint64_t seed = 0,
                            double inflation = 1.05);

struct AdjointReport {
    double max_residual = 0;
    bool flagged = false;
};

/// max over probes of |<Av,u> - <v,A*u>| / (1 + |Av| |u|), flagged above 1e-8.
AdjointReport adjoint_check(const LinearMap &A, int probes = 20, std::uint64_t seed = 0);

/// Standard normal vector from a seeded generator.
Vec random_normal(Index n, std::uint64_t seed);

} // namespace vmor
