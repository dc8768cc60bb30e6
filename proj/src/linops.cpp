#include <vmor/linops.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace vmor {

Layout::Layout(std::vector<BlockShape> shapes) : shapes_(std::move(shapes)) {
    offsets_.reserve(shapes_.size() + 1);
    for (const auto &s : shapes_) {
        if (s.rows < 0 || s.cols < 0)
            throw std::invalid_argument("Layout: negative block shape");
        offsets_.push_back(offsets_.back() + s.size());
    }
}

Layout Layout::vectors(const std::vector<Index> &sizes) {
    std::vector<BlockShape> shapes;
    shapes.reserve(sizes.size());
    for (Index n : sizes)
        shapes.push_back({n, 1});
    return Layout(std::move(shapes));
}

Layout Layout::concat(const Layout &other) const {
    auto shapes = shapes_;
    shapes.insert(shapes.end(), other.shapes_.begin(), other.shapes_.end());
    return Layout(std::move(shapes));
}

void require_same_layout(const Layout &a, const Layout &b, const char *what) {
    if (!(a == b))
        throw std::invalid_argument(std::string(what) + ": layout mismatch");
}

BlockPoint::BlockPoint(Layout layout) : layout_(std::move(layout)), data_(Vec::Zero(layout_.dim())) {}

BlockPoint::BlockPoint(Layout layout, Vec data) : layout_(std::move(layout)), data_(std::move(data)) {
    if (data_.size() != layout_.dim())
        throw std::invalid_argument("BlockPoint: data size does not match layout");
}

Eigen::VectorBlock<Vec> BlockPoint::block(Index i) {
    return data_.segment(layout_.offset(i), layout_.shape(i).size());
}

Eigen::VectorBlock<const Vec> BlockPoint::block(Index i) const {
    return data_.segment(layout_.offset(i), layout_.shape(i).size());
}

Eigen::Map<Mat> BlockPoint::matrix(Index i) {
    const auto &s = layout_.shape(i);
    return Eigen::Map<Mat>(data_.data() + layout_.offset(i), s.rows, s.cols);
}

Eigen::Map<const Mat> BlockPoint::matrix(Index i) const {
    const auto &s = layout_.shape(i);
    return Eigen::Map<const Mat>(data_.data() + layout_.offset(i), s.rows, s.cols);
}

BlockPoint &BlockPoint::operator+=(const BlockPoint &o) {
    require_same_layout(layout_, o.layout_, "BlockPoint +=");
    data_ += o.data_;
    return *this;
}

BlockPoint &BlockPoint::operator-=(const BlockPoint &o) {
    require_same_layout(layout_, o.layout_, "BlockPoint -=");
    data_ -= o.data_;
    return *this;
}

BlockPoint &BlockPoint::operator*=(double s) {
    data_ *= s;
    return *this;
}

BlockPoint operator+(BlockPoint a, const BlockPoint &b) { return a += b; }
BlockPoint operator-(BlockPoint a, const BlockPoint &b) { return a -= b; }
BlockPoint operator*(double s, BlockPoint a) { return a *= s; }

double inner(const BlockPoint &a, const BlockPoint &b) {
    require_same_layout(a.layout(), b.layout(), "inner");
    return a.data().dot(b.data());
}

LinearMap LinearMap::transposed() const {
    return {codomain_dim, domain_dim, adjoint, apply};
}

Mat LinearMap::to_dense() const {
    Mat A(codomain_dim, domain_dim);
    Vec e = Vec::Zero(domain_dim);
    for (Index j = 0; j < domain_dim; ++j) {
        e[j] = 1;
        A.col(j) = apply(e);
        e[j] = 0;
    }
    return A;
}

LinearMap LinearMap::from_matrix(Mat A) {
    auto shared = std::make_shared<const Mat>(std::move(A));
    return {shared->cols(), shared->rows(), [shared](const Vec &v) -> Vec { return *shared * v; },
            [shared](const Vec &u) -> Vec { return shared->transpose() * u; }};
}

LinearMap LinearMap::identity(Index n) {
    return {n, n, [](const Vec &v) { return v; }, [](const Vec &u) { return u; }};
}

LinearMap LinearMap::zero(Index rows, Index cols) {
    return {cols, rows, [rows](const Vec &) -> Vec { return Vec::Zero(rows); },
            [cols](const Vec &) -> Vec { return Vec::Zero(cols); }};
}

ScaledIdentityMetric::ScaledIdentityMetric(Index n, double scale) : n_(n), scale_(scale) {
    if (!(scale > 0))
        throw std::invalid_argument("ScaledIdentityMetric: scale must be positive");
}

BlockDiagonalMetric::BlockDiagonalMetric(Layout layout, std::vector<double> scalars)
    : layout_(std::move(layout)), scalars_(std::move(scalars)) {
    if (static_cast<Index>(scalars_.size()) != layout_.num_blocks())
        throw std::invalid_argument("BlockDiagonalMetric: one scalar per block required");
    for (double d : scalars_)
        if (!(d > 0) || !std::isfinite(d))
            throw std::invalid_argument("BlockDiagonalMetric: scalars must be positive and finite");
}

Vec BlockDiagonalMetric::apply(const Vec &v) const {
    Vec out(v.size());
    for (Index i = 0; i < layout_.num_blocks(); ++i) {
        const Index o = layout_.offset(i), n = layout_.shape(i).size();
        out.segment(o, n) = scalars_[static_cast<size_t>(i)] * v.segment(o, n);
    }
    return out;
}

Vec BlockDiagonalMetric::solve(const Vec &v) const {
    Vec out(v.size());
    for (Index i = 0; i < layout_.num_blocks(); ++i) {
        const Index o = layout_.offset(i), n = layout_.shape(i).size();
        out.segment(o, n) = v.segment(o, n) / scalars_[static_cast<size_t>(i)];
    }
    return out;
}

double BlockDiagonalMetric::omega_lower() const {
    return *std::min_element(scalars_.begin(), scalars_.end());
}

double BlockDiagonalMetric::omega_upper() const {
    return *std::max_element(scalars_.begin(), scalars_.end());
}

DenseMetric::DenseMetric(Mat M) : M_(std::move(M)) {
    if (M_.rows() != M_.cols())
        throw std::invalid_argument("DenseMetric: matrix must be square");
    const double asym = (M_ - M_.transpose()).norm();
    if (asym > 1e-10 * (1 + M_.norm()))
        throw std::invalid_argument("DenseMetric: matrix is not symmetric");
    M_ = 0.5 * (M_ + M_.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(M_, Eigen::EigenvaluesOnly);
    lo_ = eig.eigenvalues().minCoeff();
    hi_ = eig.eigenvalues().maxCoeff();
    if (!(lo_ > 0))
        throw std::invalid_argument("DenseMetric: matrix is not positive definite");
    llt_.compute(M_);
    if (llt_.info() != Eigen::Success)
        throw std::invalid_argument("DenseMetric: Cholesky factorization failed");
}

OperatorMetric::OperatorMetric(Index n, std::function<Vec(const Vec &)> apply,
                               std::function<Vec(const Vec &)> solve, double omega_lower,
                               double omega_upper)
    : n_(n), apply_(std::move(apply)), solve_(std::move(solve)), lo_(omega_lower),
      hi_(omega_upper) {
    if (!(lo_ > 0) || hi_ < lo_)
        throw std::invalid_argument("OperatorMetric: need 0 < omega_lower <= omega_upper");
}

double weighted_norm_sq(const Metric &M, const Vec &v) {
    if (v.size() != M.dim())
        throw std::invalid_argument("weighted_norm_sq: dimension mismatch");
    return std::max(0.0, v.dot(M.apply(v)));
}

double weighted_norm_sq(const Metric &M, const BlockPoint &v) {
    if (const auto *bd = dynamic_cast<const BlockDiagonalMetric *>(&M))
        require_same_layout(bd->layout(), v.layout(), "weighted_norm_sq");
    return weighted_norm_sq(M, v.data());
}

Vec random_normal(Index n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist;
    Vec v(n);
    for (Index i = 0; i < n; ++i)
        v[i] = dist(gen);
    return v;
}

double spectral_upper_bound(const LinearMap &A, int iters, std::uint64_t seed, double inflation) {
    if (iters < 1)
        throw std::invalid_argument("spectral_upper_bound: iters must be >= 1");
    if (A.domain_dim == 0 || A.codomain_dim == 0)
        return 0;
    Vec v = random_normal(A.domain_dim, seed);
    v.normalize();
    double best = 0;
    for (int k = 0; k < iters; ++k) {
        Vec Av = A.apply(v);
        best = std::max(best, Av.norm());
        Vec w = A.adjoint(Av);
        const double nw = w.norm();
        if (nw == 0)
            break;
        v = w / nw;
    }
    best = std::max(best, A.apply(v).norm());
    return inflation * best;
}

AdjointReport adjoint_check(const LinearMap &A, int probes, std::uint64_t seed) {
    AdjointReport rep;
    for (int p = 0; p < probes; ++p) {
        Vec v = random_normal(A.domain_dim, seed + 2 * static_cast<std::uint64_t>(p));
        Vec u = random_normal(A.codomain_dim, seed + 2 * static_cast<std::uint64_t>(p) + 1);
        Vec Av = A.apply(v);
        const double r = std::abs(Av.dot(u) - v.dot(A.adjoint(u))) / (1 + Av.norm() * u.norm());
        rep.max_residual = std::max(rep.max_residual, r);
    }
    rep.flagged = rep.max_residual > 1e-8;
    return rep;
}

} // namespace vmor
