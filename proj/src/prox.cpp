#include <vmor/prox.hpp>

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace vmor {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive_step(double t) {
    if (!(t > 0))
        throw std::invalid_argument("prox: step must be positive");
}
} // namespace

Vec prox_l1(double t, double lambda, const Vec &v) {
    require_positive_step(t);
    if (lambda < 0)
        throw std::invalid_argument("prox_l1: lambda must be nonnegative");
    const double thr = t * lambda;
    return v.unaryExpr([thr](double x) {
        return x > thr ? x - thr : (x < -thr ? x + thr : 0.0);
    });
}

Mat prox_nuclear(double t, const Mat &V) {
    require_positive_step(t);
    if (V.size() == 0)
        return V;
    Eigen::BDCSVD<Mat> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw std::runtime_error("prox_nuclear: SVD failed");
    Vec s = (svd.singularValues().array() - t).max(0.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Vec proj_nonneg(const Vec &v) { return v.cwiseMax(0.0); }

Vec proj_box(const Vec &v, double lo, double hi) { return v.cwiseMax(lo).cwiseMin(hi); }

Mat proj_spectral_ball(const Mat &V) {
    if (V.size() == 0)
        return V;
    Eigen::BDCSVD<Mat> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec s = svd.singularValues().cwiseMin(1.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double nuclear_norm(const Mat &V) {
    if (V.size() == 0)
        return 0;
    return Eigen::BDCSVD<Mat>(V).singularValues().sum();
}

Vec prox_conjugate(const ProxMap &prox_h, double t, const Vec &u) {
    require_positive_step(t);
    return u - t * prox_h(1.0 / t, u / t);
}

ProxFn zero_fn() {
    return {"zero", [](double t, const Vec &v) {
                require_positive_step(t);
                return v;
            },
            [](const Vec &) { return 0.0; }};
}

ProxFn l1_fn(double lambda) {
    return {"l1", [lambda](double t, const Vec &v) { return prox_l1(t, lambda, v); },
            [lambda](const Vec &u) { return lambda * u.lpNorm<1>(); }};
}

ProxFn nonneg_fn() {
    return {"nonneg",
            [](double t, const Vec &v) {
                require_positive_step(t);
                return proj_nonneg(v);
            },
            [](const Vec &u) { return u.size() == 0 || u.minCoeff() >= 0 ? 0.0 : kInf; }};
}

ProxFn box_fn(double lo, double hi) {
    if (lo > hi)
        throw std::invalid_argument("box_fn: empty box");
    return {"box",
            [lo, hi](double t, const Vec &v) {
                require_positive_step(t);
                return proj_box(v, lo, hi);
            },
            [lo, hi](const Vec &u) {
                return u.size() == 0 || (u.minCoeff() >= lo && u.maxCoeff() <= hi) ? 0.0 : kInf;
            }};
}

ProxFn nuclear_fn(Index rows, Index cols, double weight) {
    return {"nuclear",
            [rows, cols, weight](double t, const Vec &v) -> Vec {
                Mat V = Eigen::Map<const Mat>(v.data(), rows, cols);
                Mat P = prox_nuclear(t * weight, V);
                return Eigen::Map<const Vec>(P.data(), P.size());
            },
            [rows, cols, weight](const Vec &u) {
                return weight * nuclear_norm(Eigen::Map<const Mat>(u.data(), rows, cols));
            }};
}

ProxFn point_fn(Vec c) {
    auto shared = std::make_shared<const Vec>(std::move(c));
    return {"point",
            [shared](double t, const Vec &) -> Vec {
                require_positive_step(t);
                return *shared;
            },
            [shared](const Vec &u) { return (u - *shared).norm() == 0 ? 0.0 : kInf; }};
}

ProxFn sq_dist_fn(double w, Vec c) {
    auto shared = std::make_shared<const Vec>(std::move(c));
    return {"sq_dist",
            [w, shared](double t, const Vec &v) -> Vec {
                require_positive_step(t);
                return (v + t * w * *shared) / (1 + t * w);
            },
            [w, shared](const Vec &u) { return 0.5 * w * (u - *shared).squaredNorm(); }};
}

} // namespace vmor
