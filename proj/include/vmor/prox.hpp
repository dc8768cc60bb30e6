#pragma once

#include <vmor/linops.hpp>

#include <functional>
#include <string>

namespace vmor {

/// (t, v) -> argmin_u g(u) + |u - v|^2 / (2t)
using ProxMap = std::function<Vec(double, const Vec &)>;

/// A closed proper convex function accessed through its proximal mapping.
struct ProxFn {
    std::string name;
    ProxMap prox;
    /// g(u); may return +infinity outside the domain.
    std::function<double(const Vec &)> value;

    Vec operator()(double t, const Vec &v) const { return prox(t, v); }
};

Vec prox_l1(double t, double lambda, const Vec &v);
/// Singular-value soft-thresholding with threshold t.
Mat prox_nuclear(double t, const Mat &V);
Vec proj_nonneg(const Vec &v);
Vec proj_box(const Vec &v, double lo, double hi);
/// Projection onto {u : |u|_2 <= 1} in the spectral norm.
Mat proj_spectral_ball(const Mat &V);
double nuclear_norm(const Mat &V);

/// prox_{t h*}(u) = u - t prox_{h/t}(u/t)
Vec prox_conjugate(const ProxMap &prox_h, double t, const Vec &u);

ProxFn zero_fn();
ProxFn l1_fn(double lambda);
ProxFn nonneg_fn();
ProxFn box_fn(double lo, double hi);
/// Nuclear norm of a rows x cols matrix stored column-major.
ProxFn nuclear_fn(Index rows, Index cols, double weight = 1.0);
/// Indicator of the single point {c}.
ProxFn point_fn(Vec c);
/// (w/2)|u - c|^2
ProxFn sq_dist_fn(double w, Vec c);

} // namespace vmor
