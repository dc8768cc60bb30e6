#pragma once

#include <vmor/hpe_core.hpp>
#include <vmor/prox.hpp>

#include <functional>
#include <limits>
#include <vector>

namespace vmor {

using VecFn = std::function<Vec(const Vec &)>;

/// Certificate plus the next iterate computed by the method's own update rule.
struct SplitStep {
    HpeCertificate cert;
    BlockPoint next;
};

// ---------------------------------------------------------------------------
// Forward-backward-half-forward: 0 in A x + B1 x + B2 x.

struct FbhfProblem {
    /// (gamma, u) -> J_{gamma A}(u)
    std::function<Vec(double, const Vec &)> resolvent;
    /// Cocoercive part with constant `beta`; empty means B1 = 0.
    VecFn B1;
    double beta = std::numeric_limits<double>::infinity();
    /// Monotone Lipschitz part with constant `L`; empty means B2 = 0.
    VecFn B2;
    double L = 0;
};

/// Largest admissible theta: (sigma - g^2 L^2 - g / (2 beta)) / (1 + g^2 L^2).
double fbhf_max_theta(double gamma, double L, double beta, double sigma);

/// One step; the certificate is valid for M = I and c = gamma. Throws
/// std::invalid_argument if theta exceeds fbhf_max_theta.
SplitStep fbhf_step(const BlockPoint &x, const FbhfProblem &p, double gamma, double theta,
                    double sigma);

/// Oracle for the kernel; requires the identity metric. Spot-checks that the
/// resolvent is firmly nonexpansive on `dim`-dimensional probes.
StepOracle fbhf_oracle(FbhfProblem p, double gamma, double theta, double sigma, Index dim);

/// |J(a) - J(b)|^2 <= <J(a) - J(b), a - b> + tol on random probe pairs.
bool firmly_nonexpansive(const std::function<Vec(const Vec &)> &J, Index dim, int probes,
                         std::uint64_t seed, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Parallel proximal gradient: min r(x) + (1/n) sum_i f_i(x) + g_i(x).

struct PpgProblem {
    ProxMap prox_r;
    std::vector<ProxMap> prox_g;
    std::vector<VecFn> grad_f;
    /// Common Lipschitz constant of the gradients.
    double L = 0;
    double alpha = 1;

    int summands() const { return static_cast<int>(grad_f.size()); }
};

struct PpgStep : SplitStep {
    /// prox_{alpha r} of the mean of the copies.
    Vec consensus;
};

/// Layout of n stacked copies of a d-vector.
Layout ppg_layout(int n, Index d);

/// One step; requires theta + L alpha / 2 <= sigma. The certificate uses M = I,
/// c = 1 and carries alpha times the enlargement.
PpgStep ppg_step(const BlockPoint &z, const PpgProblem &p, double theta, double sigma);
StepOracle ppg_oracle(PpgProblem p, double theta, double sigma);

/// Mean of the copies.
Vec ppg_mean(const BlockPoint &z);

// ---------------------------------------------------------------------------
// Primal-dual methods for min f(x) + g(x) + h(Bx), with z = (x, y).

struct PrimalDualProblem {
    VecFn grad_f;
    double L = 0;
    ProxMap prox_g;
    /// Prox of h; the prox of h* is derived through the Moreau identity.
    ProxMap prox_h;
    LinearMap B;

    Layout layout() const { return Layout::vectors({B.domain_dim, B.codomain_dim}); }
};

class CondatVu {
  public:
    /// Validates s - |B|^2 / r > 0 with an upper estimate of |B|. Throws
    /// std::invalid_argument citing the violated condition.
    CondatVu(PrimalDualProblem p, double r, double s, double sigma);

    /// Largest admissible theta: sigma - L / (2 (r - |B|^2 / s)).
    double max_theta() const { return max_theta_; }
    /// The metric [r, -B*; -B, s].
    const MetricPtr &metric() const { return metric_; }
    const PrimalDualProblem &problem() const { return p_; }

    /// One step. The native update is checked against the kernel update
    /// (std::runtime_error above 1e-12 relative).
    SplitStep step(const BlockPoint &z, double theta) const;
    /// The update without certificate bookkeeping.
    BlockPoint native_step(const BlockPoint &z, double theta) const;
    StepOracle oracle(double theta) const;

  private:
    PrimalDualProblem p_;
    double r_, s_, sigma_;
    double b_norm_ = 0;
    double max_theta_ = 0;
    MetricPtr metric_;
};

SplitStep condat_vu_step(const BlockPoint &z, const PrimalDualProblem &p, double r, double s,
                         double theta, double sigma);

/// Denominator used for the adaptive relaxation of AFBAS-PD.
enum class AfbasStepRule {
    /// Closed-form quadratic V(x, y).
    quadratic_form,
    /// |R d|^2 in the inverse metric (same value, computed through solves).
    metric_form,
};

struct AfbasPdParams {
    double primal_step = 1;
    double dual_step = 1;
    /// Weight of the new primal point in the dual extrapolation, in [0, inf).
    double extrapolation = 1;
    /// Split of the skew correction between primal and dual, in [0, 1].
    double skew_split = 0.5;
    /// Relaxation parameter, in (0, delta).
    double relaxation = 1;
};

class AfbasPd {
  public:
    /// Validates the parameter conditions and that the relaxation keeps every
    /// certificate within the criterion (relaxation <= delta_sigma()).
    AfbasPd(PrimalDualProblem p, AfbasPdParams params, double sigma,
            AfbasStepRule rule = AfbasStepRule::quadratic_form);

    double delta() const { return delta_; }
    /// delta - (1 - sigma) lambda_max(P^{-1} M).
    double delta_sigma() const { return delta_sigma_; }
    /// M = R S^{-1}, applied and inverted by composed solves.
    const MetricPtr &metric() const { return metric_; }
    const AfbasPdParams &params() const { return q_; }

    Vec apply_R(const Vec &d) const;
    Vec solve_R(const Vec &u) const;
    Vec apply_S(const Vec &d) const;
    Vec solve_S(const Vec &u) const;
    /// gamma1^{-1}|dx|^2 + gamma2^{-1}|dy|^2 - extrapolation <dx, B* dy>
    double p_norm_sq(const Vec &d) const;
    double quadratic_form_V(const Vec &d) const;

    /// The pair (x_bar, y_bar) computed from z.
    BlockPoint forward_backward(const BlockPoint &z) const;
    SplitStep step(const BlockPoint &z) const;
    StepOracle oracle() const;

  private:
    PrimalDualProblem p_;
    AfbasPdParams q_;
    double sigma_;
    AfbasStepRule rule_;
    Index n_, m_;
    Mat B_;
    Eigen::LLT<Mat> xi_inv_llt_;  // [1/(g1 g2) + (1 - t) B^T B]
    Eigen::LLT<Mat> s_elim_llt_;  // I + a b B^T B
    double a_, b_;
    double delta_ = 0, delta_sigma_ = 0;
    MetricPtr metric_;
};

} // namespace vmor
