#pragma once

#include <vmor/hpe_core.hpp>
#include <vmor/prox.hpp>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace vmor {

/// min sum_i f(x) + g_i(x_i)  s.t.  sum_i A_i^* x_i = b.
///
/// `constraint[i].apply` maps block i into the dual space (x_i -> A_i^* x_i);
/// its adjoint maps a multiplier back (y -> A_i y).
struct MultiBlockProblem {
    Layout x_layout;
    Index dual_dim = 0;
    std::vector<ProxFn> g;
    /// Blockwise gradient of f, same layout as x.
    std::function<BlockPoint(const BlockPoint &)> grad_f;
    std::function<double(const BlockPoint &)> f_value;
    /// L_i such that Diag(L_i I) majorizes the Hessian of f.
    std::vector<double> lipschitz;
    std::vector<LinearMap> constraint;
    /// |A_i|; estimated with spectral_upper_bound when left empty.
    std::vector<double> constraint_norm;
    Vec b;

    Index blocks() const { return x_layout.num_blocks(); }
    /// Layout of z = (x_1, ..., x_p, y).
    Layout z_layout() const;
    /// sum_i A_i^* x_i
    Vec constraint_value(const BlockPoint &x) const;
    /// Primal part of z.
    BlockPoint primal(const BlockPoint &z) const;
    /// Throws std::invalid_argument on inconsistent sizes or missing parts.
    void validate() const;
    /// Fills constraint_norm when empty.
    void ensure_norms();
};

enum class ThetaPolicy {
    /// theta_k = min(theta_adap, theta_cap)
    adaptive,
    /// theta_k = min(theta_fixed, theta_adap)
    fixed,
};

struct PadmmConfig {
    double beta = 1.0;
    /// beta_{k+1} = min(beta_growth * beta_k, beta_max); constant when 1.
    double beta_growth = 1.0;
    double beta_max = 1e10;
    double sigma = 0.5;
    double theta_min = -0.5;
    double theta_cap = 5.0;
    ThetaPolicy policy = ThetaPolicy::adaptive;
    double theta_fixed = 0.0;
    XiSchedule xi;
    /// Inverse-metric scalars per block (x blocks then dual); defaults to
    /// 1/eta_i and beta.
    std::vector<double> initial_inverse_scalars;
    /// Lower bound on the metric scalars.
    double metric_floor = 1e-8;
    /// Inverse-metric scalars stay below bb_cap times their initial value.
    double bb_cap = 1.0;
    bool use_bb = true;
    /// eta_i = L_i + eta_margin * beta |A_i|^2 + eta_offset
    double eta_margin = 1.05;
    double eta_offset = 1e-8;
    long max_iters = 5000;
    double tol = 1e-8;
    /// theta_bar is computed from a dense generalized eigenproblem only up to
    /// this dimension of z; NaN above it.
    Index theta_bar_max_dim = 120;

    void validate() const;
};

/// eta_i for the scalar-majorant proximal terms.
std::vector<double> scalar_majorant_eta(const MultiBlockProblem &p, double beta, double margin = 1.05,
                                        double offset = 1e-8);

/// One Gauss-Seidel sweep over the blocks followed by the multiplier update;
/// returns w = (x~, y~).
BlockPoint block_sweep(const MultiBlockProblem &p, const BlockPoint &z, double beta,
                       const std::vector<double> &eta);

/// Block lower-triangular operator with v = U (z - w) in the enlargement of the
/// KKT operator at w.
LinearMap build_U(const MultiBlockProblem &p, double beta, const std::vector<double> &eta);

/// Diagonal of Diag(L_1 I, ..., L_p I, 0) on the z layout.
Vec curvature_diagonal(const MultiBlockProblem &p);

struct ThetaRange {
    double theta_adap = 0;
    /// NaN when not computed or when Gamma is indefinite.
    double theta_bar = std::numeric_limits<double>::quiet_NaN();
    bool gamma_indefinite = false;
    /// 2<d, U d> - |d|_D^2 / 2
    double a = 0;
    /// (1 - sigma) |d|_M^2
    double b = 0;
    /// |U d|^2 in the inverse metric
    double c = 0;
};

/// theta_adap = (a - b) / c - 1 along the direction d; theta_bar from the
/// generalized eigenproblem U^* M^{-1} U v = lambda Gamma v when
/// dim <= max_dense_dim.
ThetaRange theta_range(const LinearMap &U, const Metric &M, double sigma, const Vec &D,
                       const Vec &d, Index max_dense_dim = 120);

/// Blockwise BB scalar: clamp(|dw| / |ds|, prev / (1 + xi), upper), or
/// min((1 + xi) prev, upper) when |ds| <= 1e-14 |dw|.
double bb_scalar(double prev, double dw_norm, double ds_norm, double xi, double upper);

/// Applies bb_scalar to every block of (w, s) against the previous pair.
std::vector<double> bb_metric_update(const std::vector<double> &prev, const BlockPoint &w_prev,
                                     const BlockPoint &w, const BlockPoint &s_prev, const BlockPoint &s,
                                     double xi, const std::vector<double> &upper);

struct PkktResult {
    BlockPoint residual;
    double norm = 0;
};

/// Stacked residual [x_i - prox_{g_i}(x_i - grad_i f(x) - A_i y); b - sum A_i^* x_i].
PkktResult pkkt_residual(const BlockPoint &z, const MultiBlockProblem &p);

struct PadmmRunOptions {
    const BlockPoint *reference = nullptr;
    bool keep_history = false;
    std::function<void(const StepView &)> observer;
};

struct PadmmResult {
    BlockPoint solution;
    IterTrace trace;
    Termination termination = Termination::max_iters;
    std::string diagnostic;
    std::vector<HpeCertificate> history;
    /// L_j |x_j - x~_j|^2 / 4 per iteration and block (kept with the history).
    std::vector<std::vector<double>> block_eps;
    std::vector<double> final_inverse_scalars;
    long iterations() const { return static_cast<long>(trace.size()); }
};

extern const std::vector<std::string> kPadmmColumns;

PadmmResult run_padmm(const MultiBlockProblem &p, const PadmmConfig &cfg, const BlockPoint &z0,
                      const PadmmRunOptions &opts = {});

struct ErgodicKkt {
    BlockPoint x;
    Vec y;
    BlockPoint v;
    /// Per primal block.
    std::vector<double> eps_blocks;
    double eps_total = 0;
    /// eps from hpe_core::ergodic_aggregate on the same history.
    double eps_kernel = 0;
};

/// Weighted averages of (x~, y~) with weights (1 + theta_i) alpha_i and the
/// blockwise split of the aggregated enlargement.
ErgodicKkt ergodic_kkt_certificates(const MultiBlockProblem &p,
                                    const std::vector<HpeCertificate> &history,
                                    const std::vector<std::vector<double>> &block_eps,
                                    const std::vector<double> &alpha, size_t count);

} // namespace vmor
