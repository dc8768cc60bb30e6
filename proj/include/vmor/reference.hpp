#pragma once

// Independent reference solvers and seeded test instances with known
// solutions. Nothing here goes through the HPE kernel or the splitters'
// update rules.

#include <vmor/problems.hpp>
#include <vmor/splitters.hpp>

#include <cstdint>

namespace vmor::reference {

struct KktSolution {
    Vec x, y;
};

/// [Q C'; C 0][x; y] = [q; b] by the Schur complement C Q^{-1} C'. Requires
/// Q positive definite and C of full row rank.
KktSolution kkt_schur(const Mat &Q, const Vec &q, const Mat &C, const Vec &b);

/// Fixed point of x = P_box(x - tau F(x)) for F(x) = A x - a with A + A'
/// positive definite; stops when the step is below tol.
Vec projected_fixed_point(const Mat &A, const Vec &a, double lo, double hi, double tol = 1e-14,
                          long max_iters = 1000000);

/// argmin (1/2) x'Q x - q'x + lambda |x|_1 by proximal gradient.
Vec l1_quadratic(const Mat &Q, const Vec &q, double lambda, double tol = 1e-14, long max_iters = 1000000);

/// argmin over |y|_inf <= lambda of (1/2)(q - B'y)' Q^{-1} (q - B'y) by
/// projected gradient.
Vec box_dual_qp(const Mat &Q, const Vec &q, const Mat &B, double lambda, double tol = 1e-14,
                long max_iters = 1000000);

/// Largest eigenvalue of the pencil (H, Gamma), Gamma positive definite.
double generalized_lambda_max(const Mat &H, const Mat &Gamma);

// ---------------------------------------------------------------------------
// Seeded instances with reference solutions in the splitting variable.

struct FbhfInstance {
    FbhfProblem problem;
    double gamma = 0, theta = 0, sigma = 0;
    Vec x0, x_star;
};
/// Box-constrained variational inequality with a quadratic gradient and a
/// skew-symmetric part; theta at its upper bound.
FbhfInstance fbhf_instance(std::uint64_t seed, Index n);

struct PpgInstance {
    PpgProblem problem;
    double theta = 0, sigma = 0;
    BlockPoint z0, z_star;
    Vec x_star;
};
/// Three quadratic summands and an l1 term; z*_i = x* - alpha grad f_i(x*).
PpgInstance ppg_instance(std::uint64_t seed, Index n);

struct PrimalDualInstance {
    PrimalDualProblem problem;
    Mat Q;
    Vec q;
    double lambda = 0;
    BlockPoint z0, z_star;
};
/// Quadratic f, g = 0, h = lambda |.|_1 composed with a random m x n B.
PrimalDualInstance primal_dual_instance(std::uint64_t seed, Index n, Index m);

struct CondatVuSetup {
    double r = 0, s = 0, theta = 0, sigma = 0;
};
/// Step parameters with theta at its admissible maximum.
CondatVuSetup condat_vu_setup(const PrimalDualProblem &p, double sigma);

/// Steps, extrapolation 1, skew split 1/2 and relaxation 0.9 delta_sigma.
AfbasPdParams afbas_setup(const PrimalDualProblem &p, double sigma);

struct AffineInstance {
    /// T(x) = A x + a with A + A' >= 2 mu I.
    Mat A;
    Vec a;
    double strong_monotonicity = 0;
    Vec x0, x_star;
};
AffineInstance affine_instance(std::uint64_t seed, Index n, double mu);

/// Exact resolvent (I + c A)^{-1}(x - c a) with v = (x - y)/c and eps = 0.
StepOracle affine_oracle(const AffineInstance &inst, double c, double theta);

} // namespace vmor::reference
