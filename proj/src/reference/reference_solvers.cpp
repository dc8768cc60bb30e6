#include <vmor/reference.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace vmor::reference {

namespace {

Mat gaussian(std::mt19937_64 &rng, Index rows, Index cols) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat A(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            A(i, j) = N(rng);
    return A;
}

Mat random_spd(std::mt19937_64 &rng, Index n, double shift) {
    const Mat G = gaussian(rng, n, n);
    Mat Q = G * G.transpose() / static_cast<double>(n);
    Q.diagonal().array() += shift;
    return 0.5 * (Q + Q.transpose());
}

double eig_max(const Mat &S) {
    return Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

double eig_min(const Mat &S) {
    return Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double op_norm(const Mat &A) { return A.size() == 0 ? 0.0 : Eigen::JacobiSVD<Mat>(A).singularValues()(0); }

} // namespace

KktSolution kkt_schur(const Mat &Q, const Vec &q, const Mat &C, const Vec &b) {
    Eigen::LLT<Mat> llt(Q);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("kkt_schur: Q is not positive definite");
    const Mat QiCt = llt.solve(C.transpose());
    const Vec Qiq = llt.solve(q);
    const Mat S = C * QiCt;
    Eigen::LLT<Mat> sllt(S);
    if (sllt.info() != Eigen::Success)
        throw std::invalid_argument("kkt_schur: C does not have full row rank");
    // C x = b with x = Q^{-1}(q - C'y).
    KktSolution s;
    s.y = sllt.solve(Vec(C * Qiq - b));
    s.x = Qiq - QiCt * s.y;
    return s;
}

Vec projected_fixed_point(const Mat &A, const Vec &a, double lo, double hi, double tol, long max_iters) {
    const double mu = eig_min(0.5 * (A + A.transpose()));
    if (!(mu > 0))
        throw std::invalid_argument("projected_fixed_point: A is not strongly monotone");
    const double nA = op_norm(A);
    const double tau = mu / (nA * nA);
    Vec x = Vec::Zero(a.size());
    for (long it = 0; it < max_iters; ++it) {
        const Vec xn = (x - tau * (A * x - a)).cwiseMax(lo).cwiseMin(hi);
        const double step = (xn - x).norm();
        x = xn;
        if (step <= tol * (1 + x.norm()))
            return x;
    }
    throw std::runtime_error("projected_fixed_point: no convergence");
}

Vec l1_quadratic(const Mat &Q, const Vec &q, double lambda, double tol, long max_iters) {
    const double tau = 1 / eig_max(Q);
    Vec x = Vec::Zero(q.size());
    for (long it = 0; it < max_iters; ++it) {
        const Vec u = x - tau * (Q * x - q);
        const Vec xn = u.unaryExpr([t = tau * lambda](double v) {
            return std::copysign(std::max(std::abs(v) - t, 0.0), v);
        });
        const double step = (xn - x).norm();
        x = xn;
        if (step <= tol * (1 + x.norm()))
            return x;
    }
    throw std::runtime_error("l1_quadratic: no convergence");
}

Vec box_dual_qp(const Mat &Q, const Vec &q, const Mat &B, double lambda, double tol, long max_iters) {
    Eigen::LLT<Mat> llt(Q);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("box_dual_qp: Q is not positive definite");
    const Mat QiBt = llt.solve(B.transpose());
    const Mat H = B * QiBt;
    const Vec g0 = B * llt.solve(q);
    const double tau = 1 / eig_max(H);
    Vec y = Vec::Zero(B.rows());
    for (long it = 0; it < max_iters; ++it) {
        const Vec grad = H * y - g0;
        const Vec yn = (y - tau * grad).cwiseMax(-lambda).cwiseMin(lambda);
        const double step = (yn - y).norm();
        y = yn;
        if (step <= tol * (1 + y.norm()))
            return y;
    }
    throw std::runtime_error("box_dual_qp: no convergence");
}

double generalized_lambda_max(const Mat &H, const Mat &Gamma) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(H, Gamma, Eigen::EigenvaluesOnly);
    if (ges.info() != Eigen::Success)
        throw std::runtime_error("generalized_lambda_max: eigensolver failed");
    return ges.eigenvalues().maxCoeff();
}

// ---------------------------------------------------------------------------

FbhfInstance fbhf_instance(std::uint64_t seed, Index n) {
    std::mt19937_64 rng(seed);
    const Mat Q = random_spd(rng, n, 0.5);
    const Mat K = gaussian(rng, n, n);
    Mat S = 0.5 * (K - K.transpose());
    S /= std::max(op_norm(S), 1e-12);
    const Vec q = 2.0 * gaussian(rng, n, 1);

    FbhfInstance inst;
    inst.sigma = 0.9;
    auto &p = inst.problem;
    p.resolvent = [](double, const Vec &u) -> Vec { return u.cwiseMax(-1.0).cwiseMin(1.0); };
    p.B1 = [Q, q](const Vec &x) -> Vec { return Q * x - q; };
    p.beta = 1 / eig_max(Q);
    p.B2 = [S](const Vec &x) -> Vec { return S * x; };
    p.L = op_norm(S);
    // gamma^2 L^2 + gamma / (2 beta) = sigma / 2
    const double a = p.L * p.L, bcoef = 1 / (2 * p.beta), c = -inst.sigma / 2;
    inst.gamma = a > 0 ? (-bcoef + std::sqrt(bcoef * bcoef - 4 * a * c)) / (2 * a) : -c / bcoef;
    inst.theta = fbhf_max_theta(inst.gamma, p.L, p.beta, inst.sigma);
    inst.x0 = gaussian(rng, n, 1);
    inst.x_star = projected_fixed_point(Q + S, q, -1.0, 1.0);
    return inst;
}

PpgInstance ppg_instance(std::uint64_t seed, Index n) {
    std::mt19937_64 rng(seed);
    constexpr int kSummands = 3;
    std::vector<Mat> Q;
    std::vector<Vec> q;
    Mat Qbar = Mat::Zero(n, n);
    Vec qbar = Vec::Zero(n);
    double L = 0;
    for (int i = 0; i < kSummands; ++i) {
        Q.push_back(random_spd(rng, n, 0.2));
        q.push_back(gaussian(rng, n, 1));
        Qbar += Q.back() / kSummands;
        qbar += q.back() / kSummands;
        L = std::max(L, eig_max(Q.back()));
    }
    const double lambda = 0.3;

    PpgInstance inst;
    inst.sigma = 0.9;
    inst.theta = 0.4;
    auto &p = inst.problem;
    p.prox_r = [lambda](double t, const Vec &v) { return prox_l1(t, lambda, v); };
    for (int i = 0; i < kSummands; ++i) {
        p.prox_g.push_back(zero_fn().prox);
        p.grad_f.push_back([Qi = Q[static_cast<size_t>(i)], qi = q[static_cast<size_t>(i)]](const Vec &x) -> Vec {
            return Qi * x - qi;
        });
    }
    p.L = L;
    p.alpha = 2 * (inst.sigma - inst.theta) / L;

    inst.x_star = l1_quadratic(Qbar, qbar, lambda);
    const Layout zl = ppg_layout(kSummands, n);
    inst.z0 = BlockPoint(zl, gaussian(rng, zl.dim(), 1));
    inst.z_star = BlockPoint(zl);
    for (int i = 0; i < kSummands; ++i) {
        const auto ii = static_cast<size_t>(i);
        inst.z_star.block(i) = inst.x_star - p.alpha * (Q[ii] * inst.x_star - q[ii]);
    }
    return inst;
}

PrimalDualInstance primal_dual_instance(std::uint64_t seed, Index n, Index m) {
    std::mt19937_64 rng(seed);
    PrimalDualInstance inst;
    inst.Q = random_spd(rng, n, 1.0);
    inst.q = 3.0 * gaussian(rng, n, 1);
    const Mat B = gaussian(rng, m, n) / std::sqrt(static_cast<double>(n));
    inst.lambda = 0.5;

    auto &p = inst.problem;
    const Mat Q = inst.Q;
    const Vec q = inst.q;
    p.grad_f = [Q, q](const Vec &x) -> Vec { return Q * x - q; };
    p.L = eig_max(Q);
    p.prox_g = zero_fn().prox;
    p.prox_h = [lambda = inst.lambda](double t, const Vec &v) { return prox_l1(t, lambda, v); };
    p.B = LinearMap::from_matrix(B);

    const Vec y = box_dual_qp(Q, q, B, inst.lambda);
    const Vec x = Q.llt().solve(Vec(q - B.transpose() * y));
    inst.z_star = BlockPoint(p.layout());
    inst.z_star.block(0) = x;
    inst.z_star.block(1) = y;
    inst.z0 = BlockPoint(p.layout(), gaussian(rng, n + m, 1));
    return inst;
}

CondatVuSetup condat_vu_setup(const PrimalDualProblem &p, double sigma) {
    const double nb = op_norm(p.B.to_dense());
    CondatVuSetup s;
    s.sigma = sigma;
    s.r = p.L + 2 * nb;
    s.s = 2 * nb;
    // The splitter uses an inflated estimate of |B|; query it for theta.
    s.theta = CondatVu(p, s.r, s.s, sigma).max_theta();
    return s;
}

AfbasPdParams afbas_setup(const PrimalDualProblem &p, double sigma) {
    const double nb = op_norm(p.B.to_dense());
    AfbasPdParams q;
    q.primal_step = 1 / (p.L + nb);
    q.dual_step = 1 / nb;
    q.extrapolation = 1;
    q.skew_split = 0.5;
    q.relaxation = 1e-3;
    const AfbasPd probe(p, q, sigma);
    q.relaxation = 0.9 * probe.delta_sigma();
    return q;
}

AffineInstance affine_instance(std::uint64_t seed, Index n, double mu) {
    std::mt19937_64 rng(seed);
    AffineInstance inst;
    const Mat G = gaussian(rng, n, n);
    Mat Q = G * G.transpose() / static_cast<double>(n);
    Q = 0.5 * (Q + Q.transpose());
    Q.diagonal().array() += mu;
    const Mat K = gaussian(rng, n, n);
    inst.A = Q + 0.5 * (K - K.transpose()) / std::sqrt(static_cast<double>(n));
    inst.a = gaussian(rng, n, 1);
    inst.strong_monotonicity = eig_min(Q);
    inst.x_star = inst.A.lu().solve(Vec(-inst.a));
    inst.x0 = gaussian(rng, n, 1);
    return inst;
}

StepOracle affine_oracle(const AffineInstance &inst, double c, double theta) {
    const Index n = inst.A.rows();
    const Eigen::PartialPivLU<Mat> lu(Mat(Mat::Identity(n, n) + c * inst.A));
    return [lu, a = inst.a, c, theta](const BlockPoint &x, const Metric &, long) {
        OracleStep s;
        s.cert.y = BlockPoint(x.layout(), lu.solve(Vec(x.data() - c * a)));
        s.cert.v = (1 / c) * (x - s.cert.y);
        s.cert.eps = 0;
        s.cert.c = c;
        s.cert.theta = theta;
        return s;
    };
}

} // namespace vmor::reference
