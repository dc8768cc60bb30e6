#include <vmor/splitters.hpp>

#include <sstream>
#include <stdexcept>

namespace vmor {

AfbasPd::AfbasPd(PrimalDualProblem p, AfbasPdParams params, double sigma, AfbasStepRule rule)
    : p_(std::move(p)), q_(params), sigma_(sigma), rule_(rule) {
    const double g1 = q_.primal_step, g2 = q_.dual_step, t = q_.extrapolation, mu = q_.skew_split;
    if (!(g1 > 0) || !(g2 > 0))
        throw std::invalid_argument("afbas-pd: step sizes must be positive");
    if (!(t >= 0))
        throw std::invalid_argument("afbas-pd: extrapolation must be nonnegative");
    if (!(mu >= 0 && mu <= 1))
        throw std::invalid_argument("afbas-pd: skew_split must lie in [0, 1]");
    if (!(sigma >= 0 && sigma < 1))
        throw std::invalid_argument("afbas-pd: sigma must lie in [0, 1)");

    n_ = p_.B.domain_dim;
    m_ = p_.B.codomain_dim;
    const double bn = spectral_upper_bound(p_.B);
    const double margin = 1 / g1 - g2 * t * t * bn * bn / 4;
    if (!(margin > p_.L / 4)) {
        std::ostringstream os;
        os << "afbas-pd: condition 1/gamma1 - gamma2 t^2 |B|^2 / 4 > L / 4 violated (" << margin
           << " <= " << p_.L / 4 << ")";
        throw std::invalid_argument(os.str());
    }
    delta_ = 2 - p_.L / (2 * margin);
    if (!(q_.relaxation > 0 && q_.relaxation < delta_)) {
        std::ostringstream os;
        os << "afbas-pd: relaxation " << q_.relaxation << " outside (0, delta = " << delta_ << ")";
        throw std::invalid_argument(os.str());
    }

    B_ = p_.B.to_dense();
    const Mat BtB = B_.transpose() * B_;
    xi_inv_llt_.compute(Mat::Identity(n_, n_) / (g1 * g2) + (1 - t) * BtB);
    if (xi_inv_llt_.info() != Eigen::Success)
        throw std::invalid_argument("afbas-pd: [1/(gamma1 gamma2) + (1 - t) B*B] is not positive definite");
    a_ = mu * g1 * (2 - t);
    b_ = g2 * (1 - mu) * (2 - t);
    s_elim_llt_.compute(Mat::Identity(n_, n_) + a_ * b_ * BtB);
    if (s_elim_llt_.info() != Eigen::Success)
        throw std::invalid_argument("afbas-pd: S is singular");

    // Spectral data of M = R S^{-1} from its dense assembly.
    const Index N = n_ + m_;
    Mat M(N, N);
    Vec e = Vec::Zero(N);
    for (Index j = 0; j < N; ++j) {
        e[j] = 1;
        M.col(j) = apply_R(solve_S(e));
        e[j] = 0;
    }
    if ((M - M.transpose()).norm() > 1e-9 * (1 + M.norm()))
        throw std::invalid_argument("afbas-pd: R S^{-1} is not self-adjoint");
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(M, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0))
        throw std::invalid_argument("afbas-pd: R S^{-1} is not positive definite");

    Mat P(N, N);
    P << Mat::Identity(n_, n_) / g1, -t / 2 * B_.transpose(), -t / 2 * B_, Mat::Identity(m_, m_) / g2;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> geig(M, P, Eigen::EigenvaluesOnly);
    delta_sigma_ = delta_ - (1 - sigma) * geig.eigenvalues().maxCoeff();
    if (q_.relaxation > delta_sigma_) {
        std::ostringstream os;
        os << "afbas-pd: relaxation " << q_.relaxation << " exceeds delta - (1 - sigma) lambda_max(P^-1 M) = "
           << delta_sigma_ << "; the relative error criterion cannot be guaranteed";
        throw std::invalid_argument(os.str());
    }

    // The metric holds its own copy of the factorizations so it outlives *this.
    auto copy = std::make_shared<const AfbasPd>(*this);
    metric_ = std::make_shared<OperatorMetric>(
        N, [copy](const Vec &u) { return copy->apply_R(copy->solve_S(u)); },
        [copy](const Vec &u) { return copy->apply_S(copy->solve_R(u)); }, lo, hi);
}

Vec AfbasPd::apply_R(const Vec &d) const {
    const auto dx = d.head(n_), dy = d.tail(m_);
    Vec out(n_ + m_);
    out.head(n_) = dx / q_.primal_step - B_.transpose() * dy;
    out.tail(m_) = (1 - q_.extrapolation) * (B_ * dx) + dy / q_.dual_step;
    return out;
}

Vec AfbasPd::solve_R(const Vec &u) const {
    const auto u1 = u.head(n_), u2 = u.tail(m_);
    Vec out(n_ + m_);
    out.head(n_) = xi_inv_llt_.solve(Vec(u1 / q_.dual_step + B_.transpose() * u2));
    out.tail(m_) = q_.dual_step * (u2 - (1 - q_.extrapolation) * (B_ * out.head(n_)));
    return out;
}

Vec AfbasPd::apply_S(const Vec &d) const {
    const auto dx = d.head(n_), dy = d.tail(m_);
    Vec out(n_ + m_);
    out.head(n_) = dx - a_ * (B_.transpose() * dy);
    out.tail(m_) = b_ * (B_ * dx) + dy;
    return out;
}

Vec AfbasPd::solve_S(const Vec &u) const {
    const auto u1 = u.head(n_), u2 = u.tail(m_);
    Vec out(n_ + m_);
    out.head(n_) = s_elim_llt_.solve(Vec(u1 + a_ * (B_.transpose() * u2)));
    out.tail(m_) = u2 - b_ * (B_ * out.head(n_));
    return out;
}

double AfbasPd::p_norm_sq(const Vec &d) const {
    const auto dx = d.head(n_), dy = d.tail(m_);
    return dx.squaredNorm() / q_.primal_step + dy.squaredNorm() / q_.dual_step -
           q_.extrapolation * dx.dot(B_.transpose() * dy);
}

double AfbasPd::quadratic_form_V(const Vec &d) const {
    const auto dx = d.head(n_), dy = d.tail(m_);
    const double g1 = q_.primal_step, g2 = q_.dual_step, t = q_.extrapolation, mu = q_.skew_split;
    const Vec Bdx = B_ * dx, Btdy = B_.transpose() * dy;
    return dx.squaredNorm() / g1 + dy.squaredNorm() / g2 +
           (1 - mu) * g2 * (1 - t) * (2 - t) * Bdx.squaredNorm() + mu * g1 * (2 - t) * Btdy.squaredNorm() +
           2 * ((1 - mu) * (1 - t) - mu) * dx.dot(Btdy);
}

BlockPoint AfbasPd::forward_backward(const BlockPoint &z) const {
    require_same_layout(z.layout(), p_.layout(), "afbas-pd");
    const double g1 = q_.primal_step, g2 = q_.dual_step, t = q_.extrapolation;
    const Vec x = z.block(0), y = z.block(1);
    const Vec xb = p_.prox_g(g1, x - g1 * p_.B.adjoint(y) - g1 * p_.grad_f(x));
    const Vec yb = prox_conjugate(p_.prox_h, g2, y + g2 * p_.B.apply((1 - t) * x + t * xb));
    BlockPoint w(z.layout());
    w.block(0) = xb;
    w.block(1) = yb;
    return w;
}

SplitStep AfbasPd::step(const BlockPoint &z) const {
    const BlockPoint w = forward_backward(z);
    const Vec d = z.data() - w.data();
    const Vec Rd = apply_R(d);
    double alpha = q_.relaxation;
    const double pn = p_norm_sq(d);
    if (pn > 0) {
        const double den = rule_ == AfbasStepRule::quadratic_form ? quadratic_form_V(d)
                                                                  : Rd.dot(metric_->solve(Rd));
        alpha = q_.relaxation * pn / den;
    }
    SplitStep s;
    s.cert.y = w;
    s.cert.v = BlockPoint(z.layout(), Rd);
    s.cert.eps = p_.L * d.head(n_).squaredNorm() / 4;
    s.cert.c = 1;
    s.cert.theta = alpha - 1;
    s.next = BlockPoint(z.layout(), z.data() - alpha * apply_S(d));
    return s;
}

StepOracle AfbasPd::oracle() const {
    return [self = *this](const BlockPoint &z, const Metric &M, long) {
        if (&M != self.metric().get())
            throw std::invalid_argument("afbas-pd oracle: run the kernel with AfbasPd::metric()");
        SplitStep s = self.step(z);
        return OracleStep{std::move(s.cert), std::move(s.next)};
    };
}

} // namespace vmor
