#include <vmor/splitters.hpp>

#include <sstream>
#include <stdexcept>

namespace vmor {

CondatVu::CondatVu(PrimalDualProblem p, double r, double s, double sigma)
    : p_(std::move(p)), r_(r), s_(s), sigma_(sigma) {
    if (!(r > 0) || !(s > 0))
        throw std::invalid_argument("condat-vu: r and s must be positive");
    if (!(p_.L >= 0))
        throw std::invalid_argument("condat-vu: L must be nonnegative");
    b_norm_ = spectral_upper_bound(p_.B);
    const double dual_margin = s - b_norm_ * b_norm_ / r;
    if (!(dual_margin > 0)) {
        std::ostringstream os;
        os << "condat-vu: condition s - |B|^2 / r > 0 violated (s = " << s << ", r = " << r
           << ", |B| <= " << b_norm_ << ")";
        throw std::invalid_argument(os.str());
    }
    const double primal_margin = r - b_norm_ * b_norm_ / s;
    max_theta_ = sigma - p_.L / (2 * primal_margin);

    const Index n = p_.B.domain_dim, m = p_.B.codomain_dim;
    const Mat B = p_.B.to_dense();
    Mat M(n + m, n + m);
    M << r * Mat::Identity(n, n), -B.transpose(), -B, s * Mat::Identity(m, m);
    metric_ = std::make_shared<DenseMetric>(std::move(M));
}

BlockPoint CondatVu::native_step(const BlockPoint &z, double theta) const {
    const Vec x = z.block(0), y = z.block(1);
    const Vec xt = p_.prox_g(1 / r_, x - (p_.grad_f(x) + p_.B.adjoint(y)) / r_);
    const Vec yt = prox_conjugate(p_.prox_h, 1 / s_, y + p_.B.apply(2 * xt - x) / s_);
    BlockPoint w(z.layout());
    w.block(0) = xt;
    w.block(1) = yt;
    return z + (1 + theta) * (w - z);
}

SplitStep CondatVu::step(const BlockPoint &z, double theta) const {
    require_same_layout(z.layout(), p_.layout(), "condat-vu step");
    if (!(theta > -1) || theta > max_theta_) {
        std::ostringstream os;
        os << "condat-vu: theta = " << theta << " violates theta + L / (2 (r - |B|^2 / s)) <= sigma"
           << " (max " << max_theta_ << ")";
        throw std::invalid_argument(os.str());
    }
    const Vec x = z.block(0), y = z.block(1);
    const Vec xt = p_.prox_g(1 / r_, x - (p_.grad_f(x) + p_.B.adjoint(y)) / r_);
    const Vec yt = prox_conjugate(p_.prox_h, 1 / s_, y + p_.B.apply(2 * xt - x) / s_);
    BlockPoint w(z.layout());
    w.block(0) = xt;
    w.block(1) = yt;

    SplitStep st;
    st.cert.y = w;
    st.cert.v = BlockPoint(z.layout(), metric_->apply((z - w).data()));
    st.cert.eps = p_.L * (x - xt).squaredNorm() / 4;
    st.cert.c = 1;
    st.cert.theta = theta;
    st.next = z + (1 + theta) * (w - z);

    const BlockPoint kernel = extragradient_step(z, st.cert, *metric_);
    const double diff = (kernel.data() - st.next.data()).norm();
    if (diff > 1e-12 * (1 + st.next.norm()))
        throw std::runtime_error("condat-vu: native update differs from the kernel update");
    return st;
}

StepOracle CondatVu::oracle(double theta) const {
    if (!(theta > -1) || theta > max_theta_)
        throw std::invalid_argument("condat-vu: theta above the admissible bound");
    return [self = *this, theta](const BlockPoint &z, const Metric &M, long) {
        if (&M != self.metric().get())
            throw std::invalid_argument("condat-vu oracle: run the kernel with CondatVu::metric()");
        SplitStep s = self.step(z, theta);
        return OracleStep{std::move(s.cert), std::move(s.next)};
    };
}

SplitStep condat_vu_step(const BlockPoint &z, const PrimalDualProblem &p, double r, double s,
                         double theta, double sigma) {
    return CondatVu(p, r, s, sigma).step(z, theta);
}

} // namespace vmor
