#include <vmor/splitters.hpp>

#include "common.hpp"

#include <sstream>
#include <stdexcept>

namespace vmor {

Layout ppg_layout(int n, Index d) {
    return Layout::vectors(std::vector<Index>(static_cast<size_t>(n), d));
}

Vec ppg_mean(const BlockPoint &z) {
    Vec m = Vec::Zero(z.layout().shape(0).size());
    for (Index i = 0; i < z.layout().num_blocks(); ++i)
        m += z.block(i);
    return m / static_cast<double>(z.layout().num_blocks());
}

namespace {
void validate(const PpgProblem &p, double theta, double sigma) {
    const int n = p.summands();
    if (n < 1 || static_cast<int>(p.prox_g.size()) != n)
        throw std::invalid_argument("ppg: need one prox and one gradient per summand");
    if (!(p.alpha > 0))
        throw std::invalid_argument("ppg: alpha must be positive");
    if (!(theta > -1) || theta + p.L * p.alpha / 2 > sigma) {
        std::ostringstream os;
        os << "ppg: step condition theta + L alpha / 2 <= sigma violated (" << theta << " + "
           << p.L * p.alpha / 2 << " > " << sigma << ")";
        throw std::invalid_argument(os.str());
    }
}
} // namespace

PpgStep ppg_step(const BlockPoint &z, const PpgProblem &p, double theta, double sigma) {
    validate(p, theta, sigma);
    const Index n = p.summands();
    if (z.layout().num_blocks() != n)
        throw std::invalid_argument("ppg_step: one copy per summand required");
    const Index d = z.layout().shape(0).size();
    require_same_layout(z.layout(), ppg_layout(static_cast<int>(n), d), "ppg_step");

    const double a = p.alpha;
    const Vec xh = p.prox_r(a, ppg_mean(z));
    const Vec gxh_base = 2 * xh;
    BlockPoint x(z.layout());
    for (Index i = 0; i < n; ++i) {
        const auto ii = static_cast<size_t>(i);
        Vec arg = gxh_base - z.block(i) - a * p.grad_f[ii](xh);
        x.block(i) = p.prox_g[ii](a, arg);
    }
    double spread = 0;
    BlockPoint xh_rep(z.layout());
    for (Index i = 0; i < n; ++i) {
        xh_rep.block(i) = xh;
        spread += (x.block(i) - xh).squaredNorm();
    }

    PpgStep s;
    s.consensus = xh;
    s.cert.y = z + x - xh_rep;
    s.cert.v = xh_rep - x;
    s.cert.eps = a * p.L * spread / 4;
    s.cert.c = 1;
    s.cert.theta = theta;
    s.next = z + (1 + theta) * (x - xh_rep);
    return s;
}

StepOracle ppg_oracle(PpgProblem p, double theta, double sigma) {
    validate(p, theta, sigma);
    return [p = std::move(p), theta, sigma](const BlockPoint &z, const Metric &M, long) {
        detail::require_identity_metric(M, "ppg_oracle");
        PpgStep s = ppg_step(z, p, theta, sigma);
        return OracleStep{std::move(s.cert), std::move(s.next)};
    };
}

} // namespace vmor
