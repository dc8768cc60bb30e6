#include <vmor/splitters.hpp>

#include "common.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vmor {

double fbhf_max_theta(double gamma, double L, double beta, double sigma) {
    const double gl2 = gamma * gamma * L * L;
    const double coco = std::isinf(beta) ? 0.0 : gamma / (2 * beta);
    return (sigma - gl2 - coco) / (1 + gl2);
}

bool firmly_nonexpansive(const std::function<Vec(const Vec &)> &J, Index dim, int probes,
                         std::uint64_t seed, double tol) {
    for (int k = 0; k < probes; ++k) {
        Vec a = random_normal(dim, seed + 2 * static_cast<std::uint64_t>(k));
        Vec b = random_normal(dim, seed + 2 * static_cast<std::uint64_t>(k) + 1);
        Vec d = J(a) - J(b);
        if (d.squaredNorm() > d.dot(a - b) + tol * (1 + (a - b).squaredNorm()))
            return false;
    }
    return true;
}

SplitStep fbhf_step(const BlockPoint &x, const FbhfProblem &p, double gamma, double theta,
                    double sigma) {
    if (!(gamma > 0))
        throw std::invalid_argument("fbhf_step: gamma must be positive");
    if (p.B1 && !(p.beta > 0))
        throw std::invalid_argument("fbhf_step: cocoercivity constant must be positive");
    const double beta = p.B1 ? p.beta : std::numeric_limits<double>::infinity();
    const double tmax = fbhf_max_theta(gamma, p.L, beta, sigma);
    if (!(theta > -1) || theta > tmax) {
        std::ostringstream os;
        os << "fbhf_step: theta = " << theta << " violates -1 < theta <= (sigma - g^2 L^2 - g/(2 beta))"
           << " / (1 + g^2 L^2) = " << tmax;
        throw std::invalid_argument(os.str());
    }
    const Vec &xv = x.data();
    const Vec b2x = p.B2 ? p.B2(xv) : Vec(Vec::Zero(xv.size()));
    Vec fwd = b2x;
    if (p.B1)
        fwd += p.B1(xv);
    const Vec yv = p.resolvent(gamma, xv - gamma * fwd);
    const Vec b2y = p.B2 ? p.B2(yv) : Vec(Vec::Zero(xv.size()));

    SplitStep s;
    s.cert.y = BlockPoint(x.layout(), yv);
    s.cert.v = BlockPoint(x.layout(), (xv - yv) / gamma - b2x + b2y);
    s.cert.eps = p.B1 ? (xv - yv).squaredNorm() / (4 * beta) : 0.0;
    s.cert.c = gamma;
    s.cert.theta = theta;
    s.next = BlockPoint(x.layout(), xv + (1 + theta) * (yv - xv + gamma * b2x - gamma * b2y));
    return s;
}

StepOracle fbhf_oracle(FbhfProblem p, double gamma, double theta, double sigma, Index dim) {
    auto J = [&p, gamma](const Vec &u) { return p.resolvent(gamma, u); };
    if (!firmly_nonexpansive(J, dim, 5, 4242))
        throw std::invalid_argument("fbhf_oracle: resolvent failed the firm nonexpansiveness probe");
    if (theta > fbhf_max_theta(gamma, p.L, p.B1 ? p.beta : std::numeric_limits<double>::infinity(), sigma))
        throw std::invalid_argument("fbhf_oracle: theta above the admissible bound");
    return [p = std::move(p), gamma, theta, sigma](const BlockPoint &x, const Metric &M, long) {
        detail::require_identity_metric(M, "fbhf_oracle");
        SplitStep s = fbhf_step(x, p, gamma, theta, sigma);
        return OracleStep{std::move(s.cert), std::move(s.next)};
    };
}

} // namespace vmor
