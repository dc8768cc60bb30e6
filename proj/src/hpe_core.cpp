#include <vmor/hpe_core.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace vmor {

double XiSchedule::operator()(long k) const {
    const double d = static_cast<double>(k) + 1.0;
    return xi0 / (d * d);
}

double XiSchedule::partial_sum(long from, long to) const {
    double s = 0;
    for (long i = std::max(0L, from); i <= to; ++i)
        s += (*this)(i);
    return s;
}

double XiSchedule::product_total() const {
    if (xi0 == 0)
        return 1.0;
    const double a = std::numbers::pi * std::sqrt(xi0);
    return std::sinh(a) / a;
}

double XiSchedule::product(long k) const {
    double p = 1;
    for (long i = 0; i <= k; ++i)
        p *= 1 + (*this)(i);
    return p;
}

void HpeConfig::validate() const {
    if (!(sigma >= 0 && sigma < 1))
        throw std::invalid_argument("HpeConfig: sigma must lie in [0, 1)");
    if (!(theta_min > -1))
        throw std::invalid_argument("HpeConfig: theta_min must exceed -1");
    if (!(c_min > 0))
        throw std::invalid_argument("HpeConfig: c_min must be positive");
    if (!(xi.xi0 >= 0) || !std::isfinite(xi.xi0))
        throw std::invalid_argument("HpeConfig: xi0 must be finite and nonnegative");
    if (!(omega_lower > 0) || !(omega_upper >= omega_lower))
        throw std::invalid_argument("HpeConfig: need 0 < omega_lower <= omega_upper");
    if (max_iters < 1)
        throw std::invalid_argument("HpeConfig: max_iters must be >= 1");
    if (!(tol >= 0))
        throw std::invalid_argument("HpeConfig: tol must be nonnegative");
}

CriterionReport check_criterion(const BlockPoint &x, const HpeCertificate &cert, const Metric &M,
                                double sigma) {
    if (!(cert.eps >= 0))
        throw std::invalid_argument("check_criterion: negative eps");
    require_same_layout(x.layout(), cert.y.layout(), "check_criterion (x, y)");
    require_same_layout(x.layout(), cert.v.layout(), "check_criterion (x, v)");
    const Vec step = cert.c * M.solve(cert.v.data());
    const Vec dy = cert.y.data() - x.data();
    CriterionReport r;
    r.lhs = cert.theta * weighted_norm_sq(M, step) + weighted_norm_sq(M, Vec(step + dy)) +
            2 * cert.c * cert.eps;
    r.rhs = sigma * weighted_norm_sq(M, dy);
    r.slack = (r.rhs - r.lhs) / (1 + r.rhs);
    r.ok = r.lhs <= r.rhs + 1e-10 * (1 + r.rhs);
    return r;
}

BlockPoint extragradient_step(const BlockPoint &x, const HpeCertificate &cert, const Metric &M) {
    require_same_layout(x.layout(), cert.v.layout(), "extragradient_step");
    return BlockPoint(x.layout(), x.data() - (1 + cert.theta) * cert.c * M.solve(cert.v.data()));
}

MetricUpdateReport validate_metric_update(const Metric &M_k, const Metric &M_next, double xi,
                                          double omega_lower, int probes, std::uint64_t seed) {
    MetricUpdateReport rep;
    if (M_k.dim() != M_next.dim()) {
        rep.ok = false;
        rep.diagnostic = "metric dimension changed";
        return rep;
    }
    constexpr double rel = 1e-12;
    const auto *a = dynamic_cast<const BlockDiagonalMetric *>(&M_k);
    const auto *b = dynamic_cast<const BlockDiagonalMetric *>(&M_next);
    if (a && b && a->layout() == b->layout()) {
        for (size_t i = 0; i < a->scalars().size(); ++i) {
            const double prev = a->scalars()[i], next = b->scalars()[i];
            std::ostringstream os;
            if (next < omega_lower * (1 - rel)) {
                os << "block " << i << ": scalar " << next << " below omega_lower " << omega_lower;
            } else if (next > (1 + xi) * prev * (1 + rel)) {
                os << "block " << i << ": scalar " << next << " exceeds (1+xi) * " << prev;
            } else {
                continue;
            }
            rep.ok = false;
            rep.diagnostic = os.str();
            return rep;
        }
        return rep;
    }
    for (int p = 0; p < probes; ++p) {
        Vec v = random_normal(M_k.dim(), seed + static_cast<std::uint64_t>(p));
        const double qn = weighted_norm_sq(M_next, v), qk = weighted_norm_sq(M_k, v);
        std::ostringstream os;
        if (qn < omega_lower * v.squaredNorm() * (1 - rel)) {
            os << "probe " << p << ": Rayleigh quotient below omega_lower";
        } else if (qn > (1 + xi) * qk * (1 + rel)) {
            os << "probe " << p << ": <v,M_next v> = " << qn << " exceeds (1+xi) <v,M_k v> = "
               << (1 + xi) * qk;
        } else {
            continue;
        }
        rep.ok = false;
        rep.diagnostic = os.str();
        return rep;
    }
    return rep;
}

void IterTrace::append(IterRecord r) {
    if (r.extra.size() != extra_columns.size())
        throw std::invalid_argument("IterTrace: extra column count mismatch");
    records.push_back(std::move(r));
}

std::string to_string(Termination t) {
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::criterion_violation: return "criterion_violation";
    case Termination::metric_violation: return "metric_violation";
    case Termination::native_mismatch: return "native_mismatch";
    }
    return "unknown";
}

RunResult run(const StepOracle &oracle, const BlockPoint &x0, const MetricPtr &M0,
              const HpeConfig &cfg, const RunOptions &opts) {
    cfg.validate();
    if (!M0 || M0->dim() != x0.dim())
        throw std::invalid_argument("run: metric dimension does not match x0");
    if (M0->omega_lower() < cfg.omega_lower * (1 - 1e-12) ||
        M0->omega_upper() > cfg.omega_upper * (1 + 1e-12))
        throw std::invalid_argument("run: initial metric outside [omega_lower, omega_upper]");

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    RunResult res;
    BlockPoint x = x0;
    MetricPtr M = M0;

    for (long k = 0; k < cfg.max_iters; ++k) {
        OracleStep out = oracle(x, *M, k);
        const HpeCertificate &cert = out.cert;
        const CriterionReport crit = check_criterion(x, cert, *M, cfg.sigma);

        IterRecord rec;
        rec.iter = k + 1;
        rec.v_norm = cert.v.norm();
        rec.eps = cert.eps;
        rec.theta = cert.theta;
        rec.criterion_slack = crit.slack;
        rec.step_norm = std::sqrt(weighted_norm_sq(*M, Vec(x.data() - cert.y.data())));
        rec.metric_min = M->omega_lower();
        rec.metric_max = M->omega_upper();
        if (opts.reference)
            rec.dist_to_ref = std::sqrt(weighted_norm_sq(*M, Vec(x.data() - opts.reference->data())));

        auto finish = [&](Termination t, std::string diag, const BlockPoint &sol) {
            rec.time_s = std::chrono::duration<double>(clock::now() - t0).count();
            res.trace.append(rec);
            res.termination = t;
            res.diagnostic = std::move(diag);
            res.solution = sol;
            res.last_iterate = x;
        };

        if (!crit.ok || cert.theta < cfg.theta_min || cert.c < cfg.c_min) {
            std::ostringstream os;
            os << "iteration " << k + 1 << ": ";
            if (!crit.ok)
                os << "relative error criterion violated, lhs = " << crit.lhs << " > rhs = " << crit.rhs;
            else if (cert.theta < cfg.theta_min)
                os << "theta = " << cert.theta << " below theta_min = " << cfg.theta_min;
            else
                os << "c = " << cert.c << " below c_min = " << cfg.c_min;
            finish(Termination::criterion_violation, os.str(), x);
            return res;
        }
        if (opts.keep_history)
            res.history.push_back(cert);
        if (std::max(rec.v_norm, cert.eps) <= cfg.tol) {
            finish(Termination::converged, "", cert.y);
            return res;
        }

        BlockPoint x_next = extragradient_step(x, cert, *M);
        if (out.native_next) {
            const double diff = (x_next.data() - out.native_next->data()).norm();
            if (diff > opts.native_tol * (1 + x_next.norm())) {
                std::ostringstream os;
                os << "iteration " << k + 1 << ": kernel update differs from native update by " << diff;
                finish(Termination::native_mismatch, os.str(), x);
                return res;
            }
        }

        MetricPtr M_next = M;
        if (opts.metric_schedule) {
            M_next = opts.metric_schedule(k, M);
            auto mrep = validate_metric_update(*M, *M_next, cfg.xi(k), cfg.omega_lower);
            if (!mrep) {
                finish(Termination::metric_violation,
                       "iteration " + std::to_string(k + 1) + ": " + mrep.diagnostic, x);
                return res;
            }
        }
        if (opts.observer)
            opts.observer(StepView{k, x, cert, *M, x_next, *M_next});

        rec.time_s = std::chrono::duration<double>(clock::now() - t0).count();
        res.trace.append(std::move(rec));
        x = std::move(x_next);
        M = std::move(M_next);
    }
    res.termination = Termination::max_iters;
    res.solution = x;
    res.last_iterate = x;
    return res;
}

PointwiseBound pointwise_bound(long k, const HpeConfig &cfg, double d0) {
    if (k < 1)
        throw std::invalid_argument("pointwise_bound: k must be >= 1");
    cfg.validate();
    const double S = cfg.xi.partial_sum(1, k);
    const double Xi = cfg.xi.product_total();
    const double kk = static_cast<double>(k);
    const double one_t = 1 + cfg.theta_min;
    PointwiseBound b;
    b.bound_v = std::sqrt(4 * (1 + S) * Xi * Xi * cfg.omega_upper /
                          (kk * (1 - cfg.sigma) * one_t * one_t * one_t * cfg.c_min * cfg.c_min)) *
                d0;
    b.bound_eps = (1 + S) * Xi / (kk * (1 - cfg.sigma) * one_t * one_t * cfg.c_min) * d0 * d0;
    return b;
}

ErgodicAggregate ergodic_aggregate(const std::vector<HpeCertificate> &history,
                                   const std::vector<double> &alpha, size_t count) {
    if (count == 0 || count > history.size() || alpha.size() < count)
        throw std::invalid_argument("ergodic_aggregate: need count <= history and weights");
    std::vector<double> w(count);
    double W = 0;
    for (size_t i = 0; i < count; ++i) {
        w[i] = (1 + history[i].theta) * history[i].c * alpha[i];
        W += w[i];
    }
    if (!(W > 0))
        throw std::invalid_argument("ergodic_aggregate: weights sum to zero");
    ErgodicAggregate agg{BlockPoint(history[0].y.layout()), BlockPoint(history[0].v.layout()), 0};
    for (size_t i = 0; i < count; ++i) {
        agg.y.data() += (w[i] / W) * history[i].y.data();
        agg.v.data() += (w[i] / W) * history[i].v.data();
    }
    for (size_t i = 0; i < count; ++i) {
        const double spread = (history[i].y.data() - agg.y.data()).dot(history[i].v.data() - agg.v.data());
        agg.eps += (w[i] / W) * (history[i].eps + spread);
    }
    return agg;
}

ErgodicAggregate ergodic_aggregate(const std::vector<HpeCertificate> &history,
                                   const std::vector<double> &alpha) {
    return ergodic_aggregate(history, alpha, history.size());
}

double linear_rate_factor(double kappa, double sigma, double theta, double c_min, double Xi,
                          double omega_upper, double omega_lower) {
    if (!(kappa > 0) || !(sigma >= 0 && sigma < 1) || !(theta > -1) || !(c_min > 0) ||
        !(Xi >= 1) || !(omega_lower > 0) || !(omega_upper >= omega_lower))
        throw std::invalid_argument("linear_rate_factor: parameters outside domain");
    const double a = 1 + kappa / c_min * std::sqrt(Xi * omega_upper / omega_lower);
    const double neg = std::max(-theta, 0.0);
    const double b = 1 + std::sqrt(sigma + 4 * neg / ((1 + theta) * (1 + theta)));
    const double rho = (1 - sigma) * (1 + theta) / (a * a * b * b);
    if (!(rho > 0 && rho < 1))
        throw std::invalid_argument("linear_rate_factor: factor outside (0, 1) for these parameters");
    return rho;
}

std::optional<double> loglog_slope(const std::vector<double> &y, long k_lo, long k_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (long k = std::max(1L, k_lo); k <= k_hi && k <= static_cast<long>(y.size()); ++k) {
        const double v = y[static_cast<size_t>(k - 1)];
        if (!(v > 0) || !std::isfinite(v))
            continue;
        const double lx = std::log(static_cast<double>(k)), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 3)
        return std::nullopt;
    const double den = n * sxx - sx * sx;
    if (den <= 0)
        return std::nullopt;
    return (n * sxy - sx * sy) / den;
}

} // namespace vmor
