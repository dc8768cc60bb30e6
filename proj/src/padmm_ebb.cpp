#include <vmor/padmm_ebb.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vmor {

const std::vector<std::string> kPadmmColumns = {"pkkt",       "feas_norm", "objective",
                                                "theta_adap", "theta_bar", "beta"};

Layout MultiBlockProblem::z_layout() const { return x_layout.concat(Layout::single(dual_dim)); }

Vec MultiBlockProblem::constraint_value(const BlockPoint &x) const {
    Vec s = Vec::Zero(dual_dim);
    for (Index i = 0; i < blocks(); ++i)
        s += constraint[static_cast<size_t>(i)].apply(x.block(i));
    return s;
}

BlockPoint MultiBlockProblem::primal(const BlockPoint &z) const {
    return BlockPoint(x_layout, z.data().head(x_layout.dim()));
}

void MultiBlockProblem::validate() const {
    const auto p = static_cast<size_t>(blocks());
    if (p == 0)
        throw std::invalid_argument("MultiBlockProblem: no blocks");
    if (g.size() != p || lipschitz.size() != p || constraint.size() != p)
        throw std::invalid_argument("MultiBlockProblem: need one g, L and A per block");
    if (!constraint_norm.empty() && constraint_norm.size() != p)
        throw std::invalid_argument("MultiBlockProblem: constraint_norm size mismatch");
    if (!grad_f)
        throw std::invalid_argument("MultiBlockProblem: missing gradient");
    if (b.size() != dual_dim)
        throw std::invalid_argument("MultiBlockProblem: b has the wrong size");
    for (size_t i = 0; i < p; ++i) {
        const auto &A = constraint[i];
        if (A.domain_dim != x_layout.shape(static_cast<Index>(i)).size() || A.codomain_dim != dual_dim)
            throw std::invalid_argument("MultiBlockProblem: constraint map " + std::to_string(i) +
                                        " has the wrong shape");
        if (!(lipschitz[i] >= 0))
            throw std::invalid_argument("MultiBlockProblem: negative Lipschitz constant");
    }
}

void MultiBlockProblem::ensure_norms() {
    if (!constraint_norm.empty())
        return;
    for (const auto &A : constraint)
        constraint_norm.push_back(spectral_upper_bound(A));
}

void PadmmConfig::validate() const {
    if (!(beta > 0) || !(beta_growth >= 1) || !(beta_max >= beta))
        throw std::invalid_argument("PadmmConfig: need beta > 0, beta_growth >= 1, beta_max >= beta");
    if (!(sigma >= 0 && sigma < 1))
        throw std::invalid_argument("PadmmConfig: sigma must lie in [0, 1)");
    if (!(theta_min > -1 && theta_min < 0))
        throw std::invalid_argument("PadmmConfig: theta_min must lie in (-1, 0)");
    if (!(theta_cap >= 0))
        throw std::invalid_argument("PadmmConfig: theta_cap must be nonnegative");
    if (!(xi.xi0 >= 0))
        throw std::invalid_argument("PadmmConfig: xi0 must be nonnegative");
    if (!(metric_floor > 0) || !(bb_cap >= 1))
        throw std::invalid_argument("PadmmConfig: need metric_floor > 0 and bb_cap >= 1");
    if (!(eta_margin > 1) || !(eta_offset >= 0))
        throw std::invalid_argument("PadmmConfig: need eta_margin > 1 and eta_offset >= 0");
    if (max_iters < 1 || !(tol >= 0))
        throw std::invalid_argument("PadmmConfig: need max_iters >= 1 and tol >= 0");
}

std::vector<double> scalar_majorant_eta(const MultiBlockProblem &p, double beta, double margin,
                                        double offset) {
    if (p.constraint_norm.size() != static_cast<size_t>(p.blocks()))
        throw std::invalid_argument("scalar_majorant_eta: constraint norms not set");
    std::vector<double> eta(static_cast<size_t>(p.blocks()));
    for (size_t i = 0; i < eta.size(); ++i) {
        const double an = p.constraint_norm[i];
        eta[i] = p.lipschitz[i] + margin * beta * an * an + offset;
    }
    return eta;
}

BlockPoint block_sweep(const MultiBlockProblem &p, const BlockPoint &z, double beta,
                       const std::vector<double> &eta) {
    const Index nb = p.blocks();
    require_same_layout(z.layout(), p.z_layout(), "block_sweep");
    const BlockPoint x = p.primal(z);
    const Vec y = z.block(nb);
    const BlockPoint grad = p.grad_f(x);

    // Running value of sum_{j<i} A_j^* x~_j + sum_{j>=i} A_j^* x_j - b.
    Vec residual = p.constraint_value(x) - p.b;
    BlockPoint w(z.layout());
    for (Index i = 0; i < nb; ++i) {
        const auto ii = static_cast<size_t>(i);
        const auto &A = p.constraint[ii];
        const Vec xi = x.block(i);
        const Vec dir = grad.block(i) + A.adjoint(y + beta * residual);
        const Vec xt = p.g[ii].prox(1 / eta[ii], xi - dir / eta[ii]);
        residual += A.apply(xt - xi);
        w.block(i) = xt;
        if (i == 0) {
            // Multiplier uses x~_1 and the old x_j for j >= 2.
            w.block(nb) = y + beta * residual;
        }
    }
    return w;
}

LinearMap build_U(const MultiBlockProblem &p, double beta, const std::vector<double> &eta) {
    const Layout zl = p.z_layout();
    const Index nb = p.blocks();
    const Index N = zl.dim();
    auto apply = [p, zl, nb, beta, eta](const Vec &dv) -> Vec {
        const BlockPoint d(zl, dv);
        BlockPoint out(zl);
        const auto &A0 = p.constraint[0];
        out.block(0) = eta[0] * d.block(0) - beta * A0.adjoint(A0.apply(d.block(0)));
        Vec lower = Vec::Zero(p.dual_dim); // sum_{2<=j<i} A_j^* d_j
        for (Index i = 1; i < nb; ++i) {
            const auto &A = p.constraint[static_cast<size_t>(i)];
            out.block(i) = eta[static_cast<size_t>(i)] * d.block(i) + beta * A.adjoint(lower);
            lower += A.apply(d.block(i));
        }
        out.block(nb) = lower + d.block(nb) / beta;
        return out.data();
    };
    auto adjoint = [p, zl, nb, beta, eta](const Vec &uv) -> Vec {
        const BlockPoint u(zl, uv);
        BlockPoint out(zl);
        const auto &A0 = p.constraint[0];
        out.block(0) = eta[0] * u.block(0) - beta * A0.adjoint(A0.apply(u.block(0)));
        Vec upper = Vec::Zero(p.dual_dim); // sum_{i>j} A_i^* u_i
        for (Index j = nb - 1; j >= 1; --j) {
            const auto &A = p.constraint[static_cast<size_t>(j)];
            out.block(j) = eta[static_cast<size_t>(j)] * u.block(j) + beta * A.adjoint(upper) +
                           A.adjoint(u.block(nb));
            upper += A.apply(u.block(j));
        }
        out.block(nb) = u.block(nb) / beta;
        return out.data();
    };
    return {N, N, apply, adjoint};
}

Vec curvature_diagonal(const MultiBlockProblem &p) {
    const Layout zl = p.z_layout();
    Vec D = Vec::Zero(zl.dim());
    for (Index i = 0; i < p.blocks(); ++i)
        D.segment(zl.offset(i), zl.shape(i).size()).setConstant(p.lipschitz[static_cast<size_t>(i)]);
    return D;
}

namespace {

Mat dense_metric(const Metric &M, bool inverse) {
    const Index N = M.dim();
    Mat out(N, N);
    Vec e = Vec::Zero(N);
    for (Index j = 0; j < N; ++j) {
        e[j] = 1;
        out.col(j) = inverse ? M.solve(e) : M.apply(e);
        e[j] = 0;
    }
    return out;
}

} // namespace

ThetaRange theta_range(const LinearMap &U, const Metric &M, double sigma, const Vec &D,
                       const Vec &d, Index max_dense_dim) {
    const Index N = d.size();
    if (U.domain_dim != N || M.dim() != N || D.size() != N)
        throw std::invalid_argument("theta_range: dimension mismatch");
    if (d.squaredNorm() == 0)
        throw std::invalid_argument("theta_range: zero direction");
    ThetaRange tr;
    const Vec Ud = U.apply(d);
    tr.a = 2 * d.dot(Ud) - 0.5 * d.dot(D.cwiseProduct(d));
    tr.b = (1 - sigma) * weighted_norm_sq(M, d);
    tr.c = Ud.dot(M.solve(Ud));
    tr.theta_adap = (tr.a - tr.b) / tr.c - 1;
    if (N > max_dense_dim)
        return tr;

    const Mat Um = U.to_dense();
    const Mat Minv = dense_metric(M, true);
    Mat Gamma = Um + Um.transpose() - (1 - sigma) * dense_metric(M, false);
    Gamma.diagonal() -= 0.5 * D;
    Gamma = 0.5 * (Gamma + Gamma.transpose());
    Eigen::LLT<Mat> llt(Gamma);
    if (llt.info() != Eigen::Success || !(tr.a - tr.b > 0)) {
        tr.gamma_indefinite = true;
        return tr;
    }
    Mat H = Um.transpose() * Minv * Um;
    H = 0.5 * (H + H.transpose());
    // C = L^{-1} H L^{-T} has the generalized eigenvalues of (H, Gamma).
    Mat C = llt.matrixL().solve(H);
    C = llt.matrixL().solve(C.transpose()).transpose();
    C = 0.5 * (C + C.transpose());
    Vec q = random_normal(N, 7);
    q.normalize();
    double rq = 0;
    for (int it = 0; it < 300; ++it) {
        Vec Cq = C * q;
        const double nq = Cq.norm();
        if (nq == 0)
            break;
        q = Cq / nq;
    }
    const Vec Cq = C * q;
    rq = q.dot(Cq);
    const double resid = (Cq - rq * q).norm();
    double lam = rq + std::min(0.01 * rq, resid);
    lam = std::max(lam, tr.c / (tr.a - tr.b));
    tr.theta_bar = 1 / lam - 1;
    return tr;
}

double bb_scalar(double prev, double dw_norm, double ds_norm, double xi, double upper) {
    if (!(ds_norm > 1e-14 * dw_norm) || dw_norm == 0)
        return std::min((1 + xi) * prev, std::max(upper, prev));
    const double ratio = dw_norm / ds_norm;
    return std::clamp(ratio, prev / (1 + xi), std::max(upper, prev / (1 + xi)));
}

std::vector<double> bb_metric_update(const std::vector<double> &prev, const BlockPoint &w_prev,
                                     const BlockPoint &w, const BlockPoint &s_prev, const BlockPoint &s,
                                     double xi, const std::vector<double> &upper) {
    std::vector<double> out(prev.size());
    for (size_t i = 0; i < prev.size(); ++i) {
        const auto ii = static_cast<Index>(i);
        out[i] = bb_scalar(prev[i], (w.block(ii) - w_prev.block(ii)).norm(),
                           (s.block(ii) - s_prev.block(ii)).norm(), xi, upper[i]);
    }
    return out;
}

PkktResult pkkt_residual(const BlockPoint &z, const MultiBlockProblem &p) {
    require_same_layout(z.layout(), p.z_layout(), "pkkt_residual");
    const Index nb = p.blocks();
    const BlockPoint x = p.primal(z);
    const Vec y = z.block(nb);
    const BlockPoint grad = p.grad_f(x);
    PkktResult r{BlockPoint(z.layout()), 0};
    for (Index i = 0; i < nb; ++i) {
        const auto ii = static_cast<size_t>(i);
        const Vec xi = x.block(i);
        r.residual.block(i) = xi - p.g[ii].prox(1.0, xi - grad.block(i) - p.constraint[ii].adjoint(y));
    }
    r.residual.block(nb) = p.b - p.constraint_value(x);
    r.norm = r.residual.norm();
    return r;
}

namespace {

std::shared_ptr<BlockDiagonalMetric> metric_from_inverse(const Layout &zl, const std::vector<double> &inv) {
    std::vector<double> d(inv.size());
    for (size_t i = 0; i < inv.size(); ++i)
        d[i] = 1 / inv[i];
    return std::make_shared<BlockDiagonalMetric>(zl, std::move(d));
}

double objective(const MultiBlockProblem &p, const BlockPoint &x) {
    double v = p.f_value ? p.f_value(x) : 0.0;
    for (Index i = 0; i < p.blocks(); ++i)
        v += p.g[static_cast<size_t>(i)].value ? p.g[static_cast<size_t>(i)].value(x.block(i)) : 0.0;
    return v;
}

double select_theta(const PadmmConfig &cfg, double theta_adap) {
    return cfg.policy == ThetaPolicy::adaptive ? std::min(theta_adap, cfg.theta_cap)
                                               : std::min(cfg.theta_fixed, theta_adap);
}

} // namespace

PadmmResult run_padmm(const MultiBlockProblem &prob, const PadmmConfig &cfg, const BlockPoint &z0,
                      const PadmmRunOptions &opts) {
    cfg.validate();
    MultiBlockProblem p = prob;
    p.validate();
    p.ensure_norms();
    const Layout zl = p.z_layout();
    require_same_layout(z0.layout(), zl, "run_padmm");
    const Index nb = p.blocks();
    const auto nscal = static_cast<size_t>(nb + 1);
    const Vec D = curvature_diagonal(p);

    double beta = cfg.beta;
    std::vector<double> inv = cfg.initial_inverse_scalars;
    if (inv.empty()) {
        const auto eta0 = scalar_majorant_eta(p, beta, cfg.eta_margin, cfg.eta_offset);
        for (double e : eta0)
            inv.push_back(1 / e);
        inv.push_back(beta);
    }
    if (inv.size() != nscal)
        throw std::invalid_argument("run_padmm: need one initial inverse scalar per block and the dual");
    std::vector<double> upper(nscal);
    for (size_t i = 0; i < nscal; ++i) {
        if (!(inv[i] > 0) || inv[i] > 1 / cfg.metric_floor)
            throw std::invalid_argument("run_padmm: initial inverse scalars must lie in (0, 1/metric_floor]");
        upper[i] = std::min(1 / cfg.metric_floor, cfg.bb_cap * inv[i]);
    }

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    PadmmResult res;
    res.trace.extra_columns = kPadmmColumns;
    BlockPoint z = z0;
    std::shared_ptr<BlockDiagonalMetric> M_prev;
    BlockPoint w_prev, s_prev;
    bool have_prev = false;

    for (long k = 0; k < cfg.max_iters; ++k) {
        const auto eta = scalar_majorant_eta(p, beta, cfg.eta_margin, cfg.eta_offset);
        const BlockPoint w = block_sweep(p, z, beta, eta);
        const BlockPoint d = z - w;
        const LinearMap U = build_U(p, beta, eta);
        const BlockPoint x = p.primal(z), xt = p.primal(w);

        HpeCertificate cert;
        cert.y = w;
        cert.v = BlockPoint(zl, U.apply(d.data()));
        cert.c = 1;
        std::vector<double> beps(static_cast<size_t>(nb));
        for (Index i = 0; i < nb; ++i) {
            beps[static_cast<size_t>(i)] = p.lipschitz[static_cast<size_t>(i)] * d.block(i).squaredNorm() / 4;
            cert.eps += beps[static_cast<size_t>(i)];
        }

        IterRecord rec;
        rec.iter = k + 1;
        rec.v_norm = cert.v.norm();
        rec.eps = cert.eps;
        rec.extra.assign(kPadmmColumns.size(), std::numeric_limits<double>::quiet_NaN());
        rec.extra[5] = beta;
        auto metric = metric_from_inverse(zl, inv);

        auto stop = [&](Termination t, std::string diag) {
            rec.metric_min = metric->omega_lower();
            rec.metric_max = metric->omega_upper();
            if (opts.reference)
                rec.dist_to_ref = std::sqrt(weighted_norm_sq(*metric, z - *opts.reference));
            const auto pk = pkkt_residual(z, p);
            rec.extra[0] = pk.norm;
            rec.extra[1] = pk.residual.block(nb).norm();
            rec.extra[2] = objective(p, xt);
            rec.time_s = std::chrono::duration<double>(clock::now() - t0).count();
            res.trace.append(rec);
            res.termination = t;
            res.diagnostic = std::move(diag);
            res.solution = z;
            res.final_inverse_scalars = inv;
        };

        if (d.squared_norm() == 0) {
            stop(Termination::converged, "");
            return res;
        }

        ThetaRange tr = theta_range(U, *metric, cfg.sigma, D, d.data(),
                                    zl.dim() <= cfg.theta_bar_max_dim ? cfg.theta_bar_max_dim : 0);
        double theta = select_theta(cfg, tr.theta_adap);
        if (theta < cfg.theta_min) {
            // Scaling the metric by t turns 1 + theta into t (a - t b) / c, which
            // peaks at t = a / (2b); growth is bounded by the previous metric.
            double t_max = 1e3;
            if (M_prev)
                for (size_t i = 0; i < nscal; ++i)
                    t_max = std::min(t_max, (1 + cfg.xi(k - 1)) * M_prev->scalars()[i] * inv[i]);
            const double t = tr.b > 0 ? std::min(tr.a / (2 * tr.b), t_max) : t_max;
            const double theta_t = t * (tr.a - t * tr.b) / tr.c - 1;
            if (t > 0 && theta_t > tr.theta_adap) {
                for (auto &m : inv)
                    m /= t;
                metric = metric_from_inverse(zl, inv);
                tr = theta_range(U, *metric, cfg.sigma, D, d.data(),
                                 zl.dim() <= cfg.theta_bar_max_dim ? cfg.theta_bar_max_dim : 0);
                theta = select_theta(cfg, tr.theta_adap);
            }
            if (theta < cfg.theta_min) {
                std::ostringstream os;
                os << "iteration " << k + 1 << ": theta_adap = " << tr.theta_adap << " below theta_min = "
                   << cfg.theta_min << " (P policy and metric inconsistent)";
                stop(Termination::criterion_violation, os.str());
                return res;
            }
        }
        cert.theta = theta;
        rec.theta = theta;
        rec.extra[3] = tr.theta_adap;
        rec.extra[4] = tr.theta_bar;

        if (M_prev) {
            auto mrep = validate_metric_update(*M_prev, *metric, cfg.xi(k - 1), cfg.metric_floor);
            if (!mrep) {
                stop(Termination::metric_violation, "iteration " + std::to_string(k + 1) + ": " + mrep.diagnostic);
                return res;
            }
        }
        const CriterionReport crit = check_criterion(z, cert, *metric, cfg.sigma);
        rec.criterion_slack = crit.slack;
        rec.step_norm = std::sqrt(weighted_norm_sq(*metric, d));
        if (!crit.ok) {
            std::ostringstream os;
            os << "iteration " << k + 1 << ": relative error criterion violated, lhs = " << crit.lhs
               << " > rhs = " << crit.rhs;
            stop(Termination::criterion_violation, os.str());
            return res;
        }
        if (opts.keep_history) {
            res.history.push_back(cert);
            res.block_eps.push_back(beps);
        }

        BlockPoint z_next = extragradient_step(z, cert, *metric);

        // BB pair: s = U d + [grad f(x~) - grad f(x); 0].
        BlockPoint s = cert.v;
        {
            const BlockPoint gdiff = p.grad_f(xt) - p.grad_f(x);
            s.data().head(p.x_layout.dim()) += gdiff.data();
        }
        std::vector<double> inv_next = inv;
        if (cfg.use_bb && have_prev)
            inv_next = bb_metric_update(inv, w_prev, w, s_prev, s, cfg.xi(k), upper);
        w_prev = w;
        s_prev = s;
        have_prev = true;

        if (opts.observer) {
            auto next_metric = metric_from_inverse(zl, inv_next);
            opts.observer(StepView{k, z, cert, *metric, z_next, *next_metric});
        }

        rec.metric_min = metric->omega_lower();
        rec.metric_max = metric->omega_upper();
        if (opts.reference)
            rec.dist_to_ref = std::sqrt(weighted_norm_sq(*metric, z - *opts.reference));
        const auto pk = pkkt_residual(z_next, p);
        rec.extra[0] = pk.norm;
        rec.extra[1] = pk.residual.block(nb).norm();
        rec.extra[2] = objective(p, xt);
        rec.time_s = std::chrono::duration<double>(clock::now() - t0).count();
        res.trace.append(std::move(rec));

        z = std::move(z_next);
        M_prev = metric;
        inv = std::move(inv_next);
        if (pk.norm <= cfg.tol) {
            res.termination = Termination::converged;
            res.solution = z;
            res.final_inverse_scalars = inv;
            return res;
        }
        beta = std::min(cfg.beta_growth * beta, cfg.beta_max);
    }
    res.termination = Termination::max_iters;
    res.solution = z;
    res.final_inverse_scalars = inv;
    return res;
}

ErgodicKkt ergodic_kkt_certificates(const MultiBlockProblem &p,
                                    const std::vector<HpeCertificate> &history,
                                    const std::vector<std::vector<double>> &block_eps,
                                    const std::vector<double> &alpha, size_t count) {
    if (count == 0 || count > history.size() || block_eps.size() < count || alpha.size() < count)
        throw std::invalid_argument("ergodic_kkt_certificates: need count <= history size");
    const Index nb = p.blocks();
    const ErgodicAggregate agg = ergodic_aggregate(history, alpha, count);
    ErgodicKkt out;
    out.x = p.primal(agg.y);
    out.y = agg.y.block(nb);
    out.v = agg.v;
    out.eps_kernel = agg.eps;
    out.eps_blocks.assign(static_cast<size_t>(nb), 0.0);

    std::vector<double> w(count);
    double W = 0;
    for (size_t i = 0; i < count; ++i) {
        w[i] = (1 + history[i].theta) * history[i].c * alpha[i];
        W += w[i];
    }
    // G_j = v_j - A_j y~ ; its average uses the averaged y.
    std::vector<Vec> Gbar(static_cast<size_t>(nb));
    for (Index j = 0; j < nb; ++j)
        Gbar[static_cast<size_t>(j)] = agg.v.block(j) - p.constraint[static_cast<size_t>(j)].adjoint(out.y);
    for (size_t i = 0; i < count; ++i) {
        const BlockPoint &y = history[i].y;
        const BlockPoint &v = history[i].v;
        const Vec yt = y.block(nb);
        for (Index j = 0; j < nb; ++j) {
            const auto jj = static_cast<size_t>(j);
            const Vec G = v.block(j) - p.constraint[jj].adjoint(yt);
            const double spread = (y.block(j) - agg.y.block(j)).dot(G - Gbar[jj]);
            out.eps_blocks[jj] += (w[i] / W) * (block_eps[i][jj] + spread);
        }
    }
    for (double e : out.eps_blocks)
        out.eps_total += e;
    return out;
}

} // namespace vmor
