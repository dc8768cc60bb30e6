#include <vmor/mtx_io.hpp>
#include <vmor/problems.hpp>

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace vmor {

namespace fs = std::filesystem;

Layout QpInstance::x_layout() const {
    std::vector<Index> sizes;
    for (const auto &Qi : Q)
        sizes.push_back(Qi.rows());
    return Layout::vectors(sizes);
}

Mat QpInstance::Q_full() const {
    const Layout xl = x_layout();
    Mat out = Mat::Zero(xl.dim(), xl.dim());
    for (Index i = 0; i < xl.num_blocks(); ++i) {
        const Index o = xl.offset(i), n = xl.shape(i).size();
        out.block(o, o, n, n) = Q[static_cast<size_t>(i)];
    }
    return out;
}

Vec QpInstance::q_full() const {
    const Layout xl = x_layout();
    Vec out(xl.dim());
    for (Index i = 0; i < xl.num_blocks(); ++i)
        out.segment(xl.offset(i), xl.shape(i).size()) = q[static_cast<size_t>(i)];
    return out;
}

Mat QpInstance::C_full() const {
    const Layout xl = x_layout();
    Mat out(b.size(), xl.dim());
    for (Index i = 0; i < xl.num_blocks(); ++i)
        out.middleCols(xl.offset(i), xl.shape(i).size()) = C[static_cast<size_t>(i)];
    return out;
}

double QpInstance::residual(const Vec &x, const Vec &y) const {
    const Mat Cf = C_full();
    const Vec r1 = Q_full() * x - q_full() + Cf.transpose() * y;
    const Vec r2 = Cf * x - b;
    return std::sqrt(r1.squaredNorm() + r2.squaredNorm());
}

BlockPoint QpInstance::z_star() const {
    const Layout zl = x_layout().concat(Layout::single(b.size()));
    Vec z(zl.dim());
    z << x_star.data(), y_star;
    return BlockPoint(zl, z);
}

QpInstance make_qp(std::vector<Mat> Q, std::vector<Vec> q, std::vector<Mat> C, Vec b) {
    if (Q.empty() || Q.size() != q.size() || Q.size() != C.size())
        throw std::invalid_argument("make_qp: need one Q, q and C per block");
    for (size_t i = 0; i < Q.size(); ++i) {
        const Index n = Q[i].rows();
        if (Q[i].cols() != n || q[i].size() != n || C[i].cols() != n || C[i].rows() != b.size())
            throw std::invalid_argument("make_qp: block " + std::to_string(i) + " has inconsistent shapes");
        if ((Q[i] - Q[i].transpose()).norm() > 1e-12 * (1 + Q[i].norm()))
            throw std::invalid_argument("make_qp: Q_" + std::to_string(i) + " is not symmetric");
    }
    QpInstance qp;
    qp.Q = std::move(Q);
    qp.q = std::move(q);
    qp.C = std::move(C);
    qp.b = std::move(b);

    const Mat Qf = qp.Q_full(), Cf = qp.C_full();
    const Index n = Qf.rows(), m = Cf.rows();
    Mat K = Mat::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = Qf;
    K.topRightCorner(n, m) = Cf.transpose();
    K.bottomLeftCorner(m, n) = Cf;
    Vec rhs(n + m);
    rhs << qp.q_full(), qp.b;
    Eigen::FullPivLU<Mat> lu(K);
    if (!lu.isInvertible())
        throw std::runtime_error("make_qp: KKT matrix is singular");
    Vec sol = lu.solve(rhs);
    sol += lu.solve(Vec(rhs - K * sol)); // one refinement pass
    qp.x_star = BlockPoint(qp.x_layout(), sol.head(n));
    qp.y_star = sol.tail(m);
    qp.kkt_residual = qp.residual(qp.x_star.data(), qp.y_star);
    return qp;
}

namespace {

Mat normal_matrix(std::mt19937_64 &rng, Index rows, Index cols) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat A(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            A(i, j) = N(rng);
    return A;
}

double lambda_max(const Mat &S) {
    if (S.size() == 0)
        return 0;
    return Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

} // namespace

QpInstance gen_qp(std::uint64_t seed, int p, Index n, Index m) {
    if (p < 1 || n < 1 || m < 0 || m > p * n)
        throw std::invalid_argument("gen_qp: need p >= 1, n >= 1 and 0 <= m <= p n");
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<Mat> Q, C;
        std::vector<Vec> q;
        for (int i = 0; i < p; ++i) {
            const Mat G = normal_matrix(rng, n, n);
            Mat Qi = G * G.transpose() / static_cast<double>(n);
            Qi.diagonal().array() += 0.5;
            Q.push_back(0.5 * (Qi + Qi.transpose()));
            q.push_back(normal_matrix(rng, n, 1));
            C.push_back(normal_matrix(rng, m, n));
        }
        Vec b = normal_matrix(rng, m, 1);
        Mat Cf(m, p * n);
        for (int i = 0; i < p; ++i)
            Cf.middleCols(i * n, n) = C[static_cast<size_t>(i)];
        if (m > 0) {
            const Vec s = Eigen::JacobiSVD<Mat>(Cf).singularValues();
            if (!(s.minCoeff() > 1e-6 * s.maxCoeff()))
                continue;
        }
        return make_qp(std::move(Q), std::move(q), std::move(C), std::move(b));
    }
    throw std::runtime_error("gen_qp: could not draw full-row-rank constraints");
}

MultiBlockProblem qp_multiblock(const QpInstance &qp) {
    MultiBlockProblem p;
    p.x_layout = qp.x_layout();
    p.dual_dim = qp.dual_dim();
    p.b = qp.b;
    for (size_t i = 0; i < qp.Q.size(); ++i) {
        p.g.push_back(zero_fn());
        p.lipschitz.push_back(lambda_max(qp.Q[i]));
        p.constraint.push_back(LinearMap::from_matrix(qp.C[i]));
        p.constraint_norm.push_back(
            qp.C[i].size() == 0 ? 0.0 : Eigen::JacobiSVD<Mat>(qp.C[i]).singularValues()(0));
    }
    const auto Q = qp.Q;
    const auto q = qp.q;
    p.grad_f = [Q, q](const BlockPoint &x) {
        BlockPoint g(x.layout());
        for (Index i = 0; i < x.layout().num_blocks(); ++i)
            g.block(i) = Q[static_cast<size_t>(i)] * x.block(i) - q[static_cast<size_t>(i)];
        return g;
    };
    p.f_value = [Q, q](const BlockPoint &x) {
        double v = 0;
        for (Index i = 0; i < x.layout().num_blocks(); ++i) {
            const Vec xi = x.block(i);
            v += 0.5 * xi.dot(Q[static_cast<size_t>(i)] * xi) - q[static_cast<size_t>(i)].dot(xi);
        }
        return v;
    };
    return p;
}

PrimalDualProblem qp_primal_dual(const QpInstance &qp) {
    const Mat Q = qp.Q_full();
    const Vec q = qp.q_full();
    PrimalDualProblem p;
    p.grad_f = [Q, q](const Vec &x) -> Vec { return Q * x - q; };
    p.L = lambda_max(Q);
    p.prox_g = zero_fn().prox;
    p.prox_h = point_fn(qp.b).prox;
    p.B = LinearMap::from_matrix(qp.C_full());
    return p;
}

Vec project_affine(const Mat &C, const Vec &b, const Vec &x) {
    const Mat CCt = C * C.transpose();
    return x - C.transpose() * CCt.ldlt().solve(Vec(C * x - b));
}

PpgProblem qp_ppg(const QpInstance &qp, double alpha) {
    const Mat Q = qp.Q_full(), C = qp.C_full();
    const Vec q = qp.q_full(), b = qp.b;
    PpgProblem p;
    p.prox_r = [C, b](double, const Vec &v) { return project_affine(C, b, v); };
    p.prox_g = {zero_fn().prox};
    p.grad_f = {[Q, q](const Vec &x) -> Vec { return Q * x - q; }};
    p.L = lambda_max(Q);
    p.alpha = alpha;
    return p;
}

FbhfProblem qp_fbhf(const QpInstance &qp) {
    const Mat Q = qp.Q_full(), C = qp.C_full();
    const Vec q = qp.q_full(), b = qp.b;
    FbhfProblem p;
    p.resolvent = [C, b](double, const Vec &v) { return project_affine(C, b, v); };
    p.B1 = [Q, q](const Vec &x) -> Vec { return Q * x - q; };
    p.beta = 1 / lambda_max(Q);
    return p;
}

// ---------------------------------------------------------------------------

double LrrInstance::feasibility(const BlockPoint &z) const {
    const Mat Z = z.matrix(0), G = z.matrix(1), E = z.matrix(2);
    return (X - X * Z - G * X - E).norm();
}

namespace {

void require_psd_laplacian(const Mat &L, Index n, const char *what) {
    if (L.rows() != n || L.cols() != n)
        throw std::invalid_argument(std::string("build_lrr: ") + what + " has the wrong size");
    if ((L - L.transpose()).norm() > 1e-12 * (1 + L.norm()))
        throw std::invalid_argument(std::string("build_lrr: ") + what + " is not symmetric");
    if (n > 0) {
        const double lo = Eigen::SelfAdjointEigenSolver<Mat>(L, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        if (lo < -1e-10 * (1 + L.norm()))
            throw std::invalid_argument(std::string("build_lrr: ") + what + " is not positive semidefinite");
    }
}

// Gradient of (w/2) tr(Z L Z') is w Z L; of (w/2) tr(Z' L Z) is w L Z.
Mat laplacian_grad(const Mat &Z, const Mat &L, double w, LaplacianOrientation o) {
    return o == LaplacianOrientation::rows ? Mat(w * Z * L) : Mat(w * L * Z);
}

double laplacian_value(const Mat &Z, const Mat &L, double w, LaplacianOrientation o) {
    return o == LaplacianOrientation::rows ? 0.5 * w * (Z * L).cwiseProduct(Z).sum()
                                           : 0.5 * w * (L * Z).cwiseProduct(Z).sum();
}

} // namespace

LrrInstance build_lrr_unchecked(const Mat &X, const Mat &L_Z, const Mat &L_G, double lambda, double mu,
                                double gamma, LaplacianOrientation orientation) {
    const Index d = X.rows(), n = X.cols();
    require_psd_laplacian(L_Z, n, "L_Z");
    require_psd_laplacian(L_G, d, "L_G");
    if (!(lambda >= 0 && mu >= 0 && gamma >= 0))
        throw std::invalid_argument("build_lrr: weights must be nonnegative");

    LrrInstance inst;
    inst.X = X;
    inst.L_Z = L_Z;
    inst.L_G = L_G;
    inst.lambda = lambda;
    inst.mu = mu;
    inst.gamma = gamma;
    inst.orientation = orientation;

    // Dual block: [X-constraint (d x n); Z = H (n x n); G = F (d x d)].
    const Index o1 = 0, o2 = d * n, o3 = d * n + n * n, m = d * n + n * n + d * d;
    auto &p = inst.problem;
    p.x_layout = Layout({{n, n}, {d, d}, {d, n}, {n, n}, {d, d}});
    p.dual_dim = m;
    p.b = Vec::Zero(m);
    p.b.segment(o1, d * n) = Eigen::Map<const Vec>(X.data(), d * n);

    using CMap = Eigen::Map<const Mat>;
    auto flat = [](const Mat &A) { return Vec(Eigen::Map<const Vec>(A.data(), A.size())); };
    auto embed = [m](Index off, const Vec &v) {
        Vec out = Vec::Zero(m);
        out.segment(off, v.size()) = v;
        return out;
    };

    // Z -> (X Z, Z, 0); adjoint (M1, M2, M3) -> X' M1 + M2.
    p.constraint.push_back({n * n, m,
                            [=](const Vec &z) {
                                const CMap Z(z.data(), n, n);
                                Vec out = embed(o1, flat(X * Z));
                                out.segment(o2, n * n) = z;
                                return out;
                            },
                            [=](const Vec &u) {
                                const CMap M1(u.data() + o1, d, n);
                                return Vec(flat(X.transpose() * M1) + u.segment(o2, n * n));
                            }});
    // G -> (G X, 0, G); adjoint -> M1 X' + M3.
    p.constraint.push_back({d * d, m,
                            [=](const Vec &g) {
                                const CMap G(g.data(), d, d);
                                Vec out = embed(o1, flat(G * X));
                                out.segment(o3, d * d) = g;
                                return out;
                            },
                            [=](const Vec &u) {
                                const CMap M1(u.data() + o1, d, n);
                                return Vec(flat(M1 * X.transpose()) + u.segment(o3, d * d));
                            }});
    // E -> (E, 0, 0)
    p.constraint.push_back({d * n, m, [=](const Vec &e) { return embed(o1, e); },
                            [=](const Vec &u) { return Vec(u.segment(o1, d * n)); }});
    // H -> (0, -H, 0)
    p.constraint.push_back({n * n, m, [=](const Vec &h) { return embed(o2, -h); },
                            [=](const Vec &u) { return Vec(-u.segment(o2, n * n)); }});
    // F -> (0, 0, -F)
    p.constraint.push_back({d * d, m, [=](const Vec &f) { return embed(o3, -f); },
                            [=](const Vec &u) { return Vec(-u.segment(o3, d * d)); }});

    const double xtx = lambda_max(X.transpose() * X), xxt = lambda_max(X * X.transpose());
    p.constraint_norm = {std::sqrt(xtx + 1), std::sqrt(xxt + 1), 1.0, 1.0, 1.0};

    p.g = {nonneg_fn(), nonneg_fn(), l1_fn(lambda), nuclear_fn(n, n), nuclear_fn(d, d)};
    p.lipschitz = {mu * lambda_max(L_Z), gamma * lambda_max(L_G), 0.0, 0.0, 0.0};
    p.grad_f = [L_Z, L_G, mu, gamma, orientation](const BlockPoint &x) {
        BlockPoint g(x.layout());
        g.matrix(0) = laplacian_grad(x.matrix(0), L_Z, mu, orientation);
        g.matrix(1) = laplacian_grad(x.matrix(1), L_G, gamma, orientation);
        return g;
    };
    p.f_value = [L_Z, L_G, mu, gamma, orientation](const BlockPoint &x) {
        return laplacian_value(x.matrix(0), L_Z, mu, orientation) +
               laplacian_value(x.matrix(1), L_G, gamma, orientation);
    };
    return inst;
}

LrrInstance build_lrr(const Mat &X, const Mat &L_Z, const Mat &L_G, double lambda, double mu, double gamma,
                      LaplacianOrientation orientation) {
    if (!(lambda > 0 && mu > 0 && gamma > 0))
        throw std::invalid_argument("build_lrr: lambda, mu and gamma must be positive");
    return build_lrr_unchecked(X, L_Z, L_G, lambda, mu, gamma, orientation);
}

PadmmConfig lrr_default_config() {
    PadmmConfig pc;
    // Scaled with the regularization weights; 1 stalls at |R| ~ 7 after 3000
    // iterations on 40 x 40 data, 1e4 drives theta below theta_min.
    pc.beta = 1e3;
    return pc;
}

Mat build_graph_laplacian(const Mat &W) {
    if (W.rows() != W.cols())
        throw std::invalid_argument("build_graph_laplacian: W must be square");
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 0)
        throw std::invalid_argument("build_graph_laplacian: W must be symmetric");
    if (W.size() > 0 && W.minCoeff() < 0)
        throw std::invalid_argument("build_graph_laplacian: W must be nonnegative");
    if (W.size() > 0 && W.diagonal().cwiseAbs().maxCoeff() > 0)
        throw std::invalid_argument("build_graph_laplacian: W must have a zero diagonal");
    Mat L = -W;
    L.diagonal() = W.rowwise().sum();
    return L;
}

Mat knn_heat_affinity(const Mat &points, int k) {
    const Index n = points.cols();
    if (k < 1)
        throw std::invalid_argument("knn_heat_affinity: k must be positive");
    Mat D2(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            D2(i, j) = (points.col(i) - points.col(j)).squaredNorm();
    std::vector<double> dists;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            dists.push_back(std::sqrt(D2(i, j)));
    Mat W = Mat::Zero(n, n);
    if (dists.empty())
        return W;
    std::nth_element(dists.begin(), dists.begin() + static_cast<long>(dists.size() / 2), dists.end());
    double h = dists[dists.size() / 2];
    if (!(h > 0))
        h = 1;
    const Index kk = std::min<Index>(k, n - 1);
    for (Index i = 0; i < n; ++i) {
        std::vector<Index> idx;
        for (Index j = 0; j < n; ++j)
            if (j != i)
                idx.push_back(j);
        std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return D2(i, a) < D2(i, b); });
        for (Index r = 0; r < kk; ++r) {
            const Index j = idx[static_cast<size_t>(r)];
            const double w = std::exp(-D2(i, j) / (h * h));
            W(i, j) = w;
            W(j, i) = w;
        }
    }
    return W;
}

std::pair<Mat, Mat> lrr_laplacians(const Mat &X, int k) {
    return {build_graph_laplacian(knn_heat_affinity(X, k)),
            build_graph_laplacian(knn_heat_affinity(X.transpose(), k))};
}

Mat randn(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return normal_matrix(rng, rows, cols);
}

// ---------------------------------------------------------------------------

namespace {

using json = nlohmann::json;

json read_json(const fs::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open manifest " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
    }
}

void write_json(const fs::path &path, const json &j) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write manifest " + path.string());
    out << j.dump(2) << "\n";
}

std::string put_mtx(const fs::path &dir, const std::string &name, const Mat &A) {
    write_mtx((dir / name).string(), A);
    return name;
}

Mat get_mtx(const fs::path &dir, const json &j, const char *key) {
    if (!j.contains(key) || !j[key].is_string())
        throw std::runtime_error(std::string("manifest: missing matrix entry '") + key + "'");
    fs::path p = j[key].get<std::string>();
    if (p.is_relative())
        p = dir / p;
    return read_mtx(p.string());
}

double get_number(const json &j, const char *key) {
    if (!j.contains(key) || !j[key].is_number())
        throw std::runtime_error(std::string("manifest: missing number '") + key + "'");
    return j[key].get<double>();
}

fs::path base_dir(const fs::path &manifest) {
    const fs::path dir = manifest.parent_path();
    return dir.empty() ? fs::path(".") : dir;
}

} // namespace

void write_qp_manifest(const fs::path &manifest, const QpInstance &qp) {
    const fs::path dir = base_dir(manifest);
    const std::string stem = manifest.stem().string();
    json j;
    j["kind"] = "qp";
    j["blocks"] = json::array();
    for (size_t i = 0; i < qp.Q.size(); ++i) {
        const std::string tag = stem + "_" + std::to_string(i);
        j["blocks"].push_back({{"Q", put_mtx(dir, tag + "_Q.mtx", qp.Q[i])},
                               {"q", put_mtx(dir, tag + "_q.mtx", qp.q[i])},
                               {"C", put_mtx(dir, tag + "_C.mtx", qp.C[i])}});
    }
    j["b"] = put_mtx(dir, stem + "_b.mtx", qp.b);
    write_json(manifest, j);
}

void write_lrr_manifest(const fs::path &manifest, const LrrInstance &lrr) {
    const fs::path dir = base_dir(manifest);
    const std::string stem = manifest.stem().string();
    json j;
    j["kind"] = "lrr";
    j["X"] = put_mtx(dir, stem + "_X.mtx", lrr.X);
    j["L_Z"] = put_mtx(dir, stem + "_LZ.mtx", lrr.L_Z);
    j["L_G"] = put_mtx(dir, stem + "_LG.mtx", lrr.L_G);
    j["lambda"] = lrr.lambda;
    j["mu"] = lrr.mu;
    j["gamma"] = lrr.gamma;
    j["orientation"] = lrr.orientation == LaplacianOrientation::rows ? "rows" : "columns";
    write_json(manifest, j);
}

std::string manifest_kind(const fs::path &manifest) {
    const json j = read_json(manifest);
    if (!j.contains("kind") || !j["kind"].is_string())
        throw std::runtime_error("manifest " + manifest.string() + " has no 'kind'");
    return j["kind"].get<std::string>();
}

QpInstance read_qp_manifest(const fs::path &manifest) {
    const json j = read_json(manifest);
    if (j.value("kind", "") != "qp")
        throw std::runtime_error("manifest " + manifest.string() + " is not a qp manifest");
    const fs::path dir = base_dir(manifest);
    std::vector<Mat> Q, C;
    std::vector<Vec> q;
    if (!j.contains("blocks") || !j["blocks"].is_array())
        throw std::runtime_error("manifest: missing 'blocks'");
    for (const auto &blk : j["blocks"]) {
        Q.push_back(get_mtx(dir, blk, "Q"));
        q.push_back(get_mtx(dir, blk, "q"));
        C.push_back(get_mtx(dir, blk, "C"));
    }
    Vec b = get_mtx(dir, j, "b");
    return make_qp(std::move(Q), std::move(q), std::move(C), std::move(b));
}

LrrInstance read_lrr_manifest(const fs::path &manifest) {
    const json j = read_json(manifest);
    if (j.value("kind", "") != "lrr")
        throw std::runtime_error("manifest " + manifest.string() + " is not an lrr manifest");
    const fs::path dir = base_dir(manifest);
    const std::string orient = j.value("orientation", "rows");
    if (orient != "rows" && orient != "columns")
        throw std::runtime_error("manifest: orientation must be 'rows' or 'columns'");
    return build_lrr(get_mtx(dir, j, "X"), get_mtx(dir, j, "L_Z"), get_mtx(dir, j, "L_G"), get_number(j, "lambda"),
                     get_number(j, "mu"), get_number(j, "gamma"),
                     orient == "rows" ? LaplacianOrientation::rows : LaplacianOrientation::columns);
}

} // namespace vmor
