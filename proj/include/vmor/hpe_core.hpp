#pragma once

#include <vmor/linops.hpp>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace vmor {

/// Summable metric-growth schedule xi_k = xi0 / (k+1)^2, k = 0, 1, ...
struct XiSchedule {
    double xi0 = 0.01;

    double operator()(long k) const;
    /// sum_{i=from}^{to} xi_i (empty when to < from).
    double partial_sum(long from, long to) const;
    /// prod_{i>=0} (1 + xi_i) = sinh(pi sqrt(xi0)) / (pi sqrt(xi0)).
    double product_total() const;
    /// prod_{i=0}^{k} (1 + xi_i)
    double product(long k) const;
};

struct HpeConfig {
    double sigma = 0.5;
    double theta_min = -0.5;
    double c_min = 1.0;
    XiSchedule xi;
    double omega_lower = 1e-8;
    double omega_upper = 1e8;
    long max_iters = 1000;
    double tol = 1e-8;

    /// Throws std::invalid_argument when a field is outside its domain.
    void validate() const;
};

struct HpeCertificate {
    BlockPoint y;
    BlockPoint v;
    double eps = 0;
    double c = 1;
    double theta = 0;
};

struct CriterionReport {
    double lhs = 0;
    double rhs = 0;
    /// (rhs - lhs) / (1 + rhs)
    double slack = 0;
    bool ok = false;
};

/// Relative error test of one certificate. Throws std::invalid_argument on
/// negative eps or mismatched layouts.
CriterionReport check_criterion(const BlockPoint &x, const HpeCertificate &cert, const Metric &M,
                                double sigma);

/// x - (1 + theta) c M^{-1} v
BlockPoint extragradient_step(const BlockPoint &x, const HpeCertificate &cert, const Metric &M);

struct MetricUpdateReport {
    bool ok = true;
    std::string diagnostic;
    explicit operator bool() const { return ok; }
};

/// Checks omega_lower I <= M_next <= (1 + xi) M_k. Exact for two block-diagonal
/// metrics, otherwise sampled with `probes` random Rayleigh quotients.
MetricUpdateReport validate_metric_update(const Metric &M_k, const Metric &M_next, double xi,
                                          double omega_lower, int probes = 20,
                                          std::uint64_t seed = 0);

struct OracleStep {
    HpeCertificate cert;
    /// Next iterate as computed by the splitting method itself, if it has one.
    std::optional<BlockPoint> native_next;
};

using StepOracle = std::function<OracleStep(const BlockPoint &x, const Metric &M, long k)>;

struct IterRecord {
    long iter = 0;
    double time_s = 0;
    double v_norm = 0;
    double eps = 0;
    double theta = 0;
    double criterion_slack = 0;
    double step_norm = 0;
    double metric_min = 0;
    double metric_max = 0;
    double dist_to_ref = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> extra;
};

/// Append-only per-iteration log. `extra_columns` names the entries of
/// IterRecord::extra.
struct IterTrace {
    std::vector<std::string> extra_columns;
    std::vector<IterRecord> records;

    void append(IterRecord r);
    size_t size() const { return records.size(); }
};

enum class Termination { converged, max_iters, criterion_violation, metric_violation, native_mismatch };
std::string to_string(Termination t);

/// Passed to observers after each accepted step.
struct StepView {
    long k;
    const BlockPoint &x;
    const HpeCertificate &cert;
    const Metric &metric;
    const BlockPoint &x_next;
    const Metric &metric_next;
};

using MetricSchedule = std::function<MetricPtr(long k, const MetricPtr &current)>;

struct RunOptions {
    const BlockPoint *reference = nullptr;
    bool keep_history = false;
    /// Metric for iteration k+1 given the one used at k; constant when empty.
    MetricSchedule metric_schedule;
    std::function<void(const StepView &)> observer;
    /// Tolerance for comparing the kernel update with OracleStep::native_next.
    double native_tol = 1e-12;
};

struct RunResult {
    BlockPoint solution;
    BlockPoint last_iterate;
    IterTrace trace;
    Termination termination = Termination::max_iters;
    std::string diagnostic;
    std::vector<HpeCertificate> history;
    long iterations() const { return static_cast<long>(trace.size()); }
};

RunResult run(const StepOracle &oracle, const BlockPoint &x0, const MetricPtr &M0,
              const HpeConfig &cfg, const RunOptions &opts = {});

struct PointwiseBound {
    double bound_v = 0;
    double bound_eps = 0;
};

/// Worst-case bounds on min_{i<=k} |v^i| and min_{i<=k} eps_i, with d0 the
/// M_0-distance from x^0 to a solution.
PointwiseBound pointwise_bound(long k, const HpeConfig &cfg, double d0);

struct ErgodicAggregate {
    BlockPoint y;
    BlockPoint v;
    double eps = 0;
};

/// Weighted means with weights (1 + theta_i) c_i alpha_i. Throws
/// std::invalid_argument when the weights sum to zero.
ErgodicAggregate ergodic_aggregate(const std::vector<HpeCertificate> &history,
                                   const std::vector<double> &alpha);
/// Same, over the first `count` entries.
ErgodicAggregate ergodic_aggregate(const std::vector<HpeCertificate> &history,
                                   const std::vector<double> &alpha, size_t count);

/// Local linear contraction factor under metric subregularity with modulus kappa.
double linear_rate_factor(double kappa, double sigma, double theta, double c_min, double Xi,
                          double omega_upper, double omega_lower);

/// Slope of the least-squares line through (log k, log y_k) for k in [k_lo, k_hi]
/// (1-based). Returns nullopt with fewer than 3 usable points.
std::optional<double> loglog_slope(const std::vector<double> &y, long k_lo, long k_hi);

} // namespace vmor
