#pragma once

#include <vmor/hpe_core.hpp>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace vmor::bench {

/// Invalid or inconsistent configuration (exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The solver stopped on a violated condition (exit code 3).
struct SolverAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Algorithm { padmm_ebb, condat_vu, ppg, fbhf, afbas_pd };
std::string to_string(Algorithm a);
/// Throws ConfigError on unknown names.
Algorithm parse_algorithm(const std::string &name);

/// "qp:seed=1,p=2,n=5,m=3", "lrr:seed=1,d=40,n=40" or "manifest:path/to.json".
struct ProblemSpec {
    std::string kind;
    std::map<std::string, std::string> params;
    std::string path;

    double number(const std::string &key, double fallback) const;
    std::string text() const;
};
ProblemSpec parse_problem(const std::string &descriptor);

struct SolverParams {
    double sigma = 0.5;
    /// "adaptive" or "fixed".
    std::string theta_policy = "adaptive";
    /// Over-relaxation for the fixed policy.
    double theta = 0.0;
    /// Penalty; NaN selects 1 for qp and the lrr default for lrr.
    double beta = std::numeric_limits<double>::quiet_NaN();
    double beta_growth = 1.0;
    double xi0 = 0.01;
    double tol = 1e-8;
    long max_iters = 5000;
    // Method-specific steps; NaN selects a default derived from the instance.
    double r = std::numeric_limits<double>::quiet_NaN();
    double s = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double relaxation = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::padmm_ebb;
    ProblemSpec problem;
    SolverParams solver;
    std::uint64_t seed = 0;
    std::string trace_path;
    std::string summary_path;

    nlohmann::json to_json() const;
};

/// Reads a JSON config file; keys mirror the command-line flags.
ExperimentConfig config_from_json(const nlohmann::json &j);
ExperimentConfig load_config(const std::string &path);
/// Algorithm/problem compatibility and parameter domains; throws ConfigError.
void validate(const ExperimentConfig &cfg);

struct RunOutcome {
    ExperimentConfig config;
    IterTrace trace;
    Termination termination = Termination::max_iters;
    std::string diagnostic;
    double wall_time_s = 0;
    /// Per iteration: the PKKT residual for padmm-ebb, max(|v|, eps) otherwise.
    std::vector<double> residual;
    /// Per iteration: |v-bar| with unit weights.
    std::vector<double> ergodic_v;
    BlockPoint solution;

    long iterations() const { return static_cast<long>(trace.size()); }
    bool aborted() const {
        return termination == Termination::criterion_violation || termination == Termination::metric_violation ||
               termination == Termination::native_mismatch;
    }
};

/// Builds the instance and runs the solver. Throws ConfigError on invalid
/// configurations (including violated step conditions).
RunOutcome run_experiment(const ExperimentConfig &cfg);

/// JSON summary with "schema": 1. Slopes are null with too few iterations.
nlohmann::json summary_json(const RunOutcome &run);

struct CriterionResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

/// Runs the acceptance criteria whose names contain `filter` (all when
/// empty), printing one line per criterion as it finishes.
std::vector<CriterionResult> run_acceptance(std::ostream &out, const std::string &filter = "");

/// Entry point shared by the executable and the tests.
int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace vmor::bench
