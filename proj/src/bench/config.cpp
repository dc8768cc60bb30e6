#include <vmor/bench.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace vmor::bench {

using json = nlohmann::json;

std::string to_string(Algorithm a) {
    switch (a) {
    case Algorithm::padmm_ebb:
        return "padmm-ebb";
    case Algorithm::condat_vu:
        return "condat-vu";
    case Algorithm::ppg:
        return "ppg";
    case Algorithm::fbhf:
        return "fbhf";
    case Algorithm::afbas_pd:
        return "afbas-pd";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string &name) {
    for (auto a : {Algorithm::padmm_ebb, Algorithm::condat_vu, Algorithm::ppg, Algorithm::fbhf, Algorithm::afbas_pd})
        if (to_string(a) == name)
            return a;
    throw ConfigError("unknown algorithm '" + name + "' (expected padmm-ebb, condat-vu, ppg, fbhf or afbas-pd)");
}

double ProblemSpec::number(const std::string &key, double fallback) const {
    const auto it = params.find(key);
    if (it == params.end())
        return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument(key);
        return v;
    } catch (const std::exception &) {
        throw ConfigError("problem parameter '" + key + "' is not a number: " + it->second);
    }
}

std::string ProblemSpec::text() const {
    if (kind == "manifest")
        return "manifest:" + path;
    std::string s = kind;
    char sep = ':';
    for (const auto &[k, v] : params) {
        s += sep + k + "=" + v;
        sep = ',';
    }
    return s;
}

ProblemSpec parse_problem(const std::string &descriptor) {
    ProblemSpec spec;
    const auto colon = descriptor.find(':');
    spec.kind = descriptor.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : descriptor.substr(colon + 1);
    if (spec.kind == "manifest") {
        if (rest.empty())
            throw ConfigError("manifest problem needs a path: manifest:<file.json>");
        spec.path = rest;
        return spec;
    }
    if (spec.kind != "qp" && spec.kind != "lrr")
        throw ConfigError("unknown problem kind '" + spec.kind + "' (expected qp, lrr or manifest)");
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("malformed problem parameter '" + item + "' (expected key=value)");
        spec.params[item.substr(0, eq)] = item.substr(eq + 1);
    }
    static const std::map<std::string, std::vector<std::string>> known = {
        {"qp", {"seed", "p", "n", "m"}},
        {"lrr", {"seed", "d", "n", "lambda", "mu", "gamma", "k", "orientation"}},
    };
    for (const auto &[k, v] : spec.params) {
        const auto &keys = known.at(spec.kind);
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw ConfigError("unknown " + spec.kind + " parameter '" + k + "'");
    }
    return spec;
}

json ExperimentConfig::to_json() const {
    auto num = [](double v) -> json { return std::isnan(v) ? json(nullptr) : json(v); };
    json j;
    j["algorithm"] = to_string(algorithm);
    j["problem"] = problem.text();
    j["seed"] = seed;
    j["sigma"] = solver.sigma;
    j["theta_policy"] = solver.theta_policy;
    j["theta"] = solver.theta;
    j["beta"] = num(solver.beta);
    j["beta_growth"] = solver.beta_growth;
    j["xi0"] = solver.xi0;
    j["tol"] = solver.tol;
    j["max_iters"] = solver.max_iters;
    j["r"] = num(solver.r);
    j["s"] = num(solver.s);
    j["gamma"] = num(solver.gamma);
    j["alpha"] = num(solver.alpha);
    j["relaxation"] = num(solver.relaxation);
    return j;
}

ExperimentConfig config_from_json(const json &j) {
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    static const std::vector<std::string> keys = {
        "algorithm", "problem", "seed", "sigma", "theta_policy", "theta", "beta", "beta_growth", "xi0", "tol",
        "max_iters", "r", "s", "gamma", "alpha", "relaxation", "trace", "summary"};
    for (const auto &[k, v] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw ConfigError("unknown config key '" + k + "'");
    ExperimentConfig cfg;
    try {
        if (j.contains("algorithm"))
            cfg.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
        if (j.contains("problem"))
            cfg.problem = parse_problem(j["problem"].get<std::string>());
        if (j.contains("seed"))
            cfg.seed = j["seed"].get<std::uint64_t>();
        auto &s = cfg.solver;
        auto opt = [&j](const char *key, double &dst) {
            if (j.contains(key) && !j[key].is_null())
                dst = j[key].get<double>();
        };
        opt("sigma", s.sigma);
        opt("theta", s.theta);
        opt("beta", s.beta);
        opt("beta_growth", s.beta_growth);
        opt("xi0", s.xi0);
        opt("tol", s.tol);
        opt("r", s.r);
        opt("s", s.s);
        opt("gamma", s.gamma);
        opt("alpha", s.alpha);
        opt("relaxation", s.relaxation);
        if (j.contains("max_iters"))
            s.max_iters = j["max_iters"].get<long>();
        if (j.contains("theta_policy"))
            s.theta_policy = j["theta_policy"].get<std::string>();
        if (j.contains("trace"))
            cfg.trace_path = j["trace"].get<std::string>();
        if (j.contains("summary"))
            cfg.summary_path = j["summary"].get<std::string>();
    } catch (const json::exception &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    try {
        return config_from_json(json::parse(in));
    } catch (const json::parse_error &e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

void validate(const ExperimentConfig &cfg) {
    const auto &s = cfg.solver;
    if (cfg.problem.kind.empty())
        throw ConfigError("no problem given (--problem)");
    if (!(s.sigma >= 0 && s.sigma < 1))
        throw ConfigError("sigma must lie in [0, 1)");
    if (s.theta_policy != "adaptive" && s.theta_policy != "fixed")
        throw ConfigError("theta policy must be 'adaptive' or 'fixed'");
    if (!(s.theta > -1))
        throw ConfigError("theta must exceed -1");
    if (!(std::isnan(s.beta) || s.beta > 0) || !(s.beta_growth >= 1))
        throw ConfigError("need beta > 0 and beta_growth >= 1");
    if (!(s.xi0 >= 0))
        throw ConfigError("xi0 must be nonnegative");
    if (!(s.tol >= 0) || s.max_iters < 1)
        throw ConfigError("need tol >= 0 and max_iters >= 1");
    for (double v : {s.r, s.s, s.gamma, s.alpha})
        if (!std::isnan(v) && !(v > 0))
            throw ConfigError("step parameters r, s, gamma and alpha must be positive");
    if (cfg.problem.kind == "lrr" && cfg.algorithm != Algorithm::padmm_ebb)
        throw ConfigError("the lrr problem is only supported by padmm-ebb");
    if (cfg.problem.kind == "qp") {
        const double p = cfg.problem.number("p", 2), n = cfg.problem.number("n", 5),
                     m = cfg.problem.number("m", 3);
        if (p < 1 || n < 1 || m < 1 || m > p * n)
            throw ConfigError("qp needs p >= 1, n >= 1 and 1 <= m <= p n");
    }
}

} // namespace vmor::bench
