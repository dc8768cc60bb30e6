#include <vmor/bench.hpp>

#include <algorithm>
#include <cmath>

namespace vmor::bench {

using json = nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json slope(const std::vector<double> &y) {
    const long K = static_cast<long>(y.size());
    if (K < 3)
        return nullptr;
    const auto s = loglog_slope(y, std::max(1L, K / 10), K);
    return s ? json(*s) : json(nullptr);
}

} // namespace

json summary_json(const RunOutcome &run) {
    json j;
    j["schema"] = 1;
    j["config"] = run.config.to_json();
    j["iterations"] = run.iterations();
    j["termination"] = to_string(run.termination);
    j["diagnostic"] = run.diagnostic;
    j["wall_time_s"] = run.wall_time_s;

    json fin = json::object();
    if (!run.trace.records.empty()) {
        const auto &last = run.trace.records.back();
        fin["v_norm"] = number_or_null(last.v_norm);
        fin["eps"] = number_or_null(last.eps);
        fin["residual"] = number_or_null(run.residual.back());
        fin["dist_to_ref"] = number_or_null(last.dist_to_ref);
    } else {
        fin["v_norm"] = fin["eps"] = fin["residual"] = fin["dist_to_ref"] = nullptr;
    }
    j["final"] = fin;
    j["min_residual"] =
        run.residual.empty() ? json(nullptr) : number_or_null(*std::min_element(run.residual.begin(), run.residual.end()));
    j["slopes"] = {{"pointwise", slope(run.residual)}, {"ergodic", slope(run.ergodic_v)}};
    return j;
}

} // namespace vmor::bench
