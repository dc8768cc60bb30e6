#include <vmor/trace.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace vmor {

const char *const kTraceColumns =
    "iter,time_s,v_norm,eps,theta,criterion_slack,step_norm,metric_min,metric_max,dist_to_ref";

namespace {
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace

void write_trace_csv(std::ostream &out, const IterTrace &trace) {
    out << kTraceColumns;
    for (const auto &c : trace.extra_columns)
        out << ',' << c;
    out << '\n';
    for (const auto &r : trace.records) {
        out << r.iter << ',' << fmt(r.time_s) << ',' << fmt(r.v_norm) << ',' << fmt(r.eps) << ','
            << fmt(r.theta) << ',' << fmt(r.criterion_slack) << ',' << fmt(r.step_norm) << ','
            << fmt(r.metric_min) << ',' << fmt(r.metric_max) << ',' << fmt(r.dist_to_ref);
        for (double e : r.extra)
            out << ',' << fmt(e);
        out << '\n';
    }
}

void write_trace_csv(const std::string &path, const IterTrace &trace) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_trace_csv: cannot open " + path);
    write_trace_csv(out, trace);
}

} // namespace vmor
