#pragma once

#include <vmor/hpe_core.hpp>

#include <iosfwd>
#include <string>

namespace vmor {

/// Base column names of the trace CSV.
extern const char *const kTraceColumns;

/// Writes one header line and one row per record.
void write_trace_csv(std::ostream &out, const IterTrace &trace);
void write_trace_csv(const std::string &path, const IterTrace &trace);

} // namespace vmor
