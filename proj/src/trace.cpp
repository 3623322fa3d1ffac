#include "dykcd/trace.hpp"

#include <cstdio>
#include <fstream>

namespace dykcd {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::error: return "error";
  }
  return "?";
}

void SolverTrace::fill_suboptimality(double optimum) {
  for (auto& rec : records) rec.suboptimality = rec.criterion - optimum;
}

const TraceRecord& SolverTrace::last() const {
  if (records.empty()) throw DataError("trace has no records");
  return records.back();
}

bool snapshots_enabled(SnapshotMode mode, Eigen::Index p) {
  switch (mode) {
    case SnapshotMode::on: return true;
    case SnapshotMode::off: return false;
    case SnapshotMode::automatic: return p <= 1000;
  }
  return false;
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_trace_csv(std::ostream& os, const SolverTrace& trace,
                     std::optional<double> work_units_per_sweep, bool zero_wall) {
  os << "k,criterion,suboptimality,active_size,block_updates_done,wall_ns";
  if (trace.parallel_width > 0) os << ",parallel_width";
  if (work_units_per_sweep) os << ",work_units";
  os << "\n";
  for (const auto& rec : trace.records) {
    os << rec.k << ',' << format_real(rec.criterion) << ',' << format_real(rec.suboptimality)
       << ',' << rec.active_size << ',' << rec.block_updates_done << ','
       << (zero_wall ? 0 : rec.wall_ns);
    if (trace.parallel_width > 0) os << ',' << trace.parallel_width;
    if (work_units_per_sweep) os << ',' << format_real(rec.k * *work_units_per_sweep);
    os << "\n";
  }
}

void write_trace_csv_file(const std::string& path, const SolverTrace& trace,
                          std::optional<double> work_units_per_sweep, bool zero_wall) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  write_trace_csv(os, trace, work_units_per_sweep, zero_wall);
}

void write_trace_sidecar_json(const std::string& path, const SolverTrace& trace) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  os << "{\n  \"status\": \"" << to_string(trace.status) << "\",\n  \"config\": {";
  bool first = true;
  for (const auto& [key, val] : trace.config) {
    os << (first ? "\n" : ",\n") << "    \"" << key << "\": \"" << val << "\"";
    first = false;
  }
  os << "\n  },\n  \"records\": " << trace.records.size()
     << ",\n  \"parallel_width\": " << trace.parallel_width << "\n}\n";
}

}  // namespace dykcd
