#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dykcd/numerics.hpp"

namespace dykcd {

struct StopRule {
  int max_sweeps = 10000;
  double tol_change = 1e-10;               // sup-norm change per sweep
  std::optional<double> tol_gap;           // duality gap target (lasso-style solves)
  std::optional<double> target_criterion;  // stop once criterion <= target

  void validate() const {
    if (max_sweeps < 1) throw ParameterError("StopRule: max_sweeps must be >= 1");
    if (!(tol_change > 0)) throw ParameterError("StopRule: tol_change must be positive");
    if (tol_gap && !(*tol_gap > 0)) throw ParameterError("StopRule: tol_gap must be positive");
  }
};

enum class SolveStatus { converged, max_iter, error };

std::string to_string(SolveStatus s);

struct TraceRecord {
  int k = 0;
  double criterion = 0.0;
  double suboptimality = std::numeric_limits<double>::quiet_NaN();
  Eigen::Index active_size = 0;
  std::int64_t block_updates_done = 0;
  std::int64_t wall_ns = 0;
  std::optional<Vector> w;  // coefficient snapshot (cadence-dependent)
  std::optional<Vector> u;  // primal point snapshot
};

// Per-iteration record of a solve plus its terminal status and config echo.
struct SolverTrace {
  std::vector<TraceRecord> records;
  SolveStatus status = SolveStatus::max_iter;
  std::map<std::string, std::string> config;  // tolerances, seed, solver name
  int parallel_width = 0;                     // d for parallel sweeps, 0 for serial

  // Post-pass: suboptimality = criterion - optimum (never computed in-loop).
  void fill_suboptimality(double optimum);

  const TraceRecord& last() const;
};

// Snapshot cadence: full w snapshot every sweep for p <= 1000, else
// criterion-only, unless the caller overrides.
enum class SnapshotMode { automatic, on, off };

bool snapshots_enabled(SnapshotMode mode, Eigen::Index p);

// CSV schema: k,criterion,suboptimality,active_size,block_updates_done,wall_ns
// plus parallel_width when the trace is parallel and work_units when
// work_units_per_sweep is given.  Reals carry 17 significant digits.
// zero_wall writes 0 in the wall_ns column (reproducible-output mode).
void write_trace_csv(std::ostream& os, const SolverTrace& trace,
                     std::optional<double> work_units_per_sweep = std::nullopt,
                     bool zero_wall = true);
void write_trace_csv_file(const std::string& path, const SolverTrace& trace,
                          std::optional<double> work_units_per_sweep = std::nullopt,
                          bool zero_wall = true);

// Sidecar JSON: terminal status plus the config echo.
void write_trace_sidecar_json(const std::string& path, const SolverTrace& trace);

// %.17g formatting used by every serialized real.
std::string format_real(double x);

}  // namespace dykcd
