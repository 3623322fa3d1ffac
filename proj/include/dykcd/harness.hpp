#pragma once

#include <map>
#include <random>

#include "dykcd/bregman.hpp"
#include "dykcd/instance_io.hpp"
#include "dykcd/parallel.hpp"
#include "dykcd/rates.hpp"

namespace dykcd {

// Gaussian linear-model instance family: rows of X standard normal,
// y = X beta0 + noise, beta0 = (1,..,1 [s times], 0,..,0), single-column
// blocks with an l1 penalty.
struct InstanceSpec {
  Eigen::Index n = 100;
  Eigen::Index p = 500;
  Eigen::Index s = 20;
  double noise_sd = 1.0;
  double lambda = 5.0;
  std::uint64_t seed = 1;
  int trials = 30;

  void validate() const;
};

// Fraction e such that e*p parallel block updates cost one serial-update
// unit: a serial sweep costs p work units, a parallel sweep 1/e.
struct EfficiencyModel {
  double e = 0.1;
  void validate() const;
  double parallel_sweep_cost() const { return 1.0 / e; }
};

// Deterministic standard-normal stream (mt19937_64 + Box-Muller), so that
// instances are bit-identical across runs and platforms with the same build.
class NormalSampler {
 public:
  NormalSampler(std::uint64_t seed, std::uint64_t stream);
  double next();

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

RegressionProblem gen_instance(const InstanceSpec& spec, int trial);

struct LassoCertificate {
  double gap = 0.0;
  int sweeps = 0;
};

// Duality-gap-certified reference solution of the l1 problem; the dual point
// is the residual scaled into the slab constraints, so the reported gap upper
// bounds the true suboptimality.
std::pair<Vector, LassoCertificate> reference_lasso(const Matrix& X, const Vector& y,
                                                    double lambda, double tol_gap = 1e-10);

// Same certificate for block problems (every block must carry a positive
// penalty so the residual can be scaled dual-feasible).
std::pair<Vector, LassoCertificate> certified_optimum(const RegressionProblem& problem,
                                                      double tol_gap = 1e-10);

struct KktReport {
  bool pass = false;
  double max_violation = 0.0;
};

// Stationarity check for the l1 problem: |X_i^T r| <= lambda + tol everywhere
// and X_i^T r = sign(w_i) lambda within tol on coordinates with |w_i| > tol.
KktReport kkt_check(const Matrix& X, const Vector& y, double lambda, const Vector& w, double tol);

struct ProjectionOracleResult {
  Vector point;
  std::vector<int> active;  // indices into the split halfspace list
  Vector multipliers;       // nonnegative, y - point = sum nu_i a_i over active
};

// Desk-scale ground truth for projecting onto an intersection of polyhedral
// sets (halfspaces, slabs, boxes; at most 16 halfspaces after splitting).
// Exact active-set enumeration cross-checked against a long corrected cyclic
// projection run; disagreement beyond 10*tol raises OracleInconsistencyError.
ProjectionOracleResult projection_oracle_full(const std::vector<ConvexSet>& sets, const Vector& y,
                                              double tol = 1e-8);
Vector projection_oracle(const std::vector<ConvexSet>& sets, const Vector& y, double tol = 1e-8);

struct ExperimentConfig {
  InstanceSpec spec;
  EfficiencyModel efficiency;
  bool run_cd = true;
  bool run_pdcd = true;
  std::vector<double> padmm_rhos = {10.0, 50.0, 200.0};
  double rel_subopt_target = 1e-6;
  // absolute suboptimality level at which work units are compared; runs stop
  // at min(rel target, half this threshold) above the certified optimum so
  // the crossing is always observed
  double work_threshold = 1e-4;
  int max_sweeps_serial = 200000;
  int max_sweeps_parallel = 500000;
  double cert_tol_gap = 1e-10;
  std::string out_dir;  // empty: keep results in memory only
  bool timing = false;  // real wall_ns in CSVs (breaks byte-reproducibility)
  unsigned threads = 1;
};

struct SolverRun {
  std::string name;
  double work_per_sweep = 0.0;
  double final_rel_subopt = 0.0;
  std::optional<double> work_to_1e4;  // work units to absolute suboptimality 1e-4
  int sweeps = 0;
  std::vector<double> suboptimality;  // per sweep
};

struct TrialResult {
  int trial = 0;
  double optimum = 0.0;
  double cert_gap = 0.0;
  Eigen::Index active_size = 0;
  std::vector<SolverRun> runs;
};

struct ExperimentSummary {
  InstanceSpec spec;
  EfficiencyModel efficiency;
  std::vector<TrialResult> trials;
  double mean_active_size = 0.0;
  std::map<std::string, double> mean_work_to_1e4;       // by solver name
  std::map<std::string, double> worst_final_rel_subopt; // by solver name

  std::string to_json() const;
};

ExperimentSummary run_experiment(const ExperimentConfig& config);

struct PlotSeries {
  std::string solver;
  int trial = 0;
  std::vector<double> work;
  std::vector<double> suboptimality;
};

// Log-scale suboptimality vs work units, one thin line per trial and one
// thick mean line per solver, written as an SVG document.
void emit_plot(const std::vector<PlotSeries>& series, std::ostream& os);
void emit_plot_file(const std::vector<PlotSeries>& series, const std::string& path);

}  // namespace dykcd
