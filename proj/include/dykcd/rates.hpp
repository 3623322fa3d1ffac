#pragma once

#include <optional>

#include "dykcd/parallel.hpp"
#include "dykcd/trace.hpp"

namespace dykcd {

// Rate constants for the asymptotically linear phase of the cyclic and
// product-space schemes on l1 problems, together with measured per-sweep
// contraction ratios in the design seminorm ||v||_Sigma = ||X v||_2.
struct RateReport {
  std::vector<Eigen::Index> active;
  Eigen::Index a = 0;
  double bound_iusem = std::numeric_limits<double>::quiet_NaN();
  double bound_deutsch = std::numeric_limits<double>::quiet_NaN();
  double bound_parallel = std::numeric_limits<double>::quiet_NaN();
  double mu_lower = std::numeric_limits<double>::quiet_NaN();
  std::optional<int> support_id_iter;  // first sweep with the persistent sign pattern
  std::vector<int> ratio_sweeps;       // sweep index k of each ratio (w^{k+1} vs w^k)
  std::vector<double> empirical_ratios;

  std::string to_json() const;
};

// Indices with |w_i| > tol.
std::vector<Eigen::Index> active_set(const Vector& w, double tol = 1e-9);

// (a^2 / (a^2 + lambda_min(X_A^T X_A) / max_{i in A} ||X_i||^2))^{1/2}
double bound_iusem(const Matrix& X, const std::vector<Eigen::Index>& A);

// (1 - prod_{j<a} ||P^perp_{i_{j+1}..i_a} X_{i_j}||^2 / ||X_{i_j}||^2)^{1/2},
// A enumerated ascending.
double bound_deutsch(const Matrix& X, const std::vector<Eigen::Index>& A);

// ((2a/gamma_min) / (2a/gamma_min + lambda_min(X_A^T X_A) / max ||X_i||^2))^{1/2}
double bound_parallel(const Matrix& X, const std::vector<Eigen::Index>& A,
                      const WeightVector& weights);

// sigma_min(M) / (sqrt(s) max_i ||h_i||) for M = [h_1 .. h_s]; sigma_min is
// the smallest nonzero singular value.
double mu_lower_bound(const std::vector<Vector>& normals);

// Ratios ||w^{k+1}-w*||_Sigma / ||w^k-w*||_Sigma from a snapshotted trace;
// ratios whose denominator is below 1e-14 are omitted.  support_id_iter is
// the first sweep whose sign pattern (at the given tolerance) matches w*'s
// and persists to the end of the trace.
RateReport empirical_rate(const SolverTrace& trace, const Matrix& X, const Vector& w_star,
                          double support_tol = 1e-9);

// Full report: empirical ratios plus all bounds for the active set of w_star.
RateReport make_rate_report(const SolverTrace& trace, const Matrix& X, const Vector& w_star,
                            const std::optional<WeightVector>& weights = std::nullopt,
                            double support_tol = 1e-9);

}  // namespace dykcd
