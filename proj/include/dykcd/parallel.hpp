#pragma once

#include <functional>
#include <optional>

#include "dykcd/serial.hpp"

namespace dykcd {

// Positive weights summing to 1 (within 1e-12).
class WeightVector {
 public:
  explicit WeightVector(Vector gamma);
  static WeightVector uniform(Eigen::Index d);

  Eigen::Index size() const { return gamma_.size(); }
  double operator[](Eigen::Index i) const { return gamma_(i); }
  double min() const { return gamma_.minCoeff(); }
  const Vector& values() const { return gamma_; }

 private:
  Vector gamma_;
};

// Augmented Lagrangian parameters: per-block rho_i (no sum constraint), a
// scalar rho for 2-set splitting, and the alpha scaling of the inertial
// constructions.
struct AdmmParams {
  Vector rho_blocks;   // rho_1..rho_d (may be empty when unused)
  double rho = 1.0;    // 2-set parameter
  double alpha = 1.0;  // inertial scaling

  static AdmmParams uniform_blocks(Eigen::Index d, double total);
};

// Product-space variant: all d projections read the same start-of-sweep
// point; the merge is an ordered reduction, so results are independent of
// thread count.
ApproxResult parallel_dykstra(const ApproxProblem& problem, const WeightVector& weights,
                              const StopRule& stop, unsigned threads = 1);

RegressionResult parallel_dykstra_cd(const RegressionProblem& problem, const WeightVector& weights,
                                     const StopRule& stop, unsigned threads = 1,
                                     SnapshotMode snapshots = SnapshotMode::automatic);

struct AdmmTwoSetInit {
  std::optional<Vector> u2;  // default: the anchor (the configuration under
                             // which the subspace reduction is exact)
  std::optional<Vector> z;   // default: 0
};

using TwoSetObserver =
    std::function<void(int k, const Vector& u1, const Vector& u2, const Vector& z)>;

struct AdmmTwoSetResult {
  Vector u1, u2, z;
  SolverTrace trace;
};

// Two-block splitting for the best approximation problem over C1, C2.
AdmmTwoSetResult admm_two_set(const Vector& y, const ConvexSet& C1, const ConvexSet& C2,
                              double rho, const StopRule& stop, const AdmmTwoSetInit& init = {},
                              const TwoSetObserver& observer = {});

RegressionResult parallel_admm_cd(const RegressionProblem& problem, const AdmmParams& params,
                                  const StopRule& stop, unsigned threads = 1,
                                  SnapshotMode snapshots = SnapshotMode::automatic);

// Multi-block splitting with an inertial u0 term.  Shipped as a
// demonstration construct: at the scalings below it approaches the corrected
// cyclic projection sweep (alpha -> 0 for set_intersection, alpha -> inf for
// best_approximation).  Multi-block splittings are not convergent in general.
enum class InertialMode {
  set_intersection,    // rho_0 = alpha^{d+1}, rho_i = alpha^i
  best_approximation,  // rho_{-1} = alpha^{d+1}, rho_0 = 1, rho_i = alpha^{d+1-i}
};

struct InertialResult {
  std::vector<Vector> u;  // u_0..u_d after the last sweep
  std::vector<Vector> z;  // z_0..z_d
  SolverTrace trace;
};

// Optional warm start with d+1 primal points and d+1 corrections; defaults
// are copies of the anchor and zeros.
struct InertialInit {
  std::optional<std::vector<Vector>> u;
  std::optional<std::vector<Vector>> z;
};

InertialResult inertial_multiblock_admm(const ApproxProblem& problem, const AdmmParams& params,
                                        InertialMode mode, const StopRule& stop,
                                        const InertialInit& init = {});

}  // namespace dykcd
