#pragma once

#include <functional>
#include <optional>

#include "dykcd/geometry.hpp"
#include "dykcd/trace.hpp"

namespace dykcd {

// Fired after each inner step with the fresh primal point and dual increment.
using ProjectionObserver =
    std::function<void(int sweep, int block, const Vector& u, const Vector& z)>;

struct ApproxResult {
  Vector point;
  SolverTrace trace;
};

struct RegressionResult {
  Vector w;
  SolverTrace trace;
};

struct HildrethResult {
  Vector point;
  Vector multipliers;  // one nonnegative scalar per halfspace
  SolverTrace trace;
};

// Optional warm start: primal point and per-set corrections.  Defaults are
// the anchor and zeros.
struct CyclicInit {
  std::optional<Vector> u;
  std::optional<std::vector<Vector>> z;
};

// Cyclic projections with per-set dual corrections; converges to the
// projection of the anchor onto the intersection.  Fixed ascending set order.
ApproxResult dykstra(const ApproxProblem& problem, const StopRule& stop,
                     const ProjectionObserver& observer = {}, const CyclicInit& init = {});

// Cyclic projections without corrections; feasible limit, equals the true
// projection only when the sets are affine.
ApproxResult alternating_projections(const ApproxProblem& problem, const StopRule& stop,
                                     const ProjectionObserver& observer = {});

// Halfspace specialization of the corrected cyclic scheme, carried by one
// nonnegative dual scalar per halfspace.
HildrethResult hildreth(const std::vector<Halfspace>& halfspaces, const Vector& y,
                        const StopRule& stop, const ProjectionObserver& observer = {});

// Cyclic exact blockwise minimization; criterion nonincreasing.
RegressionResult block_cd(const RegressionProblem& problem, const StopRule& stop,
                          Vector w0 = Vector(),
                          SnapshotMode snapshots = SnapshotMode::automatic);

// Width-1 specialization with closed-form soft-threshold updates.
RegressionResult lasso_cd(const Matrix& X, const Vector& y, double lambda, const StopRule& stop,
                          SnapshotMode snapshots = SnapshotMode::automatic);

// Runs the corrected cyclic projection scheme on the dual best-approximation
// problem and blockwise minimization on the regression problem in lockstep;
// returns the largest deviation between the paired iterates
// (dual increments vs fitted blocks, primal points vs running residuals).
double equivalence_check(const RegressionProblem& problem, const StopRule& stop);

}  // namespace dykcd
