#pragma once

#include "dykcd/parallel.hpp"
#include "dykcd/serial.hpp"

namespace dykcd {

// Closed, strictly convex, differentiable loss f with an explicit conjugate.
// Also exposes g(v) = f*(-v), the generator of the dual-side divergence, and
// the anchor b = -grad f(0).
class SmoothLoss {
 public:
  enum class Kind { quadratic, logistic };

  // f(z) = 1/2 ||y - z||^2
  static SmoothLoss quadratic(Vector y);
  // f(z) = -y^T z + sum_i log(1 + exp(z_i)), y in {0,1}^n
  static SmoothLoss logistic(Vector y);

  Kind kind() const { return kind_; }
  const Vector& y() const { return y_; }
  Eigen::Index n() const { return y_.size(); }
  bool separable() const { return true; }

  double value(const Vector& z) const;
  Vector gradient(const Vector& z) const;
  // grad f*; logistic inputs with v + y outside (0,1) are clamped to
  // [eps, 1-eps], eps = 1e-12, and flagged through `clamped`.
  Vector conjugate_gradient(const Vector& v, bool* clamped = nullptr) const;

  double g_value(const Vector& v) const;       // g(v) = f*(-v)
  Vector g_gradient(const Vector& v, bool* clamped = nullptr) const;
  Vector g_star_gradient(const Vector& x) const;  // grad g* = -grad f(-x)
  Vector anchor() const;                          // b = -grad f(0)

  double scalar_derivative(Eigen::Index i, double t) const;  // f_i'(t)

 private:
  SmoothLoss(Kind k, Vector y) : kind_(k), y_(std::move(y)) {}
  Kind kind_;
  Vector y_;
};

// D_g(u, b) = g(u) - g(b) - <grad g(b), u - b>.
double bregman_divergence(const SmoothLoss& loss, const Vector& u, const Vector& b);

// argmin_{c in set} D_g(c, x).  Quadratic losses delegate to the Euclidean
// projection for every set; non-quadratic losses support halfspace, slab,
// box, consensus, affine and inverse-image sets.
Vector bregman_project(const SmoothLoss& loss, const ConvexSet& set, const Vector& x);

// argmin_w f(a + Xi w) + h(w); exact for quadratic losses, inner
// proximal-gradient loop (gradient-map residual <= 1e-10) otherwise.
Vector general_block_update(const SmoothLoss& loss, const Matrix& Xi, const Penalty& penalty,
                            const Vector& a);

// Cyclic exact blockwise minimization of f(Xw) + sum_i h_i(w_i).
RegressionResult general_cd(const SmoothLoss& loss, const RegressionProblem& problem,
                            const StopRule& stop, Vector w0 = Vector(),
                            SnapshotMode snapshots = SnapshotMode::automatic);

// Corrected cyclic scheme under the divergence induced by the loss; reduces
// to the Euclidean iterations exactly for quadratic losses.
ApproxResult general_dykstra(const SmoothLoss& loss, const std::vector<ConvexSet>& sets,
                             const StopRule& stop, const ProjectionObserver& observer = {});

// Lockstep run of the two schemes above; largest deviation between paired
// iterates (dual increments vs fitted blocks, primal points vs -grad f of the
// running fit).
double general_equivalence_check(const SmoothLoss& loss, const RegressionProblem& problem,
                                 const StopRule& stop);

// Product-space parallel sweep with uniform weights 1/d.
RegressionResult parallel_dykstra_cd_general(const SmoothLoss& loss,
                                             const RegressionProblem& problem,
                                             const StopRule& stop, unsigned threads = 1,
                                             SnapshotMode snapshots = SnapshotMode::automatic);

// Two-block splitting: consensus update solved coordinatewise by bisection,
// block updates under a quadratic model.
RegressionResult parallel_admm_cd_general(const SmoothLoss& loss,
                                          const RegressionProblem& problem, double rho,
                                          const StopRule& stop, unsigned threads = 1,
                                          SnapshotMode snapshots = SnapshotMode::automatic);

// Coordinatewise consensus fixed point u = -f_i'(rho (u - u_prev) - c),
// solved by bisection to residual <= 1e-12 (closed form for quadratic).
double consensus_update_coordinate(const SmoothLoss& loss, Eigen::Index i, double rho,
                                   double u_prev, double c);

}  // namespace dykcd
