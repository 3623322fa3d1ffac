#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dykcd/numerics.hpp"

namespace dykcd {

// Separable penalty h(v) = max_{d in D} <d, v> for a closed convex set D
// containing 0.  Each variant is identified with its dual set:
//   L1      <-> box [-lambda, lambda]^p        h(v) = lambda ||v||_1
//   GroupL2 <-> l2 ball of radius lambda       h(v) = lambda ||v||_2
//   LInf    <-> lambda-scaled cross-polytope   h(v) = lambda ||v||_inf
//   Zero    <-> {0}                            h(v) = 0
class Penalty {
 public:
  enum class Kind { zero, l1, group_l2, linf };

  static Penalty zero() { return Penalty(Kind::zero, 0.0); }
  static Penalty l1(double lambda) { return Penalty(Kind::l1, lambda); }
  static Penalty group_l2(double lambda) { return Penalty(Kind::group_l2, lambda); }
  static Penalty linf(double lambda) { return Penalty(Kind::linf, lambda); }

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }

  // h(v).
  double value(const Vector& v) const;
  // Norm whose lambda-ball is the dual set D (inf for L1, 2 for GroupL2,
  // 1 for LInf).  Zero penalty has no finite gauge; returns ||g||_inf so that
  // membership in {0} reads dual_norm(g) <= 0.
  double dual_norm(const Vector& g) const;
  bool dual_member(const Vector& d, double tol = 1e-10) const;

  std::string name() const;

 private:
  Penalty(Kind k, double lambda);
  Kind kind_;
  double lambda_;
};

double support_value(const Penalty& penalty, const Vector& v);

class ConvexSet;

// {v : normal . v <= offset}, normal nonzero.
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

struct SlabData {
  Vector normal;
  double halfwidth = 0.0;  // {v : |normal . v| <= halfwidth}
};

struct BoxData {
  Vector lower, upper;
};

struct BallData {
  Vector center;
  double radius = 0.0;
};

struct AffineData {
  Matrix basis;   // columns span the direction space (may be empty -> a point)
  Vector offset;
  Matrix onb;     // cached orthonormal basis of col(basis)
};

struct InverseImageData {
  Matrix map;       // X_i, full column rank
  Penalty penalty;  // inner set is the penalty's dual set D_i
};

struct ProductData {
  std::vector<ConvexSet> parts;
};

struct ConsensusData {
  Eigen::Index copies = 0;
  Eigen::Index block_len = 0;  // ambient dim = copies * block_len
};

// Immutable tagged convex set with an exact or iterative Euclidean projection.
class ConvexSet {
 public:
  enum class Kind { halfspace, slab, box, l2_ball, affine, inverse_image, product, consensus };

  static ConvexSet halfspace(Vector normal, double offset);
  static ConvexSet slab(Vector normal, double halfwidth);
  static ConvexSet box(Vector lower, Vector upper);
  static ConvexSet l2_ball(Vector center, double radius);
  static ConvexSet affine_subspace(Matrix basis, Vector offset);
  static ConvexSet inverse_image(Matrix map, Penalty penalty);
  static ConvexSet product(std::vector<ConvexSet> parts);
  static ConvexSet consensus(Eigen::Index copies, Eigen::Index block_len);

  Kind kind() const;
  Eigen::Index dim() const;

  Vector project(const Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-10) const;
  double distance(const Vector& x) const;

  const Halfspace* as_halfspace() const;
  const SlabData* as_slab() const;
  const BoxData* as_box() const;
  const BallData* as_ball() const;
  const AffineData* as_affine() const;
  const InverseImageData* as_inverse_image() const;
  const ProductData* as_product() const;
  const ConsensusData* as_consensus() const;

 private:
  struct Impl;
  explicit ConvexSet(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

Vector project(const ConvexSet& set, const Vector& x);

struct Block {
  Matrix X;         // n x p_i, full column rank
  Penalty penalty;  // h_i over R^{p_i}
};

// Response y plus predictor blocks with separable support-function penalties.
class RegressionProblem {
 public:
  RegressionProblem(Vector y, std::vector<Block> blocks);

  const Vector& y() const { return y_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  Eigen::Index n() const { return y_.size(); }
  Eigen::Index p() const { return p_; }
  Eigen::Index d() const { return static_cast<Eigen::Index>(blocks_.size()); }
  Eigen::Index block_offset(Eigen::Index i) const { return offsets_[static_cast<size_t>(i)]; }
  Eigen::Index block_width(Eigen::Index i) const { return blocks_[static_cast<size_t>(i)].X.cols(); }

  // Assembled n x p design (column concatenation of the blocks).
  Matrix design() const;
  // X w for a full coefficient vector.
  Vector fit(const Vector& w) const;

 private:
  Vector y_;
  std::vector<Block> blocks_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index p_ = 0;
};

// Anchor point plus ordered closed convex sets, all in the same ambient dim.
struct ApproxProblem {
  Vector anchor;
  std::vector<ConvexSet> sets;
};

ApproxProblem make_approx_problem(Vector anchor, std::vector<ConvexSet> sets);

// argmin_w 1/2 ||b - X_i w||^2 + h(w).  Closed form for single-column L1
// (soft threshold) and for GroupL2 (scalar dual root-find); otherwise an
// inner proximal-gradient loop to duality gap <= 1e-12.
Vector block_update(const Matrix& Xi, const Penalty& penalty, const Vector& b);

// b - P_{C_i}(b) for C_i = (X_i^T)^{-1}(D_i); equals X_i * block_update.
Vector residual_map(const Matrix& Xi, const Penalty& penalty, const Vector& b);

// 1/2 ||y - X w||^2 + sum_i h_i(w_i).
double criterion(const RegressionProblem& problem, const Vector& w);

// Convenience builders.
RegressionProblem lasso_problem(const Matrix& X, const Vector& y, double lambda);
RegressionProblem grouped_problem(const Matrix& X, const Vector& y,
                                  const std::vector<Eigen::Index>& widths, double lambda);

// Dual best-approximation view: anchor y, sets C_i = (X_i^T)^{-1}(D_i).
ApproxProblem dual_approx_problem(const RegressionProblem& problem);

// The slabs {v : |X_i^T v| <= lambda} of a lasso instance, and their split
// into one-sided halfspace pairs (upper then lower per column).
std::vector<ConvexSet> lasso_slabs(const Matrix& X, double lambda);
std::vector<Halfspace> lasso_split_halfspaces(const Matrix& X, double lambda);

// Projection onto {v : ||v||_1 <= radius} (used by the LInf prox).
Vector project_l1_ball(const Vector& v, double radius);

}  // namespace dykcd
