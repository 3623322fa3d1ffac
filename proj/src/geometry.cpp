#include "dykcd/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>

namespace dykcd {

namespace {

double soft(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;  // ties at the kink map to exactly 0
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

// ---------------------------------------------------------------------------
// Penalty

Penalty::Penalty(Kind k, double lambda) : kind_(k), lambda_(lambda) {
  if (lambda < 0 || !std::isfinite(lambda))
    throw ParameterError("Penalty: lambda must be finite and nonnegative");
}

double Penalty::value(const Vector& v) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::l1: return lambda_ * v.lpNorm<1>();
    case Kind::group_l2: return lambda_ * v.norm();
    case Kind::linf: return v.size() == 0 ? 0.0 : lambda_ * v.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

double Penalty::dual_norm(const Vector& g) const {
  if (g.size() == 0) return 0.0;
  switch (kind_) {
    case Kind::zero: return g.lpNorm<Eigen::Infinity>();
    case Kind::l1: return g.lpNorm<Eigen::Infinity>();
    case Kind::group_l2: return g.norm();
    case Kind::linf: return g.lpNorm<1>();
  }
  return 0.0;
}

bool Penalty::dual_member(const Vector& d, double tol) const {
  if (kind_ == Kind::zero) return dual_norm(d) <= tol;
  return dual_norm(d) <= lambda_ + tol;
}

std::string Penalty::name() const {
  switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::l1: return "l1";
    case Kind::group_l2: return "group_l2";
    case Kind::linf: return "linf";
  }
  return "?";
}

double support_value(const Penalty& penalty, const Vector& v) { return penalty.value(v); }

// ---------------------------------------------------------------------------
// ConvexSet

struct ConvexSet::Impl {
  std::variant<Halfspace, SlabData, BoxData, BallData, AffineData, InverseImageData,
               ProductData, ConsensusData>
      v;
};

ConvexSet ConvexSet::halfspace(Vector normal, double offset) {
  if (normal.size() == 0 || normal.norm() == 0.0)
    throw ParameterError("halfspace: normal must be nonzero");
  auto impl = std::make_shared<Impl>();
  impl->v = Halfspace{std::move(normal), offset};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::slab(Vector normal, double halfwidth) {
  if (normal.size() == 0 || normal.norm() == 0.0)
    throw ParameterError("slab: normal must be nonzero");
  if (halfwidth < 0) throw ParameterError("slab: halfwidth must be nonnegative");
  auto impl = std::make_shared<Impl>();
  impl->v = SlabData{std::move(normal), halfwidth};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) throw ShapeError("box: bound lengths differ");
  if (((upper - lower).array() < 0).any())
    throw ParameterError("box: lower must not exceed upper");
  auto impl = std::make_shared<Impl>();
  impl->v = BoxData{std::move(lower), std::move(upper)};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::l2_ball(Vector center, double radius) {
  if (radius < 0) throw ParameterError("l2_ball: radius must be nonnegative");
  auto impl = std::make_shared<Impl>();
  impl->v = BallData{std::move(center), radius};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::affine_subspace(Matrix basis, Vector offset) {
  if (basis.cols() > 0 && basis.rows() != offset.size())
    throw ShapeError("affine_subspace: basis rows must match offset length");
  AffineData data{std::move(basis), std::move(offset), Matrix()};
  if (data.basis.cols() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(data.basis);
    const Eigen::Index r = qr.rank();
    if (r > 0)
      data.onb = qr.householderQ() * Matrix::Identity(data.basis.rows(), r);
  }
  auto impl = std::make_shared<Impl>();
  impl->v = std::move(data);
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::inverse_image(Matrix map, Penalty penalty) {
  if (map.cols() == 0) throw ShapeError("inverse_image: map must have columns");
  if (!numerics::has_full_column_rank(map))
    throw RankError("inverse_image: map must have full column rank");
  auto impl = std::make_shared<Impl>();
  impl->v = InverseImageData{std::move(map), penalty};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::product(std::vector<ConvexSet> parts) {
  if (parts.empty()) throw ParameterError("product: needs at least one factor");
  auto impl = std::make_shared<Impl>();
  impl->v = ProductData{std::move(parts)};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::consensus(Eigen::Index copies, Eigen::Index block_len) {
  if (copies < 1 || block_len < 1)
    throw ParameterError("consensus: copies and block length must be positive");
  auto impl = std::make_shared<Impl>();
  impl->v = ConsensusData{copies, block_len};
  return ConvexSet(std::move(impl));
}

ConvexSet::Kind ConvexSet::kind() const {
  struct V {
    Kind operator()(const Halfspace&) const { return Kind::halfspace; }
    Kind operator()(const SlabData&) const { return Kind::slab; }
    Kind operator()(const BoxData&) const { return Kind::box; }
    Kind operator()(const BallData&) const { return Kind::l2_ball; }
    Kind operator()(const AffineData&) const { return Kind::affine; }
    Kind operator()(const InverseImageData&) const { return Kind::inverse_image; }
    Kind operator()(const ProductData&) const { return Kind::product; }
    Kind operator()(const ConsensusData&) const { return Kind::consensus; }
  };
  return std::visit(V{}, impl_->v);
}

Eigen::Index ConvexSet::dim() const {
  struct V {
    Eigen::Index operator()(const Halfspace& h) const { return h.normal.size(); }
    Eigen::Index operator()(const SlabData& s) const { return s.normal.size(); }
    Eigen::Index operator()(const BoxData& b) const { return b.lower.size(); }
    Eigen::Index operator()(const BallData& b) const { return b.center.size(); }
    Eigen::Index operator()(const AffineData& a) const { return a.offset.size(); }
    Eigen::Index operator()(const InverseImageData& i) const { return i.map.rows(); }
    Eigen::Index operator()(const ProductData& p) const {
      Eigen::Index d = 0;
      for (const auto& s : p.parts) d += s.dim();
      return d;
    }
    Eigen::Index operator()(const ConsensusData& c) const { return c.copies * c.block_len; }
  };
  return std::visit(V{}, impl_->v);
}

const Halfspace* ConvexSet::as_halfspace() const { return std::get_if<Halfspace>(&impl_->v); }
const SlabData* ConvexSet::as_slab() const { return std::get_if<SlabData>(&impl_->v); }
const BoxData* ConvexSet::as_box() const { return std::get_if<BoxData>(&impl_->v); }
const BallData* ConvexSet::as_ball() const { return std::get_if<BallData>(&impl_->v); }
const AffineData* ConvexSet::as_affine() const { return std::get_if<AffineData>(&impl_->v); }
const InverseImageData* ConvexSet::as_inverse_image() const {
  return std::get_if<InverseImageData>(&impl_->v);
}
const ProductData* ConvexSet::as_product() const { return std::get_if<ProductData>(&impl_->v); }
const ConsensusData* ConvexSet::as_consensus() const {
  return std::get_if<ConsensusData>(&impl_->v);
}

Vector ConvexSet::project(const Vector& x) const {
  if (x.size() != dim()) throw ShapeError("project: point dimension mismatch");
  struct V {
    const Vector& x;
    Vector operator()(const Halfspace& h) const {
      const double t = h.normal.dot(x) - h.offset;
      if (t <= 0) return x;
      return x - (t / h.normal.squaredNorm()) * h.normal;
    }
    Vector operator()(const SlabData& s) const {
      const double t = s.normal.dot(x);
      const double n2 = s.normal.squaredNorm();
      if (t > s.halfwidth) return x - ((t - s.halfwidth) / n2) * s.normal;
      if (t < -s.halfwidth) return x - ((t + s.halfwidth) / n2) * s.normal;
      return x;
    }
    Vector operator()(const BoxData& b) const {
      return x.cwiseMax(b.lower).cwiseMin(b.upper);
    }
    Vector operator()(const BallData& b) const {
      Vector diff = x - b.center;
      const double norm = diff.norm();
      if (norm <= b.radius) return x;
      if (norm == 0.0) return b.center;
      return b.center + (b.radius / norm) * diff;
    }
    Vector operator()(const AffineData& a) const {
      if (a.onb.cols() == 0) return a.offset;
      Vector diff = x - a.offset;
      return a.offset + a.onb * (a.onb.transpose() * diff);
    }
    Vector operator()(const InverseImageData& ii) const {
      return x - ii.map * block_update(ii.map, ii.penalty, x);
    }
    Vector operator()(const ProductData& p) const {
      Vector out(x.size());
      Eigen::Index at = 0;
      for (const auto& s : p.parts) {
        const Eigen::Index d = s.dim();
        out.segment(at, d) = s.project(x.segment(at, d));
        at += d;
      }
      return out;
    }
    Vector operator()(const ConsensusData& c) const {
      Vector mean = Vector::Zero(c.block_len);
      for (Eigen::Index i = 0; i < c.copies; ++i) mean += x.segment(i * c.block_len, c.block_len);
      mean /= static_cast<double>(c.copies);
      Vector out(x.size());
      for (Eigen::Index i = 0; i < c.copies; ++i) out.segment(i * c.block_len, c.block_len) = mean;
      return out;
    }
  };
  return std::visit(V{x}, impl_->v);
}

double ConvexSet::distance(const Vector& x) const { return (x - project(x)).norm(); }

bool ConvexSet::contains(const Vector& x, double tol) const { return distance(x) <= tol; }

Vector project(const ConvexSet& set, const Vector& x) { return set.project(x); }

// ---------------------------------------------------------------------------
// l1-ball projection (sort-based)

Vector project_l1_ball(const Vector& v, double radius) {
  if (radius < 0) throw ParameterError("project_l1_ball: radius must be nonnegative");
  if (v.lpNorm<1>() <= radius) return v;
  const Eigen::Index n = v.size();
  std::vector<double> mags(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<size_t>(i)] = std::abs(v(i));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumsum += mags[static_cast<size_t>(k)];
    const double cand = (cumsum - radius) / static_cast<double>(k + 1);
    if (k + 1 == n || mags[static_cast<size_t>(k + 1)] <= cand) {
      theta = cand;
      break;
    }
  }
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = soft(v(i), theta);
  return out;
}

// ---------------------------------------------------------------------------
// block_update and friends

namespace {

// GroupL2: nonzero case reduces to the scalar equation nu * ||(G + nu I)^{-1} g|| = lambda
// on the dual variable nu = lambda / ||w||, solved by bisection on the
// eigen-decomposition of G.
Vector group_l2_update(const Matrix& Xi, double lambda, const Vector& b) {
  const Matrix G = Xi.transpose() * Xi;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  const Vector evals = es.eigenvalues();
  if (evals(evals.size() - 1) <= 0 ||
      evals(0) <= numerics::kRankTol * evals(evals.size() - 1))
    throw RankError("block_update: rank-deficient block");
  const Vector g = Xi.transpose() * b;
  if (g.norm() <= lambda) return Vector::Zero(Xi.cols());
  const Vector ghat = es.eigenvectors().transpose() * g;

  auto scaled_norm = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < ghat.size(); ++j) {
      const double t = nu * ghat(j) / (evals(j) + nu);
      s += t * t;
    }
    return std::sqrt(s);
  };

  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (scaled_norm(hi) < lambda && guard++ < 200) hi *= 2.0;
  if (scaled_norm(hi) < lambda)
    throw ConvergenceError("block_update: group bracket expansion failed",
                           scaled_norm(hi) - lambda);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (scaled_norm(mid) < lambda)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-16 * (1.0 + hi)) break;
  }
  const double nu = 0.5 * (lo + hi);
  Vector w(ghat.size());
  for (Eigen::Index j = 0; j < ghat.size(); ++j) w(j) = ghat(j) / (evals(j) + nu);
  return es.eigenvectors() * w;
}

void require_full_rank_block(const Matrix& Xi) {
  const Matrix G = Xi.transpose() * Xi;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  const Vector evals = es.eigenvalues();
  if (evals(evals.size() - 1) <= 0 ||
      evals(0) <= numerics::kRankTol * evals(evals.size() - 1))
    throw RankError("block_update: rank-deficient block");
}

// Certifies the returned minimizer; the inner solvers below run to machine
// stationarity, so this is a contract check, not a loop control.
void check_gap(const Matrix& Xi, const Penalty& penalty, const Vector& b, const Vector& w) {
  const Vector r = b - Xi * w;
  const double primal = 0.5 * r.squaredNorm() + penalty.value(w);
  const double lam = penalty.lambda();
  const Vector s = Xi.transpose() * r;
  const double dn = penalty.dual_norm(s);
  const double c = (dn > lam && dn > 0) ? lam / dn : 1.0;
  const Vector u = c * r;
  const double dual = u.dot(b) - 0.5 * u.squaredNorm();
  const double gap = primal - dual;
  if (gap > std::max(1e-12, 1e-15 * primal))
    throw ConvergenceError("block_update: duality gap above tolerance", gap);
}

// Cyclic exact soft-threshold minimization on the block; terminal accuracy is
// machine level because inactive coordinates zero out exactly.
Vector l1_block_cd(const Matrix& Xi, double lam, const Vector& b) {
  const Eigen::Index p = Xi.cols();
  Vector colsq(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    colsq(j) = Xi.col(j).squaredNorm();
    if (colsq(j) == 0.0) throw RankError("block_update: zero column");
  }
  Vector w = Vector::Zero(p);
  Vector r = b;
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double u = Xi.col(j).dot(r) + colsq(j) * w(j);
      const double wj = soft(u, lam) / colsq(j);
      const double delta = wj - w(j);
      if (delta != 0.0) {
        r -= delta * Xi.col(j);
        w(j) = wj;
      }
      max_change = std::max(max_change, std::abs(delta));
    }
    if (max_change <= 1e-15 * (1.0 + w.lpNorm<Eigen::Infinity>())) return w;
  }
  return w;  // gap check below rejects a bad exit
}

// max-norm penalty: parametrize by the magnitude cap m and bisect on the
// stationarity of m; each inner solve is a clipped Gauss-Seidel box QP.
Vector linf_block_update(const Matrix& Xi, double lam, const Vector& b) {
  const Eigen::Index p = Xi.cols();
  const Matrix G = Xi.transpose() * Xi;
  const Vector g = Xi.transpose() * b;
  if (g.lpNorm<1>() <= lam) return Vector::Zero(p);

  Vector w = Vector::Zero(p);
  auto box_qp = [&](double m) {
    for (int sweep = 0; sweep < 100000; ++sweep) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double grad_rest = G.row(j).dot(w) - G(j, j) * w(j) - g(j);
        double wj = -grad_rest / G(j, j);
        wj = std::min(m, std::max(-m, wj));
        max_change = std::max(max_change, std::abs(wj - w(j)));
        w(j) = wj;
      }
      if (max_change <= 1e-16 * (1.0 + m)) break;
    }
  };
  // lambda minus the total multiplier mass on the active faces; increasing in m
  auto slack = [&](double m) {
    box_qp(m);
    const Vector q = G * w - g;
    double mult = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
      if (std::abs(w(j)) >= m * (1.0 - 1e-12)) mult += std::abs(q(j));
    return lam - mult;
  };

  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (slack(hi) < 0 && guard++ < 200) hi *= 2.0;
  if (slack(hi) < 0)
    throw ConvergenceError("block_update: max-norm bracket expansion failed", slack(hi));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (slack(mid) < 0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-16 * (1.0 + hi)) break;
  }
  box_qp(0.5 * (lo + hi));
  return w;
}

}  // namespace

Vector block_update(const Matrix& Xi, const Penalty& penalty, const Vector& b) {
  if (Xi.rows() != b.size()) throw ShapeError("block_update: row count must match rhs length");
  if (Xi.cols() == 0) return Vector(0);
  if (penalty.kind() == Penalty::Kind::zero) return numerics::least_squares(Xi, b);
  if (Xi.cols() == 1) {
    // all shipped penalties coincide with lambda * |w| in one dimension
    const double xn2 = Xi.col(0).squaredNorm();
    if (xn2 == 0.0) throw RankError("block_update: zero column");
    Vector w(1);
    w(0) = soft(Xi.col(0).dot(b), penalty.lambda()) / xn2;
    return w;
  }
  Vector w;
  if (penalty.kind() == Penalty::Kind::group_l2) {
    w = group_l2_update(Xi, penalty.lambda(), b);
  } else {
    require_full_rank_block(Xi);
    w = penalty.kind() == Penalty::Kind::l1 ? l1_block_cd(Xi, penalty.lambda(), b)
                                            : linf_block_update(Xi, penalty.lambda(), b);
  }
  check_gap(Xi, penalty, b, w);
  return w;
}

Vector residual_map(const Matrix& Xi, const Penalty& penalty, const Vector& b) {
  return Xi * block_update(Xi, penalty, b);
}

// ---------------------------------------------------------------------------
// Problems

RegressionProblem::RegressionProblem(Vector y, std::vector<Block> blocks)
    : y_(std::move(y)), blocks_(std::move(blocks)) {
  if (!all_finite(y_)) throw ParameterError("RegressionProblem: response must be finite");
  if (blocks_.empty()) throw ParameterError("RegressionProblem: needs at least one block");
  offsets_.reserve(blocks_.size());
  for (const auto& blk : blocks_) {
    if (blk.X.rows() != y_.size())
      throw ShapeError("RegressionProblem: block row count must match response length");
    if (blk.X.cols() == 0) throw ShapeError("RegressionProblem: empty block");
    if (!blk.X.allFinite()) throw ParameterError("RegressionProblem: block entries must be finite");
    if (!numerics::has_full_column_rank(blk.X))
      throw RankError("RegressionProblem: block without full column rank");
    offsets_.push_back(p_);
    p_ += blk.X.cols();
  }
}

Matrix RegressionProblem::design() const {
  Matrix X(n(), p_);
  for (Eigen::Index i = 0; i < d(); ++i)
    X.middleCols(block_offset(i), block_width(i)) = blocks_[static_cast<size_t>(i)].X;
  return X;
}

Vector RegressionProblem::fit(const Vector& w) const {
  if (w.size() != p_) throw ShapeError("fit: coefficient length mismatch");
  Vector z = Vector::Zero(n());
  for (Eigen::Index i = 0; i < d(); ++i)
    z += blocks_[static_cast<size_t>(i)].X * w.segment(block_offset(i), block_width(i));
  return z;
}

ApproxProblem make_approx_problem(Vector anchor, std::vector<ConvexSet> sets) {
  if (sets.empty()) throw ParameterError("ApproxProblem: needs at least one set");
  for (const auto& s : sets)
    if (s.dim() != anchor.size())
      throw ShapeError("ApproxProblem: set dimension must match anchor length");
  return ApproxProblem{std::move(anchor), std::move(sets)};
}

double criterion(const RegressionProblem& problem, const Vector& w) {
  if (w.size() != problem.p()) throw ShapeError("criterion: coefficient length mismatch");
  const Vector r = problem.y() - problem.fit(w);
  double val = 0.5 * r.squaredNorm();
  for (Eigen::Index i = 0; i < problem.d(); ++i)
    val += problem.blocks()[static_cast<size_t>(i)].penalty.value(
        w.segment(problem.block_offset(i), problem.block_width(i)));
  return val;
}

RegressionProblem lasso_problem(const Matrix& X, const Vector& y, double lambda) {
  std::vector<Block> blocks;
  blocks.reserve(static_cast<size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    blocks.push_back(Block{X.col(j), Penalty::l1(lambda)});
  return RegressionProblem(y, std::move(blocks));
}

RegressionProblem grouped_problem(const Matrix& X, const Vector& y,
                                  const std::vector<Eigen::Index>& widths, double lambda) {
  std::vector<Block> blocks;
  blocks.reserve(widths.size());
  Eigen::Index at = 0;
  for (Eigen::Index wdt : widths) {
    if (at + wdt > X.cols()) throw ShapeError("grouped_problem: widths exceed column count");
    blocks.push_back(Block{X.middleCols(at, wdt), Penalty::group_l2(lambda)});
    at += wdt;
  }
  if (at != X.cols()) throw ShapeError("grouped_problem: widths must cover all columns");
  return RegressionProblem(y, std::move(blocks));
}

ApproxProblem dual_approx_problem(const RegressionProblem& problem) {
  std::vector<ConvexSet> sets;
  sets.reserve(static_cast<size_t>(problem.d()));
  for (const auto& blk : problem.blocks())
    sets.push_back(ConvexSet::inverse_image(blk.X, blk.penalty));
  return ApproxProblem{problem.y(), std::move(sets)};
}

std::vector<ConvexSet> lasso_slabs(const Matrix& X, double lambda) {
  std::vector<ConvexSet> sets;
  sets.reserve(static_cast<size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) sets.push_back(ConvexSet::slab(X.col(j), lambda));
  return sets;
}

std::vector<Halfspace> lasso_split_halfspaces(const Matrix& X, double lambda) {
  std::vector<Halfspace> hs;
  hs.reserve(2 * static_cast<size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    hs.push_back(Halfspace{X.col(j), lambda});    // X_j^T v <= lambda
    hs.push_back(Halfspace{-X.col(j), lambda});   // X_j^T v >= -lambda
  }
  return hs;
}

}  // namespace dykcd
