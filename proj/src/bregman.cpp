#include "dykcd/bregman.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>

namespace dykcd {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ns_since(const Clock::time_point& t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

Eigen::Index support_size(const Vector& w, double tol = 1e-9) {
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (std::abs(w(i)) > tol) ++c;
  return c;
}

constexpr double kClampEps = 1e-12;

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double log1pexp(double t) {
  if (t > 0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

// s log s + (1-s) log(1-s), with 0 log 0 = 0; s must be in [0, 1].
double neg_entropy(double s) {
  if (s < -1e-9 || s > 1.0 + 1e-9) throw DomainError("logistic: point outside [0,1] domain");
  s = std::min(1.0, std::max(0.0, s));
  double v = 0.0;
  if (s > 0) v += s * std::log(s);
  if (s < 1) v += (1.0 - s) * std::log(1.0 - s);
  return v;
}

double logit_clamped(double s, bool* clamped) {
  if (s < kClampEps) {
    if (clamped) *clamped = true;
    s = kClampEps;
  } else if (s > 1.0 - kClampEps) {
    if (clamped) *clamped = true;
    s = 1.0 - kClampEps;
  }
  return std::log(s / (1.0 - s));
}

}  // namespace

SmoothLoss SmoothLoss::quadratic(Vector y) {
  if (!y.allFinite()) throw ParameterError("SmoothLoss: response must be finite");
  return SmoothLoss(Kind::quadratic, std::move(y));
}

SmoothLoss SmoothLoss::logistic(Vector y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 0.0 && y(i) != 1.0)
      throw ParameterError("SmoothLoss: logistic labels must be 0 or 1");
  return SmoothLoss(Kind::logistic, std::move(y));
}

double SmoothLoss::value(const Vector& z) const {
  if (z.size() != y_.size()) throw ShapeError("SmoothLoss::value: dimension mismatch");
  if (kind_ == Kind::quadratic) return 0.5 * (y_ - z).squaredNorm();
  double v = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) v += -y_(i) * z(i) + log1pexp(z(i));
  return v;
}

Vector SmoothLoss::gradient(const Vector& z) const {
  if (z.size() != y_.size()) throw ShapeError("SmoothLoss::gradient: dimension mismatch");
  if (kind_ == Kind::quadratic) return z - y_;
  Vector g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) g(i) = sigmoid(z(i)) - y_(i);
  return g;
}

Vector SmoothLoss::conjugate_gradient(const Vector& v, bool* clamped) const {
  if (v.size() != y_.size()) throw ShapeError("SmoothLoss::conjugate_gradient: dimension mismatch");
  if (kind_ == Kind::quadratic) return y_ + v;
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = logit_clamped(v(i) + y_(i), clamped);
  return out;
}

double SmoothLoss::g_value(const Vector& v) const {
  if (v.size() != y_.size()) throw ShapeError("SmoothLoss::g_value: dimension mismatch");
  if (kind_ == Kind::quadratic) return -y_.dot(v) + 0.5 * v.squaredNorm();
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += neg_entropy(y_(i) - v(i));
  return s;
}

Vector SmoothLoss::g_gradient(const Vector& v, bool* clamped) const {
  if (v.size() != y_.size()) throw ShapeError("SmoothLoss::g_gradient: dimension mismatch");
  if (kind_ == Kind::quadratic) return v - y_;
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = -logit_clamped(y_(i) - v(i), clamped);
  return out;
}

Vector SmoothLoss::g_star_gradient(const Vector& x) const {
  if (x.size() != y_.size()) throw ShapeError("SmoothLoss::g_star_gradient: dimension mismatch");
  if (kind_ == Kind::quadratic) return y_ + x;
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = y_(i) - sigmoid(-x(i));
  return out;
}

Vector SmoothLoss::anchor() const {
  if (kind_ == Kind::quadratic) return y_;
  return y_.array() - 0.5;
}

double SmoothLoss::scalar_derivative(Eigen::Index i, double t) const {
  if (kind_ == Kind::quadratic) return t - y_(i);
  return sigmoid(t) - y_(i);
}

double bregman_divergence(const SmoothLoss& loss, const Vector& u, const Vector& b) {
  if (u.size() != b.size()) throw ShapeError("bregman_divergence: dimension mismatch");
  if (loss.kind() == SmoothLoss::Kind::logistic) {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double su = loss.y()(i) - u(i), sb = loss.y()(i) - b(i);
      if (su < -1e-9 || su > 1.0 + 1e-9 || sb <= 0.0 || sb >= 1.0)
        throw DomainError("bregman_divergence: point outside the divergence domain");
    }
  }
  return loss.g_value(u) - loss.g_value(b) - loss.g_gradient(b).dot(u - b);
}

// ---------------------------------------------------------------------------
// Bregman projections

namespace {

// Projection onto {c : a.c <= beta} under D_g: grad g(c) = grad g(x) - nu a
// for the smallest nu >= 0 putting c on the correct side; phi(nu) = a.c(nu)
// is strictly decreasing.
Vector bregman_project_halfspace(const SmoothLoss& loss, const Vector& a, double beta,
                                 const Vector& x) {
  if (a.dot(x) <= beta) return x;
  const Vector gx = loss.g_gradient(x);
  // c(nu) = (grad g)^{-1}(gx - nu a) = grad g*(gx - nu a)
  auto inv_point = [&](double nu) -> Vector { return loss.g_star_gradient(gx - nu * a); };
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (a.dot(inv_point(hi)) > beta && guard++ < 200) hi *= 2.0;
  if (a.dot(inv_point(hi)) > beta)
    throw ConvergenceError("bregman_project: halfspace bracket expansion failed",
                           a.dot(inv_point(hi)) - beta);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (a.dot(inv_point(mid)) > beta)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-16 * (1.0 + hi)) break;
  }
  Vector c = inv_point(0.5 * (lo + hi));
  return c;
}

}  // namespace

Vector bregman_project(const SmoothLoss& loss, const ConvexSet& set, const Vector& x) {
  if (x.size() != set.dim()) throw ShapeError("bregman_project: point dimension mismatch");
  if (loss.kind() == SmoothLoss::Kind::quadratic) return set.project(x);

  switch (set.kind()) {
    case ConvexSet::Kind::halfspace: {
      const auto* h = set.as_halfspace();
      return bregman_project_halfspace(loss, h->normal, h->offset, x);
    }
    case ConvexSet::Kind::slab: {
      const auto* s = set.as_slab();
      const double t = s->normal.dot(x);
      if (std::abs(t) <= s->halfwidth) return x;
      if (t > s->halfwidth) return bregman_project_halfspace(loss, s->normal, s->halfwidth, x);
      return bregman_project_halfspace(loss, -s->normal, s->halfwidth, x);
    }
    case ConvexSet::Kind::box: {
      // separable generator: componentwise clamp
      const auto* b = set.as_box();
      return x.cwiseMax(b->lower).cwiseMin(b->upper);
    }
    case ConvexSet::Kind::consensus: {
      const auto* c = set.as_consensus();
      if (c->block_len != loss.n())
        throw ShapeError("bregman_project: consensus block length must match loss dimension");
      Vector mean = Vector::Zero(c->block_len);
      for (Eigen::Index i = 0; i < c->copies; ++i)
        mean += loss.g_gradient(x.segment(i * c->block_len, c->block_len));
      mean /= static_cast<double>(c->copies);
      const Vector blockval = loss.g_star_gradient(mean);
      Vector out(x.size());
      for (Eigen::Index i = 0; i < c->copies; ++i)
        out.segment(i * c->block_len, c->block_len) = blockval;
      return out;
    }
    case ConvexSet::Kind::affine: {
      // Damped Newton on the tangent coordinates; diagonal Hessian of g.
      const auto* aff = set.as_affine();
      if (aff->onb.cols() == 0) return aff->offset;
      const Matrix& V = aff->onb;
      const Vector gx = loss.g_gradient(x);
      Vector t = V.transpose() * (x - aff->offset);  // start at the Euclidean projection
      auto clamp_domain = [&](Vector c) {
        for (Eigen::Index i = 0; i < c.size(); ++i) {
          const double s = loss.y()(i) - c(i);
          if (s < kClampEps || s > 1.0 - kClampEps) return false;
        }
        return true;
      };
      Vector c = aff->offset + V * t;
      if (!clamp_domain(c))
        throw ConvergenceError("bregman_project: affine start outside domain", 0.0);
      double res = std::numeric_limits<double>::infinity();
      for (int it = 0; it < 200; ++it) {
        const Vector F = V.transpose() * (loss.g_gradient(c) - gx);
        res = F.lpNorm<Eigen::Infinity>();
        if (res <= 1e-12) break;
        Vector hess(c.size());
        for (Eigen::Index i = 0; i < c.size(); ++i) {
          const double s = loss.y()(i) - c(i);
          hess(i) = 1.0 / (s * (1.0 - s));  // d/dv (-logit(y - v))
        }
        const Matrix J = V.transpose() * hess.asDiagonal() * V;
        Vector dt = J.ldlt().solve(-F);
        double step = 1.0;
        Vector c_try = aff->offset + V * (t + step * dt);
        while ((!clamp_domain(c_try) ||
                (V.transpose() * (loss.g_gradient(c_try) - gx)).lpNorm<Eigen::Infinity>() > res) &&
               step > 1e-12) {
          step *= 0.5;
          c_try = aff->offset + V * (t + step * dt);
        }
        t += step * dt;
        c = aff->offset + V * t;
      }
      if (res > 1e-10)
        throw ConvergenceError("bregman_project: affine Newton did not converge", res);
      return c;
    }
    case ConvexSet::Kind::inverse_image: {
      const auto* ii = set.as_inverse_image();
      const Vector eta = loss.g_gradient(x);
      const Vector w = general_block_update(loss, ii->map, ii->penalty, -eta);
      return loss.g_star_gradient(eta - ii->map * w);
    }
    default:
      throw ParameterError("bregman_project: set kind unsupported for non-quadratic losses");
  }
}

// ---------------------------------------------------------------------------
// Generalized block update

Vector general_block_update(const SmoothLoss& loss, const Matrix& Xi, const Penalty& penalty,
                            const Vector& a) {
  if (Xi.rows() != a.size())
    throw ShapeError("general_block_update: row count must match offset length");
  if (loss.kind() == SmoothLoss::Kind::quadratic)
    return block_update(Xi, penalty, loss.y() - a);

  // proximal gradient on w -> f(a + Xi w) + h(w), fixed step 1/L with
  // L = lambda_max(Xi^T Xi) / 4 (logistic curvature bound)
  const Matrix G = Xi.transpose() * Xi;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmax <= 0 || es.eigenvalues().minCoeff() <= numerics::kRankTol * lmax)
    throw RankError("general_block_update: rank-deficient block");
  const double step = 4.0 / lmax;
  const double lam = penalty.lambda();

  auto prox = [&](Vector v, double t) -> Vector {
    switch (penalty.kind()) {
      case Penalty::Kind::zero:
        return v;
      case Penalty::Kind::l1:
        for (Eigen::Index i = 0; i < v.size(); ++i) {
          const double tv = lam * t;
          v(i) = v(i) > tv ? v(i) - tv : (v(i) < -tv ? v(i) + tv : 0.0);
        }
        return v;
      case Penalty::Kind::group_l2: {
        const double norm = v.norm();
        const double tv = lam * t;
        if (norm <= tv) return Vector::Zero(v.size());
        return (1.0 - tv / norm) * v;
      }
      case Penalty::Kind::linf:
        return v - project_l1_ball(v, lam * t);
    }
    return v;
  };

  Vector w = Vector::Zero(Xi.cols());
  double res = std::numeric_limits<double>::infinity();
  const int max_iter = 10000;
  for (int it = 0; it < max_iter; ++it) {
    const Vector grad = Xi.transpose() * loss.gradient(a + Xi * w);
    const Vector w_next = prox(w - step * grad, step);
    res = (w - w_next).lpNorm<Eigen::Infinity>() / step;
    w = w_next;
    if (res <= 1e-10) return w;
  }
  throw ConvergenceError("general_block_update: inner loop did not reach gradient-map tolerance",
                         res);
}

// ---------------------------------------------------------------------------
// Solvers

RegressionResult general_cd(const SmoothLoss& loss, const RegressionProblem& problem,
                            const StopRule& stop, Vector w0, SnapshotMode snapshots) {
  stop.validate();
  if (loss.n() != problem.n()) throw ShapeError("general_cd: loss dimension mismatch");
  const auto t0 = Clock::now();
  const Eigen::Index p = problem.p();
  if (w0.size() == 0) w0 = Vector::Zero(p);
  if (w0.size() != p) throw ShapeError("general_cd: w0 length mismatch");
  const bool snap = snapshots_enabled(snapshots, p);

  Vector w = std::move(w0);
  Vector fit = problem.fit(w);

  SolverTrace trace;
  trace.config["solver"] = "general_cd";
  trace.config["loss"] = loss.kind() == SmoothLoss::Kind::quadratic ? "quadratic" : "logistic";
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  trace.config["tol_change"] = format_real(stop.tol_change);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    double max_change = 0.0;
    for (Eigen::Index i = 0; i < problem.d(); ++i) {
      const auto& blk = problem.blocks()[static_cast<size_t>(i)];
      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      const Vector a = fit - blk.X * wi;
      const Vector wi_new = general_block_update(loss, blk.X, blk.penalty, a);
      max_change = std::max(max_change, (wi_new - wi).lpNorm<Eigen::Infinity>());
      fit = a + blk.X * wi_new;
      wi = wi_new;
      ++updates;
    }
    double crit = loss.value(fit);
    for (Eigen::Index i = 0; i < problem.d(); ++i)
      crit += problem.blocks()[static_cast<size_t>(i)].penalty.value(
          w.segment(problem.block_offset(i), problem.block_width(i)));
    trace.records.push_back(TraceRecord{k, crit, std::numeric_limits<double>::quiet_NaN(),
                                        support_size(w), updates, ns_since(t0),
                                        snap ? std::optional<Vector>(w) : std::nullopt,
                                        std::nullopt});
    if (max_change <= stop.tol_change ||
        (stop.target_criterion && crit <= *stop.target_criterion)) {
      trace.status = SolveStatus::converged;
      return RegressionResult{std::move(w), std::move(trace)};
    }
  }
  trace.status = SolveStatus::max_iter;
  return RegressionResult{std::move(w), std::move(trace)};
}

ApproxResult general_dykstra(const SmoothLoss& loss, const std::vector<ConvexSet>& sets,
                             const StopRule& stop, const ProjectionObserver& observer) {
  stop.validate();
  if (sets.empty()) throw ParameterError("general_dykstra: needs at least one set");
  const auto t0 = Clock::now();
  const Vector b = loss.anchor();
  for (const auto& s : sets)
    if (s.dim() != b.size()) throw ShapeError("general_dykstra: set dimension mismatch");

  Vector u = b;
  std::vector<Vector> z(sets.size(), Vector::Zero(b.size()));

  SolverTrace trace;
  trace.config["solver"] = "general_dykstra";
  trace.config["loss"] = loss.kind() == SmoothLoss::Kind::quadratic ? "quadratic" : "logistic";
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  trace.config["tol_change"] = format_real(stop.tol_change);
  std::int64_t updates = 0;

  long clamp_events = 0;
  for (int k = 1; k <= stop.max_sweeps; ++k) {
    const Vector u_before = u;
    for (size_t i = 0; i < sets.size(); ++i) {
      bool clamped = false;
      const Vector eta = loss.g_gradient(u, &clamped) + z[i];
      if (const auto* ii = sets[i].as_inverse_image()) {
        const Vector w = general_block_update(loss, ii->map, ii->penalty, -eta);
        z[i] = ii->map * w;
        u = loss.g_star_gradient(eta - z[i]);
      } else {
        const Vector x = loss.g_star_gradient(eta);
        u = bregman_project(loss, sets[i], x);
        z[i] = eta - loss.g_gradient(u, &clamped);
      }
      if (clamped) ++clamp_events;
      ++updates;
      if (observer) observer(k, static_cast<int>(i), u, z[i]);
    }
    if (clamp_events > 0) trace.config["domain_clamps"] = std::to_string(clamp_events);
    trace.records.push_back(TraceRecord{k, bregman_divergence(loss, u, b),
                                        std::numeric_limits<double>::quiet_NaN(), 0, updates,
                                        ns_since(t0), std::nullopt, u});
    if ((u - u_before).lpNorm<Eigen::Infinity>() <= stop.tol_change) {
      trace.status = SolveStatus::converged;
      return ApproxResult{std::move(u), std::move(trace)};
    }
  }
  trace.status = SolveStatus::max_iter;
  return ApproxResult{std::move(u), std::move(trace)};
}

double general_equivalence_check(const SmoothLoss& loss, const RegressionProblem& problem,
                                 const StopRule& stop) {
  stop.validate();
  if (loss.n() != problem.n())
    throw ShapeError("general_equivalence_check: loss dimension mismatch");
  const Vector b = loss.anchor();

  Vector u = b;
  std::vector<Vector> z(static_cast<size_t>(problem.d()), Vector::Zero(b.size()));
  Vector w = Vector::Zero(problem.p());
  Vector fit = Vector::Zero(problem.n());

  double deviation = 0.0;
  for (int k = 1; k <= stop.max_sweeps; ++k) {
    for (Eigen::Index i = 0; i < problem.d(); ++i) {
      const auto& blk = problem.blocks()[static_cast<size_t>(i)];
      auto& zi = z[static_cast<size_t>(i)];

      const Vector eta = loss.g_gradient(u) + zi;
      const Vector w_dyk = general_block_update(loss, blk.X, blk.penalty, -eta);
      zi = blk.X * w_dyk;
      u = loss.g_star_gradient(eta - zi);

      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      const Vector a = fit - blk.X * wi;
      const Vector wi_new = general_block_update(loss, blk.X, blk.penalty, a);
      fit = a + blk.X * wi_new;
      wi = wi_new;

      deviation = std::max(deviation, (zi - blk.X * wi).lpNorm<Eigen::Infinity>());
      deviation = std::max(deviation, (u + loss.gradient(fit)).lpNorm<Eigen::Infinity>());
    }
  }
  return deviation;
}

RegressionResult parallel_dykstra_cd_general(const SmoothLoss& loss,
                                             const RegressionProblem& problem,
                                             const StopRule& stop, unsigned threads,
                                             SnapshotMode snapshots) {
  stop.validate();
  if (loss.n() != problem.n())
    throw ShapeError("parallel_dykstra_cd_general: loss dimension mismatch");
  const auto t0 = Clock::now();
  const Eigen::Index d = problem.d();
  const Eigen::Index p = problem.p();
  const double dd = static_cast<double>(d);
  const bool snap = snapshots_enabled(snapshots, p);

  Vector w = Vector::Zero(p), w_new = Vector::Zero(p);
  Vector fit = Vector::Zero(problem.n());

  SolverTrace trace;
  trace.config["solver"] = "parallel_dykstra_cd_general";
  trace.config["loss"] = loss.kind() == SmoothLoss::Kind::quadratic ? "quadratic" : "logistic";
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  trace.config["tol_change"] = format_real(stop.tol_change);
  trace.parallel_width = static_cast<int>(d);
  std::int64_t updates = 0;

  // scaled penalty h_i(d w_i) carried by solving in beta = d w_i
  std::vector<std::future<void>> pool;
  for (int k = 1; k <= stop.max_sweeps; ++k) {
    std::atomic<Eigen::Index> next{0};
    auto worker = [&](Eigen::Index i) {
      const auto& blk = problem.blocks()[static_cast<size_t>(i)];
      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      auto out = w_new.segment(problem.block_offset(i), problem.block_width(i));
      const Vector a = fit - dd * (blk.X * wi);
      out = general_block_update(loss, blk.X, blk.penalty, a) / dd;
    };
    if (threads <= 1 || d <= 1) {
      for (Eigen::Index i = 0; i < d; ++i) worker(i);
    } else {
      pool.clear();
      const unsigned nt = std::min<unsigned>(threads, static_cast<unsigned>(d));
      for (unsigned t = 0; t < nt; ++t)
        pool.push_back(std::async(std::launch::async, [&] {
          for (Eigen::Index i = next.fetch_add(1); i < d; i = next.fetch_add(1)) worker(i);
        }));
      for (auto& f : pool) f.get();
    }
    updates += d;
    const double max_change = (w_new - w).lpNorm<Eigen::Infinity>();
    w = w_new;
    fit.setZero();
    for (Eigen::Index i = 0; i < d; ++i) {
      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      if (!wi.isZero(0.0)) fit += problem.blocks()[static_cast<size_t>(i)].X * wi;
    }
    double crit = loss.value(fit);
    for (Eigen::Index i = 0; i < d; ++i)
      crit += problem.blocks()[static_cast<size_t>(i)].penalty.value(
          w.segment(problem.block_offset(i), problem.block_width(i)));
    trace.records.push_back(TraceRecord{k, crit, std::numeric_limits<double>::quiet_NaN(),
                                        support_size(w), updates, ns_since(t0),
                                        snap ? std::optional<Vector>(w) : std::nullopt,
                                        std::nullopt});
    if (max_change <= stop.tol_change ||
        (stop.target_criterion && crit <= *stop.target_criterion)) {
      trace.status = SolveStatus::converged;
      return RegressionResult{std::move(w), std::move(trace)};
    }
  }
  trace.status = SolveStatus::max_iter;
  return RegressionResult{std::move(w), std::move(trace)};
}

double consensus_update_coordinate(const SmoothLoss& loss, Eigen::Index i, double rho,
                                   double u_prev, double c) {
  if (!(rho > 0)) throw ParameterError("consensus_update_coordinate: rho must be positive");
  if (loss.kind() == SmoothLoss::Kind::quadratic)
    return (rho * u_prev + c + loss.y()(i)) / (1.0 + rho);
  auto phi = [&](double u) { return u + loss.scalar_derivative(i, rho * (u - u_prev) - c); };
  double lo = u_prev - 1.0, hi = u_prev + 1.0;
  int guard = 0;
  double width = 1.0;
  while (phi(lo) > 0 && guard++ < 200) {
    width *= 2.0;
    lo = u_prev - width;
  }
  if (phi(lo) > 0)
    throw ConvergenceError("consensus_update_coordinate: bracket expansion failed", phi(lo));
  guard = 0;
  width = 1.0;
  while (phi(hi) < 0 && guard++ < 200) {
    width *= 2.0;
    hi = u_prev + width;
  }
  if (phi(hi) < 0)
    throw ConvergenceError("consensus_update_coordinate: bracket expansion failed", phi(hi));
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double val = phi(mid);
    if (std::abs(val) <= 1e-13) break;
    if (val < 0)
      lo = mid;
    else
      hi = mid;
  }
  const double res = std::abs(phi(mid));
  if (res > 1e-12)
    throw ConvergenceError("consensus_update_coordinate: residual above tolerance", res);
  return mid;
}

RegressionResult parallel_admm_cd_general(const SmoothLoss& loss,
                                          const RegressionProblem& problem, double rho,
                                          const StopRule& stop, unsigned threads,
                                          SnapshotMode snapshots) {
  stop.validate();
  if (!(rho > 0)) throw ParameterError("parallel_admm_cd_general: rho must be positive");
  if (loss.n() != problem.n())
    throw ShapeError("parallel_admm_cd_general: loss dimension mismatch");
  const auto t0 = Clock::now();
  const Eigen::Index d = problem.d();
  const Eigen::Index p = problem.p();
  const Eigen::Index n = problem.n();
  const bool snap = snapshots_enabled(snapshots, p);

  Vector w = Vector::Zero(p), w_new = Vector::Zero(p);
  Vector u0 = Vector::Zero(n);
  Vector fit = Vector::Zero(n);       // X w^{k-1}
  Vector fit_prev = Vector::Zero(n);  // X w^{k-2}

  SolverTrace trace;
  trace.config["solver"] = "parallel_admm_cd_general";
  trace.config["loss"] = loss.kind() == SmoothLoss::Kind::quadratic ? "quadratic" : "logistic";
  trace.config["rho"] = format_real(rho);
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  trace.config["tol_change"] = format_real(stop.tol_change);
  trace.parallel_width = static_cast<int>(d);
  std::int64_t updates = 0;

  std::vector<std::future<void>> pool;
  for (int k = 1; k <= stop.max_sweeps; ++k) {
    const Vector c2 = fit_prev - 2.0 * fit;  // X(w^{k-2} - 2 w^{k-1})
    for (Eigen::Index j = 0; j < n; ++j)
      u0(j) = consensus_update_coordinate(loss, j, rho, u0(j), c2(j));
    std::atomic<Eigen::Index> next{0};
    auto worker = [&](Eigen::Index i) {
      const auto& blk = problem.blocks()[static_cast<size_t>(i)];
      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      auto out = w_new.segment(problem.block_offset(i), problem.block_width(i));
      const Vector b = u0 + blk.X * wi;
      out = block_update(blk.X, blk.penalty, b);
    };
    if (threads <= 1 || d <= 1) {
      for (Eigen::Index i = 0; i < d; ++i) worker(i);
    } else {
      pool.clear();
      const unsigned nt = std::min<unsigned>(threads, static_cast<unsigned>(d));
      for (unsigned t = 0; t < nt; ++t)
        pool.push_back(std::async(std::launch::async, [&] {
          for (Eigen::Index i = next.fetch_add(1); i < d; i = next.fetch_add(1)) worker(i);
        }));
      for (auto& f : pool) f.get();
    }
    updates += d;
    const double max_change = (w_new - w).lpNorm<Eigen::Infinity>();
    w = w_new;
    fit_prev = fit;
    fit.setZero();
    for (Eigen::Index i = 0; i < d; ++i) {
      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      if (!wi.isZero(0.0)) fit += problem.blocks()[static_cast<size_t>(i)].X * wi;
    }
    double crit = loss.value(fit);
    for (Eigen::Index i = 0; i < d; ++i)
      crit += problem.blocks()[static_cast<size_t>(i)].penalty.value(
          w.segment(problem.block_offset(i), problem.block_width(i)));
    trace.records.push_back(TraceRecord{k, crit, std::numeric_limits<double>::quiet_NaN(),
                                        support_size(w), updates, ns_since(t0),
                                        snap ? std::optional<Vector>(w) : std::nullopt,
                                        std::nullopt});
    if (max_change <= stop.tol_change ||
        (stop.target_criterion && crit <= *stop.target_criterion)) {
      trace.status = SolveStatus::converged;
      return RegressionResult{std::move(w), std::move(trace)};
    }
  }
  trace.status = SolveStatus::max_iter;
  return RegressionResult{std::move(w), std::move(trace)};
}

}  // namespace dykcd
