#include "dykcd/serial.hpp"

#include <chrono>
#include <cmath>

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

void echo_stop(SolverTrace& trace, const StopRule& stop) {
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  trace.config["tol_change"] = format_real(stop.tol_change);
  if (stop.tol_gap) trace.config["tol_gap"] = format_real(*stop.tol_gap);
}

}  // namespace

ApproxResult dykstra(const ApproxProblem& problem, const StopRule& stop,
                     const ProjectionObserver& observer, const CyclicInit& init) {
  stop.validate();
  const auto t0 = Clock::now();
  const Eigen::Index d = static_cast<Eigen::Index>(problem.sets.size());
  Vector u = init.u.value_or(problem.anchor);
  std::vector<Vector> z =
      init.z.value_or(std::vector<Vector>(static_cast<size_t>(d), Vector::Zero(u.size())));
  if (u.size() != problem.anchor.size() || z.size() != static_cast<size_t>(d))
    throw ShapeError("dykstra: initialization dimension mismatch");

  SolverTrace trace;
  trace.config["solver"] = "dykstra";
  echo_stop(trace, stop);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    const Vector u_before = u;
    for (Eigen::Index i = 0; i < d; ++i) {
      Vector v = u + z[static_cast<size_t>(i)];
      u = problem.sets[static_cast<size_t>(i)].project(v);
      z[static_cast<size_t>(i)] = v - u;
      ++updates;
      if (observer) observer(k, static_cast<int>(i), u, z[static_cast<size_t>(i)]);
    }
    trace.records.push_back(TraceRecord{k, (problem.anchor - u).squaredNorm(),
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

ApproxResult alternating_projections(const ApproxProblem& problem, const StopRule& stop,
                                     const ProjectionObserver& observer) {
  stop.validate();
  const auto t0 = Clock::now();
  Vector u = problem.anchor;
  const Vector zero = Vector::Zero(u.size());

  SolverTrace trace;
  trace.config["solver"] = "alternating_projections";
  echo_stop(trace, stop);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    const Vector u_before = u;
    for (size_t i = 0; i < problem.sets.size(); ++i) {
      u = problem.sets[i].project(u);
      ++updates;
      if (observer) observer(k, static_cast<int>(i), u, zero);
    }
    trace.records.push_back(TraceRecord{k, (problem.anchor - u).squaredNorm(),
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

HildrethResult hildreth(const std::vector<Halfspace>& halfspaces, const Vector& y,
                        const StopRule& stop, const ProjectionObserver& observer) {
  stop.validate();
  if (halfspaces.empty()) throw ParameterError("hildreth: needs at least one halfspace");
  const auto t0 = Clock::now();
  const size_t d = halfspaces.size();
  std::vector<double> sqnorm(d);
  for (size_t i = 0; i < d; ++i) {
    if (halfspaces[i].normal.size() != y.size())
      throw ShapeError("hildreth: halfspace dimension mismatch");
    sqnorm[i] = halfspaces[i].normal.squaredNorm();
    if (sqnorm[i] == 0.0) throw ParameterError("hildreth: zero normal");
  }

  Vector u = y;
  Vector mult = Vector::Zero(static_cast<Eigen::Index>(d));

  SolverTrace trace;
  trace.config["solver"] = "hildreth";
  echo_stop(trace, stop);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    const Vector u_before = u;
    for (size_t i = 0; i < d; ++i) {
      const auto& hs = halfspaces[i];
      const double li = mult(static_cast<Eigen::Index>(i));
      // v = u + li * a restricted to the quantities actually needed
      const double t = (hs.normal.dot(u) + li * sqnorm[i] - hs.offset) / sqnorm[i];
      const double c = std::max(0.0, t);
      u += (li - c) * hs.normal;
      mult(static_cast<Eigen::Index>(i)) = c;
      ++updates;
      if (observer) observer(k, static_cast<int>(i), u, c * hs.normal);
    }
    trace.records.push_back(TraceRecord{k, (y - u).squaredNorm(),
                                        std::numeric_limits<double>::quiet_NaN(), 0, updates,
                                        ns_since(t0), std::nullopt, u});
    if ((u - u_before).lpNorm<Eigen::Infinity>() <= stop.tol_change) {
      trace.status = SolveStatus::converged;
      return HildrethResult{std::move(u), std::move(mult), std::move(trace)};
    }
  }
  trace.status = SolveStatus::max_iter;
  return HildrethResult{std::move(u), std::move(mult), std::move(trace)};
}

RegressionResult block_cd(const RegressionProblem& problem, const StopRule& stop, Vector w0,
                          SnapshotMode snapshots) {
  stop.validate();
  const auto t0 = Clock::now();
  const Eigen::Index p = problem.p();
  if (w0.size() == 0) w0 = Vector::Zero(p);
  if (w0.size() != p) throw ShapeError("block_cd: w0 length mismatch");
  const bool snap = snapshots_enabled(snapshots, p);

  Vector w = std::move(w0);
  Vector r = problem.y() - problem.fit(w);

  SolverTrace trace;
  trace.config["solver"] = "block_cd";
  echo_stop(trace, stop);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    double max_change = 0.0;
    for (Eigen::Index i = 0; i < problem.d(); ++i) {
      const auto& blk = problem.blocks()[static_cast<size_t>(i)];
      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      const Vector b = r + blk.X * wi;
      const Vector wi_new = block_update(blk.X, blk.penalty, b);
      max_change = std::max(max_change, (wi_new - wi).lpNorm<Eigen::Infinity>());
      r += blk.X * (wi - wi_new);
      wi = wi_new;
      ++updates;
    }
    double crit = 0.5 * r.squaredNorm();
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

RegressionResult lasso_cd(const Matrix& X, const Vector& y, double lambda, const StopRule& stop,
                          SnapshotMode snapshots) {
  stop.validate();
  if (X.rows() != y.size()) throw ShapeError("lasso_cd: row count must match response length");
  if (lambda < 0) throw ParameterError("lasso_cd: lambda must be nonnegative");
  const auto t0 = Clock::now();
  const Eigen::Index p = X.cols();
  Vector colsq(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    colsq(j) = X.col(j).squaredNorm();
    if (colsq(j) == 0.0) throw RankError("lasso_cd: zero column");
  }
  const bool snap = snapshots_enabled(snapshots, p);

  Vector w = Vector::Zero(p);
  Vector r = y;

  SolverTrace trace;
  trace.config["solver"] = "lasso_cd";
  trace.config["lambda"] = format_real(lambda);
  echo_stop(trace, stop);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double u = X.col(j).dot(r) + colsq(j) * w(j);
      double wj = 0.0;
      if (u > lambda)
        wj = (u - lambda) / colsq(j);
      else if (u < -lambda)
        wj = (u + lambda) / colsq(j);
      const double delta = wj - w(j);
      if (delta != 0.0) {
        r -= delta * X.col(j);
        w(j) = wj;
      }
      max_change = std::max(max_change, std::abs(delta));
      ++updates;
    }
    const double crit = 0.5 * r.squaredNorm() + lambda * w.lpNorm<1>();
    trace.records.push_back(TraceRecord{k, crit, std::numeric_limits<double>::quiet_NaN(),
                                        support_size(w), updates, ns_since(t0),
                                        snap ? std::optional<Vector>(w) : std::nullopt,
                                        std::nullopt});
    bool gap_met = false;
    if (stop.tol_gap && (k % 4 == 0 || max_change <= stop.tol_change)) {
      const double dn = (X.transpose() * r).lpNorm<Eigen::Infinity>();
      const double c = (dn > lambda && dn > 0) ? lambda / dn : 1.0;
      const Vector u = c * r;
      gap_met = crit - (u.dot(y) - 0.5 * u.squaredNorm()) <= *stop.tol_gap;
    }
    if (max_change <= stop.tol_change || gap_met ||
        (stop.target_criterion && crit <= *stop.target_criterion)) {
      trace.status = SolveStatus::converged;
      return RegressionResult{std::move(w), std::move(trace)};
    }
  }
  trace.status = SolveStatus::max_iter;
  return RegressionResult{std::move(w), std::move(trace)};
}

double equivalence_check(const RegressionProblem& problem, const StopRule& stop) {
  stop.validate();
  const Eigen::Index d = problem.d();

  // corrected cyclic projection state on the dual problem
  Vector u = problem.y();
  std::vector<Vector> z(static_cast<size_t>(d), Vector::Zero(u.size()));
  // blockwise-minimization state
  Vector w = Vector::Zero(problem.p());
  Vector r = problem.y();

  double deviation = 0.0;
  for (int k = 1; k <= stop.max_sweeps; ++k) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto& blk = problem.blocks()[static_cast<size_t>(i)];
      auto& zi = z[static_cast<size_t>(i)];

      const Vector v = u + zi;
      const Vector w_dyk = block_update(blk.X, blk.penalty, v);
      u = v - blk.X * w_dyk;
      zi = v - u;

      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      const Vector b = r + blk.X * wi;
      const Vector wi_new = block_update(blk.X, blk.penalty, b);
      r += blk.X * (wi - wi_new);
      wi = wi_new;

      deviation = std::max(deviation, (zi - blk.X * wi).lpNorm<Eigen::Infinity>());
      deviation = std::max(deviation, (u - r).lpNorm<Eigen::Infinity>());
    }
  }
  return deviation;
}

}  // namespace dykcd
