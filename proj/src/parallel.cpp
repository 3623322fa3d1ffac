#include "dykcd/parallel.hpp"

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

double soft(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;
}

// Dispatch fn(i) for i in [0, d), possibly across threads.  Each call writes
// only to its own slot, so partitioning never affects results.
void for_each_block(Eigen::Index d, unsigned threads,
                    const std::function<void(Eigen::Index)>& fn) {
  if (threads <= 1 || d <= 1) {
    for (Eigen::Index i = 0; i < d; ++i) fn(i);
    return;
  }
  const unsigned nt = std::min<unsigned>(threads, static_cast<unsigned>(d));
  std::atomic<Eigen::Index> next{0};
  std::vector<std::future<void>> futures;
  futures.reserve(nt);
  for (unsigned t = 0; t < nt; ++t)
    futures.push_back(std::async(std::launch::async, [&] {
      for (Eigen::Index i = next.fetch_add(1); i < d; i = next.fetch_add(1)) fn(i);
    }));
  for (auto& f : futures) f.get();
}

double block_penalty_sum(const RegressionProblem& problem, const Vector& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < problem.d(); ++i)
    s += problem.blocks()[static_cast<size_t>(i)].penalty.value(
        w.segment(problem.block_offset(i), problem.block_width(i)));
  return s;
}

// y - sum_i X_i w_i accumulated in ascending block order; zero blocks skipped.
Vector ordered_residual(const RegressionProblem& problem, const Vector& w) {
  Vector r = problem.y();
  for (Eigen::Index i = 0; i < problem.d(); ++i) {
    auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
    if (!wi.isZero(0.0)) r -= problem.blocks()[static_cast<size_t>(i)].X * wi;
  }
  return r;
}

}  // namespace

WeightVector::WeightVector(Vector gamma) : gamma_(std::move(gamma)) {
  if (gamma_.size() == 0) throw ParameterError("WeightVector: needs at least one weight");
  if ((gamma_.array() <= 0).any()) throw ParameterError("WeightVector: weights must be positive");
  if (std::abs(gamma_.sum() - 1.0) > 1e-12)
    throw ParameterError("WeightVector: weights must sum to 1");
}

WeightVector WeightVector::uniform(Eigen::Index d) {
  return WeightVector(Vector::Constant(d, 1.0 / static_cast<double>(d)));
}

AdmmParams AdmmParams::uniform_blocks(Eigen::Index d, double total) {
  AdmmParams p;
  p.rho_blocks = Vector::Constant(d, total / static_cast<double>(d));
  p.rho = total;
  return p;
}

ApproxResult parallel_dykstra(const ApproxProblem& problem, const WeightVector& weights,
                              const StopRule& stop, unsigned threads) {
  stop.validate();
  const Eigen::Index d = static_cast<Eigen::Index>(problem.sets.size());
  if (weights.size() != d) throw ShapeError("parallel_dykstra: one weight per set required");
  const auto t0 = Clock::now();
  const Eigen::Index n = problem.anchor.size();

  std::vector<Vector> u(static_cast<size_t>(d), problem.anchor);
  std::vector<Vector> z(static_cast<size_t>(d), Vector::Zero(n));

  SolverTrace trace;
  trace.config["solver"] = "parallel_dykstra";
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  trace.config["tol_change"] = format_real(stop.tol_change);
  trace.parallel_width = static_cast<int>(d);
  std::int64_t updates = 0;

  auto merge = [&] {
    Vector m = Vector::Zero(n);
    for (Eigen::Index i = 0; i < d; ++i) m += weights[i] * u[static_cast<size_t>(i)];
    return m;
  };

  Vector u0_prev = problem.anchor;
  for (int k = 1; k <= stop.max_sweeps; ++k) {
    const Vector u0 = merge();
    for_each_block(d, threads, [&](Eigen::Index i) {
      Vector v = u0 + z[static_cast<size_t>(i)];
      u[static_cast<size_t>(i)] = problem.sets[static_cast<size_t>(i)].project(v);
      z[static_cast<size_t>(i)] = v - u[static_cast<size_t>(i)];
    });
    updates += d;
    trace.records.push_back(TraceRecord{k, (problem.anchor - u0).squaredNorm(),
                                        std::numeric_limits<double>::quiet_NaN(), 0, updates,
                                        ns_since(t0), std::nullopt, u0});
    if (k > 1 && (u0 - u0_prev).lpNorm<Eigen::Infinity>() <= stop.tol_change) {
      trace.status = SolveStatus::converged;
      return ApproxResult{merge(), std::move(trace)};
    }
    u0_prev = u0;
  }
  trace.status = SolveStatus::max_iter;
  return ApproxResult{merge(), std::move(trace)};
}

RegressionResult parallel_dykstra_cd(const RegressionProblem& problem, const WeightVector& weights,
                                     const StopRule& stop, unsigned threads,
                                     SnapshotMode snapshots) {
  stop.validate();
  const Eigen::Index d = problem.d();
  if (weights.size() != d) throw ShapeError("parallel_dykstra_cd: one weight per block required");
  const auto t0 = Clock::now();
  const Eigen::Index p = problem.p();
  const bool snap = snapshots_enabled(snapshots, p);

  Vector colsq(d);
  std::vector<bool> single(static_cast<size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& blk = problem.blocks()[static_cast<size_t>(i)];
    single[static_cast<size_t>(i)] = blk.X.cols() == 1;
    colsq(i) = single[static_cast<size_t>(i)] ? blk.X.col(0).squaredNorm() : 0.0;
  }

  Vector w = Vector::Zero(p);
  Vector w_new = Vector::Zero(p);
  Vector r = problem.y();

  SolverTrace trace;
  trace.config["solver"] = "parallel_dykstra_cd";
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  trace.config["tol_change"] = format_real(stop.tol_change);
  trace.parallel_width = static_cast<int>(d);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    for_each_block(d, threads, [&](Eigen::Index i) {
      const auto& blk = problem.blocks()[static_cast<size_t>(i)];
      const double gi = weights[i];
      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      auto out = w_new.segment(problem.block_offset(i), problem.block_width(i));
      if (single[static_cast<size_t>(i)]) {
        const double arg = blk.X.col(0).dot(r) + colsq(i) * wi(0) / gi;
        out(0) = gi * soft(arg, blk.penalty.lambda()) / colsq(i);
      } else {
        const Vector b = r + blk.X * (wi / gi);
        out = gi * block_update(blk.X, blk.penalty, b);
      }
    });
    updates += d;
    const double max_change = (w_new - w).lpNorm<Eigen::Infinity>();
    w = w_new;
    r = ordered_residual(problem, w);
    const double crit = 0.5 * r.squaredNorm() + block_penalty_sum(problem, w);
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

AdmmTwoSetResult admm_two_set(const Vector& y, const ConvexSet& C1, const ConvexSet& C2,
                              double rho, const StopRule& stop, const AdmmTwoSetInit& init,
                              const TwoSetObserver& observer) {
  stop.validate();
  if (!(rho > 0)) throw ParameterError("admm_two_set: rho must be positive");
  if (C1.dim() != y.size() || C2.dim() != y.size())
    throw ShapeError("admm_two_set: sets must live in the anchor's space");
  const auto t0 = Clock::now();

  Vector u2 = init.u2.value_or(y);
  Vector z = init.z.value_or(Vector::Zero(y.size()));
  if (u2.size() != y.size() || z.size() != y.size())
    throw ShapeError("admm_two_set: initialization dimension mismatch");
  Vector u1 = Vector::Zero(y.size());

  SolverTrace trace;
  trace.config["solver"] = "admm_two_set";
  trace.config["rho"] = format_real(rho);
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  trace.config["tol_change"] = format_real(stop.tol_change);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    const Vector u1_prev = u1, u2_prev = u2;
    u1 = C1.project((y + rho * (u2 - z)) / (1.0 + rho));
    u2 = C2.project(u1 + z);
    z += u1 - u2;
    updates += 2;
    if (observer) observer(k, u1, u2, z);
    trace.records.push_back(TraceRecord{k, (y - u2).squaredNorm(),
                                        std::numeric_limits<double>::quiet_NaN(), 0, updates,
                                        ns_since(t0), std::nullopt, u2});
    const double change = std::max((u1 - u1_prev).lpNorm<Eigen::Infinity>(),
                                   (u2 - u2_prev).lpNorm<Eigen::Infinity>());
    if (k > 1 && change <= stop.tol_change) {
      trace.status = SolveStatus::converged;
      return AdmmTwoSetResult{std::move(u1), std::move(u2), std::move(z), std::move(trace)};
    }
  }
  trace.status = SolveStatus::max_iter;
  return AdmmTwoSetResult{std::move(u1), std::move(u2), std::move(z), std::move(trace)};
}

RegressionResult parallel_admm_cd(const RegressionProblem& problem, const AdmmParams& params,
                                  const StopRule& stop, unsigned threads,
                                  SnapshotMode snapshots) {
  stop.validate();
  const Eigen::Index d = problem.d();
  if (params.rho_blocks.size() != d)
    throw ShapeError("parallel_admm_cd: one rho per block required");
  if ((params.rho_blocks.array() <= 0).any())
    throw ParameterError("parallel_admm_cd: rho_i must be positive");
  const auto t0 = Clock::now();
  const Eigen::Index p = problem.p();
  const bool snap = snapshots_enabled(snapshots, p);
  const double rho_sum = params.rho_blocks.sum();

  Vector colsq(d);
  std::vector<bool> single(static_cast<size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& blk = problem.blocks()[static_cast<size_t>(i)];
    single[static_cast<size_t>(i)] = blk.X.cols() == 1;
    colsq(i) = single[static_cast<size_t>(i)] ? blk.X.col(0).squaredNorm() : 0.0;
  }

  Vector w = Vector::Zero(p), w_new = Vector::Zero(p);
  Vector u0 = problem.y();
  Vector fit = Vector::Zero(problem.n());       // X w^{k-1}
  Vector fit_prev = Vector::Zero(problem.n());  // X w^{k-2}

  SolverTrace trace;
  trace.config["solver"] = "parallel_admm_cd";
  trace.config["rho_sum"] = format_real(rho_sum);
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  trace.config["tol_change"] = format_real(stop.tol_change);
  trace.parallel_width = static_cast<int>(d);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    u0 = (rho_sum * u0 + (problem.y() - fit) + (fit_prev - fit)) / (1.0 + rho_sum);
    for_each_block(d, threads, [&](Eigen::Index i) {
      const auto& blk = problem.blocks()[static_cast<size_t>(i)];
      const double ri = params.rho_blocks(i);
      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      auto out = w_new.segment(problem.block_offset(i), problem.block_width(i));
      if (single[static_cast<size_t>(i)]) {
        const double arg = blk.X.col(0).dot(u0) + colsq(i) * wi(0) / ri;
        out(0) = ri * soft(arg, blk.penalty.lambda()) / colsq(i);
      } else {
        const Vector b = u0 + blk.X * (wi / ri);
        out = ri * block_update(blk.X, blk.penalty, b);
      }
    });
    updates += d;
    const double max_change = (w_new - w).lpNorm<Eigen::Infinity>();
    w = w_new;
    fit_prev = fit;
    fit = problem.y() - ordered_residual(problem, w);
    const Vector r = problem.y() - fit;
    const double crit = 0.5 * r.squaredNorm() + block_penalty_sum(problem, w);
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

InertialResult inertial_multiblock_admm(const ApproxProblem& problem, const AdmmParams& params,
                                        InertialMode mode, const StopRule& stop,
                                        const InertialInit& init) {
  stop.validate();
  if (!(params.alpha > 0)) throw ParameterError("inertial_multiblock_admm: alpha must be positive");
  const auto t0 = Clock::now();
  const Eigen::Index d = static_cast<Eigen::Index>(problem.sets.size());
  const Eigen::Index n = problem.anchor.size();
  const double alpha = params.alpha;

  // rho_0..rho_d indexed 0..d; rho_{-1} only for best_approximation
  Vector rho(d + 1);
  double rho_m1 = 0.0;
  if (mode == InertialMode::set_intersection) {
    rho(0) = std::pow(alpha, static_cast<double>(d + 1));
    for (Eigen::Index i = 1; i <= d; ++i) rho(i) = std::pow(alpha, static_cast<double>(i));
  } else {
    rho_m1 = std::pow(alpha, static_cast<double>(d + 1));
    rho(0) = 1.0;
    for (Eigen::Index i = 1; i <= d; ++i) rho(i) = std::pow(alpha, static_cast<double>(d + 1 - i));
  }

  std::vector<Vector> u =
      init.u.value_or(std::vector<Vector>(static_cast<size_t>(d + 1), problem.anchor));
  std::vector<Vector> z =
      init.z.value_or(std::vector<Vector>(static_cast<size_t>(d + 1), Vector::Zero(n)));
  if (u.size() != static_cast<size_t>(d + 1) || z.size() != static_cast<size_t>(d + 1))
    throw ShapeError("inertial_multiblock_admm: initialization size mismatch");

  SolverTrace trace;
  trace.config["solver"] = "inertial_multiblock_admm";
  trace.config["mode"] =
      mode == InertialMode::set_intersection ? "set_intersection" : "best_approximation";
  trace.config["alpha"] = format_real(alpha);
  trace.config["max_sweeps"] = std::to_string(stop.max_sweeps);
  std::int64_t updates = 0;

  for (int k = 1; k <= stop.max_sweeps; ++k) {
    const std::vector<Vector> u_prev = u;
    const Vector& ud_prev = u_prev[static_cast<size_t>(d)];
    const Vector& u1_prev = u_prev[1];

    if (mode == InertialMode::set_intersection) {
      u[0] = (ud_prev + rho(0) * (ud_prev + z[0]) + rho(1) * (u1_prev - z[1])) /
             (1.0 + rho(0) + rho(1));
    } else {
      u[0] = (problem.anchor + rho_m1 * ud_prev + rho(0) * (ud_prev + z[0]) +
              rho(1) * (u1_prev - z[1])) /
             (1.0 + rho_m1 + rho(0) + rho(1));
    }
    for (Eigen::Index i = 1; i < d; ++i) {
      const double ratio = rho(i + 1) / rho(i);
      const Vector arg = ((u[static_cast<size_t>(i - 1)] + z[static_cast<size_t>(i)]) +
                          ratio * (u_prev[static_cast<size_t>(i + 1)] - z[static_cast<size_t>(i + 1)])) /
                         (1.0 + ratio);
      u[static_cast<size_t>(i)] = problem.sets[static_cast<size_t>(i - 1)].project(arg);
    }
    {
      const double ratio = rho(0) / rho(d);
      const Vector arg =
          ((u[static_cast<size_t>(d - 1)] + z[static_cast<size_t>(d)]) + ratio * (u[0] - z[0])) /
          (1.0 + ratio);
      u[static_cast<size_t>(d)] = problem.sets[static_cast<size_t>(d - 1)].project(arg);
    }
    // dual ascent after the whole primal pass; u_{-1} stands for u_d
    z[0] += u[static_cast<size_t>(d)] - u[0];
    for (Eigen::Index i = 1; i <= d; ++i)
      z[static_cast<size_t>(i)] += u[static_cast<size_t>(i - 1)] - u[static_cast<size_t>(i)];
    updates += d + 1;

    trace.records.push_back(TraceRecord{
        k, (problem.anchor - u[static_cast<size_t>(d)]).squaredNorm(),
        std::numeric_limits<double>::quiet_NaN(), 0, updates, ns_since(t0), std::nullopt,
        u[static_cast<size_t>(d)]});
    double change = 0.0;
    for (Eigen::Index i = 0; i <= d; ++i)
      change = std::max(change, (u[static_cast<size_t>(i)] - u_prev[static_cast<size_t>(i)])
                                    .lpNorm<Eigen::Infinity>());
    if (change <= stop.tol_change) {
      trace.status = SolveStatus::converged;
      return InertialResult{std::move(u), std::move(z), std::move(trace)};
    }
  }
  trace.status = SolveStatus::max_iter;
  return InertialResult{std::move(u), std::move(z), std::move(trace)};
}

}  // namespace dykcd
