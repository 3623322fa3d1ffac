#include "dykcd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dykcd/serial.hpp"

namespace dykcd {

namespace {

double splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z = z ^ (z >> 31);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace

void InstanceSpec::validate() const {
  if (n < 1 || p < 1) throw ParameterError("InstanceSpec: n and p must be positive");
  if (s < 0 || s > p) throw ParameterError("InstanceSpec: sparsity must satisfy 0 <= s <= p");
  if (noise_sd < 0) throw ParameterError("InstanceSpec: noise_sd must be nonnegative");
  if (lambda < 0) throw ParameterError("InstanceSpec: lambda must be nonnegative");
  if (trials < 1) throw ParameterError("InstanceSpec: trials must be >= 1");
}

void EfficiencyModel::validate() const {
  if (!(e > 0) || e > 1) throw ParameterError("EfficiencyModel: e must lie in (0, 1]");
}

NormalSampler::NormalSampler(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  (void)splitmix64(s);
  s ^= 0xD1B54A32D192ED03ULL * (stream + 1);
  engine_.seed(s);
}

double NormalSampler::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller on two 53-bit uniforms; avoids the implementation-defined
  // std::normal_distribution so streams are reproducible per build.
  double u1 = 0.0;
  do {
    u1 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  } while (u1 <= 0.0);
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

RegressionProblem gen_instance(const InstanceSpec& spec, int trial) {
  spec.validate();
  if (trial < 0) throw ParameterError("gen_instance: trial index must be nonnegative");
  NormalSampler rng(spec.seed, static_cast<std::uint64_t>(trial));
  Matrix X(spec.n, spec.p);
  for (Eigen::Index i = 0; i < spec.n; ++i)
    for (Eigen::Index j = 0; j < spec.p; ++j) X(i, j) = rng.next();
  Vector beta0 = Vector::Zero(spec.p);
  beta0.head(spec.s).setOnes();
  Vector y = X * beta0;
  for (Eigen::Index i = 0; i < spec.n; ++i) y(i) += spec.noise_sd * rng.next();
  return lasso_problem(X, y, spec.lambda);
}

// ---------------------------------------------------------------------------
// Certified reference solutions

namespace {

struct GapState {
  double best_gap = std::numeric_limits<double>::infinity();
};

double lasso_gap(const Matrix& X, const Vector& y, double lambda, const Vector& w,
                 const Vector& r) {
  const double primal = 0.5 * r.squaredNorm() + lambda * w.lpNorm<1>();
  const double dn = (X.transpose() * r).lpNorm<Eigen::Infinity>();
  const double c = (dn > lambda && dn > 0) ? lambda / dn : 1.0;
  const Vector u = c * r;
  const double dual = u.dot(y) - 0.5 * u.squaredNorm();
  return primal - dual;
}

}  // namespace

std::pair<Vector, LassoCertificate> reference_lasso(const Matrix& X, const Vector& y,
                                                    double lambda, double tol_gap) {
  if (!(tol_gap > 0)) throw ParameterError("reference_lasso: tol_gap must be positive");
  if (X.rows() != y.size()) throw ShapeError("reference_lasso: dimension mismatch");
  const Eigen::Index p = X.cols();
  Vector colsq(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    colsq(j) = X.col(j).squaredNorm();
    if (colsq(j) == 0.0) throw RankError("reference_lasso: zero column");
  }
  Vector w = Vector::Zero(p);
  Vector r = y;
  GapState gs;
  const int max_sweeps = 1000000;
  for (int k = 1; k <= max_sweeps; ++k) {
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
    }
    if (k % 4 == 0 || k < 8) {
      const double gap = lasso_gap(X, y, lambda, w, r);
      gs.best_gap = std::min(gs.best_gap, gap);
      if (gap <= tol_gap) return {w, LassoCertificate{gap, k}};
    }
  }
  throw CertificationError("reference_lasso: gap target unreached", gs.best_gap);
}

std::pair<Vector, LassoCertificate> certified_optimum(const RegressionProblem& problem,
                                                      double tol_gap) {
  if (!(tol_gap > 0)) throw ParameterError("certified_optimum: tol_gap must be positive");
  for (const auto& blk : problem.blocks())
    if (blk.penalty.kind() != Penalty::Kind::zero && blk.penalty.lambda() <= 0)
      throw ParameterError("certified_optimum: penalized blocks need positive lambda");
  for (const auto& blk : problem.blocks())
    if (blk.penalty.kind() == Penalty::Kind::zero)
      throw ParameterError("certified_optimum: zero-penalty blocks cannot be gap-certified");

  Vector w = Vector::Zero(problem.p());
  Vector r = problem.y();
  double best_gap = std::numeric_limits<double>::infinity();
  const int max_sweeps = 1000000;
  for (int k = 1; k <= max_sweeps; ++k) {
    for (Eigen::Index i = 0; i < problem.d(); ++i) {
      const auto& blk = problem.blocks()[static_cast<size_t>(i)];
      auto wi = w.segment(problem.block_offset(i), problem.block_width(i));
      const Vector b = r + blk.X * wi;
      const Vector wi_new = block_update(blk.X, blk.penalty, b);
      r += blk.X * (wi - wi_new);
      wi = wi_new;
    }
    if (k % 4 == 0 || k < 8) {
      double primal = 0.5 * r.squaredNorm();
      double scale = 1.0;
      for (Eigen::Index i = 0; i < problem.d(); ++i) {
        const auto& blk = problem.blocks()[static_cast<size_t>(i)];
        primal += blk.penalty.value(w.segment(problem.block_offset(i), problem.block_width(i)));
        const double dn = blk.penalty.dual_norm(blk.X.transpose() * r);
        if (dn > blk.penalty.lambda() && dn > 0)
          scale = std::min(scale, blk.penalty.lambda() / dn);
      }
      const Vector u = scale * r;
      const double dual = u.dot(problem.y()) - 0.5 * u.squaredNorm();
      const double gap = primal - dual;
      best_gap = std::min(best_gap, gap);
      if (gap <= tol_gap) return {w, LassoCertificate{gap, k}};
    }
  }
  throw CertificationError("certified_optimum: gap target unreached", best_gap);
}

KktReport kkt_check(const Matrix& X, const Vector& y, double lambda, const Vector& w,
                    double tol) {
  if (X.rows() != y.size() || X.cols() != w.size())
    throw ShapeError("kkt_check: dimension mismatch");
  const Vector r = y - X * w;
  double max_violation = 0.0;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    const double c = X.col(i).dot(r);
    max_violation = std::max(max_violation, std::abs(c) - lambda);
    if (std::abs(w(i)) > tol) {
      const double sign = w(i) > 0 ? 1.0 : -1.0;
      max_violation = std::max(max_violation, std::abs(c - sign * lambda));
    }
  }
  max_violation = std::max(0.0, max_violation);
  return KktReport{max_violation <= tol, max_violation};
}

// ---------------------------------------------------------------------------
// Projection oracle

namespace {

void append_halfspaces(const ConvexSet& set, std::vector<Halfspace>& out) {
  switch (set.kind()) {
    case ConvexSet::Kind::halfspace:
      out.push_back(*set.as_halfspace());
      return;
    case ConvexSet::Kind::slab: {
      const auto* s = set.as_slab();
      out.push_back(Halfspace{s->normal, s->halfwidth});
      out.push_back(Halfspace{-s->normal, s->halfwidth});
      return;
    }
    case ConvexSet::Kind::box: {
      const auto* b = set.as_box();
      const Eigen::Index n = b->lower.size();
      for (Eigen::Index i = 0; i < n; ++i) {
        Vector e = Vector::Zero(n);
        e(i) = 1.0;
        out.push_back(Halfspace{e, b->upper(i)});
        out.push_back(Halfspace{-e, -b->lower(i)});
      }
      return;
    }
    default:
      throw ParameterError("projection_oracle: only polyhedral sets are supported");
  }
}

}  // namespace

ProjectionOracleResult projection_oracle_full(const std::vector<ConvexSet>& sets, const Vector& y,
                                              double tol) {
  if (sets.empty()) throw ParameterError("projection_oracle: needs at least one set");
  if (y.size() > 20) throw ParameterError("projection_oracle: ambient dimension capped at 20");
  if (sets.size() > 8) throw ParameterError("projection_oracle: set count capped at 8");
  std::vector<Halfspace> hs;
  for (const auto& s : sets) append_halfspaces(s, hs);
  const int m = static_cast<int>(hs.size());
  if (m > 16) throw ParameterError("projection_oracle: at most 16 halfspaces after splitting");

  Matrix A(m, y.size());
  Vector b(m);
  for (int i = 0; i < m; ++i) {
    A.row(i) = hs[static_cast<size_t>(i)].normal.transpose();
    b(i) = hs[static_cast<size_t>(i)].offset;
  }
  double scale = std::max(1.0, y.norm());
  for (int i = 0; i < m; ++i) scale = std::max(scale, A.row(i).norm());
  const double eps = 1e-9 * scale;

  // Exact route: enumerate active subsets, solve for multipliers, keep the
  // KKT-consistent candidate (the projection is unique).
  std::optional<ProjectionOracleResult> found;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    const int size = __builtin_popcount(mask);
    if (size > y.size()) continue;
    std::vector<int> idx;
    idx.reserve(static_cast<size_t>(size));
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) idx.push_back(i);

    Vector u;
    Vector nu;
    if (idx.empty()) {
      u = y;
      nu = Vector(0);
    } else {
      Matrix As(size, y.size());
      Vector bs(size);
      for (int j = 0; j < size; ++j) {
        As.row(j) = A.row(idx[static_cast<size_t>(j)]);
        bs(j) = b(idx[static_cast<size_t>(j)]);
      }
      const Matrix gram = As * As.transpose();
      nu = gram.completeOrthogonalDecomposition().solve(As * y - bs);
      u = y - As.transpose() * nu;
      if ((As * u - bs).lpNorm<Eigen::Infinity>() > eps) continue;  // inconsistent subset
      if ((nu.array() < -eps).any()) continue;                      // dual infeasible
    }
    if (((A * u - b).array() > eps).any()) continue;  // primal infeasible
    ProjectionOracleResult res;
    res.point = u;
    res.active = idx;
    res.multipliers = nu.cwiseMax(0.0);
    found = std::move(res);
    break;
  }
  if (!found)
    throw OracleInconsistencyError("projection_oracle: no KKT-consistent active set found");

  // Independent route: long corrected cyclic projection run on the original sets.
  StopRule stop;
  stop.max_sweeps = 1000000;
  stop.tol_change = 1e-13;
  const ApproxProblem prob{y, sets};
  const ApproxResult check = dykstra(prob, stop);
  if ((check.point - found->point).lpNorm<Eigen::Infinity>() > 10.0 * tol)
    throw OracleInconsistencyError("projection_oracle: enumeration and iterative routes disagree");
  return *found;
}

Vector projection_oracle(const std::vector<ConvexSet>& sets, const Vector& y, double tol) {
  return projection_oracle_full(sets, y, tol).point;
}

// ---------------------------------------------------------------------------
// Experiment runner

namespace {

SolverRun summarize_run(const std::string& name, const SolverTrace& trace, double optimum,
                        double work_per_sweep, double work_threshold) {
  SolverRun run;
  run.name = name;
  run.work_per_sweep = work_per_sweep;
  run.sweeps = static_cast<int>(trace.records.size());
  run.suboptimality.reserve(trace.records.size());
  for (const auto& rec : trace.records) {
    const double sub = rec.criterion - optimum;
    run.suboptimality.push_back(sub);
    if (!run.work_to_1e4 && sub <= work_threshold) run.work_to_1e4 = rec.k * work_per_sweep;
  }
  run.final_rel_subopt =
      trace.records.empty()
          ? std::numeric_limits<double>::infinity()
          : (trace.records.back().criterion - optimum) / std::max(1e-300, std::abs(optimum));
  return run;
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.spec.validate();
  config.efficiency.validate();
  ExperimentSummary summary;
  summary.spec = config.spec;
  summary.efficiency = config.efficiency;

  const bool write_files = !config.out_dir.empty();
  if (write_files) std::filesystem::create_directories(config.out_dir);

  const double serial_work = static_cast<double>(config.spec.p);
  const double parallel_work = config.efficiency.parallel_sweep_cost();

  std::map<std::string, std::vector<double>> work_to_1e4;
  std::map<std::string, double> worst_rel;
  double active_sum = 0.0;

  for (int trial = 0; trial < config.spec.trials; ++trial) {
    const RegressionProblem problem = gen_instance(config.spec, trial);
    const Matrix X = problem.design();
    const Vector& y = problem.y();
    const double lambda = config.spec.lambda;

    auto [w_star, cert] = reference_lasso(X, y, lambda, config.cert_tol_gap);
    const double optimum = criterion(problem, w_star);
    TrialResult tr;
    tr.trial = trial;
    tr.optimum = optimum;
    tr.cert_gap = cert.gap;
    tr.active_size = static_cast<Eigen::Index>(active_set(w_star).size());
    active_sum += static_cast<double>(tr.active_size);

    const double target =
        optimum + std::min(config.rel_subopt_target * std::abs(optimum),
                           0.5 * config.work_threshold);

    auto record = [&](const std::string& name, SolverTrace& trace, double wps) {
      trace.fill_suboptimality(optimum);
      SolverRun run = summarize_run(name, trace, optimum, wps, config.work_threshold);
      if (run.work_to_1e4) work_to_1e4[name].push_back(*run.work_to_1e4);
      worst_rel[name] = std::max(worst_rel[name], run.final_rel_subopt);
      if (write_files) {
        const std::string base =
            config.out_dir + "/trial" + std::to_string(trial) + "_" + name;
        write_trace_csv_file(base + ".csv", trace, wps, !config.timing);
        write_trace_sidecar_json(base + ".json", trace);
      }
      tr.runs.push_back(std::move(run));
    };

    if (config.run_cd) {
      StopRule stop;
      stop.max_sweeps = config.max_sweeps_serial;
      stop.tol_change = 1e-14;
      stop.target_criterion = target;
      auto res = lasso_cd(X, y, lambda, stop, SnapshotMode::off);
      res.trace.config["seed"] = std::to_string(config.spec.seed);
      res.trace.config["trial"] = std::to_string(trial);
      res.trace.config["rng"] = "mt19937_64+box_muller";
      record("cd", res.trace, serial_work);
    }
    if (config.run_pdcd) {
      StopRule stop;
      stop.max_sweeps = config.max_sweeps_parallel;
      stop.tol_change = 1e-14;
      stop.target_criterion = target;
      auto res = parallel_dykstra_cd(problem, WeightVector::uniform(problem.d()), stop,
                                     config.threads, SnapshotMode::off);
      res.trace.config["seed"] = std::to_string(config.spec.seed);
      res.trace.config["trial"] = std::to_string(trial);
      res.trace.config["rng"] = "mt19937_64+box_muller";
      record("pdcd", res.trace, parallel_work);
    }
    for (double rho : config.padmm_rhos) {
      StopRule stop;
      stop.max_sweeps = config.max_sweeps_parallel;
      stop.tol_change = 1e-14;
      stop.target_criterion = target;
      auto res = parallel_admm_cd(problem, AdmmParams::uniform_blocks(problem.d(), rho), stop,
                                  config.threads, SnapshotMode::off);
      res.trace.config["seed"] = std::to_string(config.spec.seed);
      res.trace.config["trial"] = std::to_string(trial);
      res.trace.config["rng"] = "mt19937_64+box_muller";
      std::ostringstream name;
      name << "padmm_rho" << rho;
      record(name.str(), res.trace, parallel_work);
    }
    summary.trials.push_back(std::move(tr));
  }

  summary.mean_active_size = active_sum / static_cast<double>(config.spec.trials);
  for (const auto& [name, works] : work_to_1e4) {
    double s = 0.0;
    for (double w : works) s += w;
    // trials that never reached 1e-4 are excluded from the mean; the
    // worst_final_rel_subopt entry exposes them
    summary.mean_work_to_1e4[name] = works.empty() ? std::numeric_limits<double>::infinity()
                                                   : s / static_cast<double>(works.size());
  }
  summary.worst_final_rel_subopt = worst_rel;

  if (write_files) {
    std::ofstream os(config.out_dir + "/summary.json", std::ios::binary);
    if (!os) throw DataError("cannot open summary for writing");
    os << summary.to_json();
  }
  return summary;
}

std::string ExperimentSummary::to_json() const {
  std::ostringstream os;
  os << "{\n  \"n\": " << spec.n << ", \"p\": " << spec.p << ", \"s\": " << spec.s
     << ", \"lambda\": " << format_real(spec.lambda) << ", \"seed\": " << spec.seed
     << ", \"trials\": " << spec.trials << ",\n  \"efficiency\": " << format_real(efficiency.e)
     << ",\n  \"rng\": \"mt19937_64+box_muller\""
     << ",\n  \"mean_active_size\": " << format_real(mean_active_size);
  os << ",\n  \"mean_work_to_1e4\": {";
  bool first = true;
  for (const auto& [name, v] : mean_work_to_1e4) {
    os << (first ? "" : ", ") << "\"" << name << "\": "
       << (std::isfinite(v) ? format_real(v) : "null");
    first = false;
  }
  os << "},\n  \"worst_final_rel_subopt\": {";
  first = true;
  for (const auto& [name, v] : worst_final_rel_subopt) {
    os << (first ? "" : ", ") << "\"" << name << "\": " << format_real(v);
    first = false;
  }
  os << "},\n  \"suboptimality_at_work_checkpoints\": {";
  // mean/median suboptimality across trials at log-spaced work checkpoints
  std::vector<double> checkpoints;
  for (double w = 10.0; w <= 1e7; w *= std::sqrt(10.0)) checkpoints.push_back(w);
  std::map<std::string, std::vector<std::vector<double>>> per_solver;  // checkpoint -> trial vals
  for (const auto& tr : trials)
    for (const auto& run : tr.runs) {
      auto& mat = per_solver[run.name];
      mat.resize(checkpoints.size());
      for (size_t c = 0; c < checkpoints.size(); ++c) {
        const auto sweeps_at = static_cast<size_t>(
            std::min<double>(static_cast<double>(run.suboptimality.size()),
                             std::floor(checkpoints[c] / run.work_per_sweep)));
        if (sweeps_at >= 1) mat[c].push_back(run.suboptimality[sweeps_at - 1]);
      }
    }
  first = true;
  for (auto& [name, mat] : per_solver) {
    os << (first ? "\n    " : ",\n    ") << "\"" << name << "\": [";
    first = false;
    bool inner_first = true;
    for (size_t c = 0; c < checkpoints.size(); ++c) {
      if (mat[c].empty()) continue;
      std::vector<double> vals = mat[c];
      std::sort(vals.begin(), vals.end());
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      const double median = vals[vals.size() / 2];
      os << (inner_first ? "" : ", ") << "{\"work\": " << format_real(checkpoints[c])
         << ", \"mean\": " << format_real(mean) << ", \"median\": " << format_real(median) << "}";
      inner_first = false;
    }
    os << "]";
  }
  os << "\n  }\n}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Plot

namespace {

struct Rgb {
  int r, g, b;
};

Rgb solver_color(const std::string& name, int index) {
  if (name == "cd") return {0, 0, 0};
  if (name == "pdcd") return {214, 39, 40};
  if (name.rfind("padmm", 0) == 0) {
    static const Rgb palette[] = {{44, 160, 44}, {31, 119, 180}, {148, 103, 189}};
    return palette[index % 3];
  }
  static const Rgb fallback[] = {{255, 127, 14}, {140, 86, 75}, {23, 190, 207}};
  return fallback[index % 3];
}

}  // namespace

void emit_plot(const std::vector<PlotSeries>& series, std::ostream& os) {
  if (series.empty()) throw ParameterError("emit_plot: no series given");
  for (const auto& s : series)
    if (s.work.empty() || s.work.size() != s.suboptimality.size())
      throw ParameterError("emit_plot: malformed series");

  const double width = 720, height = 480, ml = 70, mr = 160, mt = 30, mb = 50;
  double wmin = std::numeric_limits<double>::infinity(), wmax = 0;
  double smin = std::numeric_limits<double>::infinity(), smax = 0;
  for (const auto& s : series)
    for (size_t i = 0; i < s.work.size(); ++i) {
      wmin = std::min(wmin, s.work[i]);
      wmax = std::max(wmax, s.work[i]);
      const double v = std::max(1e-16, s.suboptimality[i]);
      smin = std::min(smin, v);
      smax = std::max(smax, v);
    }
  if (!(wmax > 0)) wmax = 1;
  wmin = std::min(wmin, wmax / 2);
  smin = std::max(smin, 1e-16);
  if (smax <= smin) smax = smin * 10;
  const double lsmin = std::log10(smin), lsmax = std::log10(smax);

  auto xpos = [&](double w) {
    return ml + (w - wmin) / std::max(1e-300, wmax - wmin) * (width - ml - mr);
  };
  auto ypos = [&](double s) {
    const double ls = std::log10(std::max(1e-16, s));
    return mt + (lsmax - ls) / std::max(1e-12, lsmax - lsmin) * (height - mt - mb);
  };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
     << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
     << "\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(std::ceil(lsmin)); e <= static_cast<int>(std::floor(lsmax)); ++e) {
    const double yy = ypos(std::pow(10.0, e));
    os << "<line x1=\"" << ml - 4 << "\" y1=\"" << yy << "\" x2=\"" << ml << "\" y2=\"" << yy
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << yy + 4
       << "\" font-size=\"11\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double w = wmin + (wmax - wmin) * t / 4.0;
    os << "<text x=\"" << xpos(w) << "\" y=\"" << height - mb + 18
       << "\" font-size=\"11\" text-anchor=\"middle\">" << static_cast<long long>(w)
       << "</text>\n";
  }
  os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
     << "\" font-size=\"12\" text-anchor=\"middle\">work units</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
     << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (mt + height - mb) / 2 << ")\">suboptimality</text>\n";

  // thin per-trial lines, then thick mean lines
  std::map<std::string, int> solver_index;
  std::vector<std::string> solver_order;
  for (const auto& s : series)
    if (!solver_index.count(s.solver)) {
      solver_index[s.solver] = static_cast<int>(solver_order.size());
      solver_order.push_back(s.solver);
    }
  std::map<std::string, int> padmm_rank;
  {
    int r = 0;
    for (const auto& name : solver_order)
      if (name.rfind("padmm", 0) == 0) padmm_rank[name] = r++;
  }
  auto color_of = [&](const std::string& name) {
    const int idx = padmm_rank.count(name) ? padmm_rank[name] : solver_index[name];
    const Rgb c = solver_color(name, idx);
    std::ostringstream ss;
    ss << "rgb(" << c.r << "," << c.g << "," << c.b << ")";
    return ss.str();
  };

  auto polyline = [&](const std::vector<double>& work, const std::vector<double>& sub,
                      const std::string& color, double stroke_width, double opacity) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << stroke_width
       << "\" stroke-opacity=\"" << opacity << "\" points=\"";
    for (size_t i = 0; i < work.size(); ++i)
      os << xpos(work[i]) << ',' << ypos(sub[i]) << ' ';
    os << "\"/>\n";
  };

  for (const auto& s : series) polyline(s.work, s.suboptimality, color_of(s.solver), 0.8, 0.35);

  for (const auto& name : solver_order) {
    // mean over trials on a common work grid (step-function sampling)
    std::vector<const PlotSeries*> group;
    double gwmax = 0;
    for (const auto& s : series)
      if (s.solver == name) {
        group.push_back(&s);
        gwmax = std::max(gwmax, s.work.back());
      }
    std::vector<double> grid, mean;
    const int npts = 120;
    for (int t = 1; t <= npts; ++t) {
      const double w = wmin + (gwmax - wmin) * t / npts;
      double acc = 0.0;
      int cnt = 0;
      for (const auto* s : group) {
        size_t idx = 0;
        while (idx + 1 < s->work.size() && s->work[idx + 1] <= w) ++idx;
        if (s->work[idx] <= w) {
          acc += s->suboptimality[idx];
          ++cnt;
        }
      }
      if (cnt == static_cast<int>(group.size())) {
        grid.push_back(w);
        mean.push_back(acc / cnt);
      }
    }
    if (!grid.empty()) polyline(grid, mean, color_of(name), 2.5, 1.0);
  }

  // legend
  double ly = mt + 10;
  for (const auto& name : solver_order) {
    os << "<line x1=\"" << width - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << width - mr + 40
       << "\" y2=\"" << ly << "\" stroke=\"" << color_of(name) << "\" stroke-width=\"2.5\"/>\n";
    os << "<text x=\"" << width - mr + 46 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << name
       << "</text>\n";
    ly += 20;
  }
  os << "</svg>\n";
}

void emit_plot_file(const std::vector<PlotSeries>& series, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  emit_plot(series, os);
}

}  // namespace dykcd
