#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dykcd/harness.hpp"
#include "dykcd/instance_io.hpp"

namespace fs = std::filesystem;
using namespace dykcd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitData = 4;

// DYKCD_OUT_DIR rebases relative output paths; nothing else reads the env.
std::string out_path(const std::string& path) {
  const char* base = std::getenv("DYKCD_OUT_DIR");
  if (!base || *base == '\0' || path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base) / p).string();
}

struct SolveOptions {
  std::string instance_path;
  std::string solver = "cd";
  std::string out_prefix;
  double rho = 50.0;
  double gamma = 0.0;  // 0: uniform 1/d
  int max_sweeps = 10000;
  double tol = 1e-10;
  unsigned threads = 1;
  bool timing = false;
};

int run_solve(const SolveOptions& opt) {
  const Instance inst = read_instance_file(opt.instance_path);
  const RegressionProblem& prob = inst.problem;
  const SmoothLoss loss = instance_loss(inst);

  StopRule stop;
  stop.max_sweeps = opt.max_sweeps;
  stop.tol_change = opt.tol;

  WeightVector weights = opt.gamma > 0
                             ? WeightVector(Vector::Constant(prob.d(), opt.gamma))
                             : WeightVector::uniform(prob.d());

  SolverTrace trace;
  if (opt.solver == "cd") {
    trace = block_cd(prob, stop).trace;
  } else if (opt.solver == "dykstra") {
    trace = dykstra(dual_approx_problem(prob), stop).trace;
  } else if (opt.solver == "hildreth") {
    const double lam0 = prob.blocks()[0].penalty.lambda();
    for (const auto& blk : prob.blocks())
      if (blk.X.cols() != 1 || blk.penalty.kind() != Penalty::Kind::l1 ||
          blk.penalty.lambda() != lam0)
        throw ParameterError("hildreth needs single-column l1 blocks with one penalty level");
    trace = hildreth(lasso_split_halfspaces(prob.design(), lam0), prob.y(), stop).trace;
  } else if (opt.solver == "pdcd") {
    trace = parallel_dykstra_cd(prob, weights, stop, opt.threads).trace;
  } else if (opt.solver == "padmm") {
    trace = parallel_admm_cd(prob, AdmmParams::uniform_blocks(prob.d(), opt.rho), stop,
                             opt.threads)
                .trace;
  } else if (opt.solver == "gen-cd") {
    trace = general_cd(loss, prob, stop).trace;
  } else if (opt.solver == "gen-pdcd") {
    trace = parallel_dykstra_cd_general(loss, prob, stop, opt.threads).trace;
  } else if (opt.solver == "gen-padmm") {
    trace = parallel_admm_cd_general(loss, prob, opt.rho, stop, opt.threads).trace;
  } else {
    throw ParameterError("unknown solver: " + opt.solver);
  }

  // fill the suboptimality column against a certified optimum where one is
  // cheap to produce (quadratic loss, penalized blocks)
  if (loss.kind() == SmoothLoss::Kind::quadratic) {
    try {
      const auto [w_star, cert] = certified_optimum(prob, 1e-10);
      trace.fill_suboptimality(criterion(prob, w_star));
      trace.config["certificate_gap"] = format_real(cert.gap);
    } catch (const std::exception&) {
      // leave the column as NaN; the trace itself is still valid
    }
  }

  const std::string prefix = out_path(opt.out_prefix);
  write_trace_csv_file(prefix + ".csv", trace, std::nullopt, !opt.timing);
  write_trace_sidecar_json(prefix + ".json", trace);
  std::cout << "status " << to_string(trace.status) << ", sweeps " << trace.records.size()
            << ", wrote " << prefix << ".csv\n";
  return trace.status == SolveStatus::error ? kExitConvergence : kExitOk;
}

struct CsvSeries {
  std::vector<double> work;
  std::vector<double> subopt;
};

CsvSeries read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  std::string header;
  if (!std::getline(is, header)) throw DataError("empty CSV: " + path);
  std::vector<std::string> cols;
  {
    std::stringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  int k_at = -1, sub_at = -1, work_at = -1;
  for (size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "k") k_at = static_cast<int>(i);
    if (cols[i] == "suboptimality") sub_at = static_cast<int>(i);
    if (cols[i] == "work_units") work_at = static_cast<int>(i);
  }
  if (k_at < 0 || sub_at < 0) throw DataError("trace CSV lacks k/suboptimality: " + path);
  CsvSeries series;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < cols.size()) throw DataError("short CSV row in " + path);
    const double k = std::stod(cells[static_cast<size_t>(k_at)]);
    const double sub = std::stod(cells[static_cast<size_t>(sub_at)]);
    if (std::isnan(sub)) continue;  // uncertified trace rows carry no suboptimality
    const double work = work_at >= 0 ? std::stod(cells[static_cast<size_t>(work_at)]) : k;
    series.work.push_back(work);
    series.subopt.push_back(sub);
  }
  if (series.work.empty()) throw DataError("no rows in " + path);
  return series;
}

std::string solver_from_filename(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  const auto under = stem.find('_');
  return under == std::string::npos ? stem : stem.substr(under + 1);
}

int trial_from_filename(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  if (stem.rfind("trial", 0) == 0) {
    const auto under = stem.find('_');
    try {
      return std::stoi(stem.substr(5, under - 5));
    } catch (...) {
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection / coordinate-descent solver toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a Gaussian regression instance as JSON");
  InstanceSpec spec;
  int trial = 0;
  std::string gen_out = "instance.json";
  gen->add_option("--n", spec.n, "observations");
  gen->add_option("--p", spec.p, "predictors");
  gen->add_option("--s", spec.s, "nonzeros in the signal");
  gen->add_option("--noise-sd", spec.noise_sd, "noise standard deviation");
  gen->add_option("--lambda", spec.lambda, "l1 penalty level");
  gen->add_option("--seed", spec.seed, "RNG seed");
  gen->add_option("--trial", trial, "trial index within the seed");
  gen->add_option("--out", gen_out, "output path");

  // solve
  auto* solve = app.add_subcommand("solve", "Run one solver on an instance, emit a trace CSV");
  SolveOptions sopt;
  solve->add_option("--instance", sopt.instance_path, "instance JSON")->required();
  solve->add_option("--solver", sopt.solver,
                    "cd|dykstra|hildreth|pdcd|padmm|gen-cd|gen-pdcd|gen-padmm");
  solve->add_option("--rho", sopt.rho, "augmented Lagrangian parameter (padmm, gen-padmm)");
  solve->add_option("--gamma", sopt.gamma, "uniform block weight (default 1/d)");
  solve->add_option("--max-sweeps", sopt.max_sweeps, "sweep cap");
  solve->add_option("--tol", sopt.tol, "sup-norm change tolerance");
  solve->add_option("--threads", sopt.threads, "block-update threads");
  solve->add_flag("--timing", sopt.timing, "write real wall_ns (not byte-reproducible)");
  solve->add_option("--out-prefix", sopt.out_prefix, "output path prefix")->required();

  // equiv
  auto* equiv = app.add_subcommand("equiv", "Check the dual equivalence of the two schemes");
  std::string equiv_instance;
  int equiv_sweeps = 200;
  double equiv_threshold = 1e-9;
  bool equiv_general = false;
  equiv->add_option("--instance", equiv_instance, "instance JSON")->required();
  equiv->add_option("--sweeps", equiv_sweeps, "sweeps to run in lockstep");
  equiv->add_option("--threshold", equiv_threshold, "failure threshold on the deviation");
  equiv->add_flag("--general", equiv_general, "use the instance's loss (nonquadratic allowed)");

  // rates
  auto* rates = app.add_subcommand("rates", "Emit the rate report JSON for an instance");
  std::string rates_instance, rates_out = "rates.json";
  int rates_sweeps = 5000;
  bool rates_parallel = false;
  rates->add_option("--instance", rates_instance, "instance JSON")->required();
  rates->add_option("--out", rates_out, "output path");
  rates->add_option("--max-sweeps", rates_sweeps, "sweep cap for the traced solve");
  rates->add_flag("--parallel", rates_parallel, "include the product-space constant (1/p weights)");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Multi-trial benchmark with work accounting");
  ExperimentConfig cfg;
  std::vector<double> rho_grid;
  exp->add_option("--n", cfg.spec.n, "observations");
  exp->add_option("--p", cfg.spec.p, "predictors");
  exp->add_option("--s", cfg.spec.s, "signal nonzeros");
  exp->add_option("--noise-sd", cfg.spec.noise_sd, "noise sd");
  exp->add_option("--lambda", cfg.spec.lambda, "penalty level");
  exp->add_option("--trials", cfg.spec.trials, "number of instances");
  exp->add_option("--seed", cfg.spec.seed, "RNG seed");
  exp->add_option("--efficiency", cfg.efficiency.e, "parallel efficiency e in (0,1]");
  exp->add_option("--rho", rho_grid, "rho values for the splitting solver");
  exp->add_option("--target", cfg.rel_subopt_target, "relative suboptimality target");
  exp->add_option("--max-sweeps", cfg.max_sweeps_parallel, "parallel sweep cap");
  exp->add_option("--threads", cfg.threads, "block-update threads");
  exp->add_flag("--timing", cfg.timing, "write real wall_ns (not byte-reproducible)");
  exp->add_option("--out-dir", cfg.out_dir, "output directory")->required();

  // plot
  auto* plot = app.add_subcommand("plot", "Render suboptimality curves from trace CSVs");
  std::vector<std::string> plot_inputs;
  std::string plot_dir, plot_out = "plot.svg";
  plot->add_option("--in", plot_inputs, "trace CSV files");
  plot->add_option("--dir", plot_dir, "directory of trial*_solver.csv traces");
  plot->add_option("--out", plot_out, "output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      spec.validate();
      const RegressionProblem prob = gen_instance(spec, trial);
      write_instance_file(out_path(gen_out), Instance{prob, std::nullopt});
      std::cout << "wrote " << out_path(gen_out) << "\n";
      return kExitOk;
    }
    if (solve->parsed()) return run_solve(sopt);
    if (equiv->parsed()) {
      const Instance inst = read_instance_file(equiv_instance);
      StopRule stop;
      stop.max_sweeps = equiv_sweeps;
      const double dev =
          equiv_general
              ? general_equivalence_check(instance_loss(inst), inst.problem, stop)
              : equivalence_check(inst.problem, stop);
      std::cout << "max deviation over " << equiv_sweeps << " sweeps: " << format_real(dev)
                << "\n";
      return dev <= equiv_threshold ? kExitOk : kExitConvergence;
    }
    if (rates->parsed()) {
      const Instance inst = read_instance_file(rates_instance);
      const Matrix X = inst.problem.design();
      const auto [w_star, cert] = certified_optimum(inst.problem, 1e-10);
      StopRule stop;
      stop.max_sweeps = rates_sweeps;
      stop.tol_change = 1e-15;
      // halt above the certificate's error floor so the measured contraction
      // ratios stay out of the oracle noise
      stop.target_criterion = criterion(inst.problem, w_star) + 1e-8;
      const auto res = block_cd(inst.problem, stop, Vector(), SnapshotMode::on);
      std::optional<WeightVector> weights;
      if (rates_parallel) weights = WeightVector::uniform(inst.problem.d());
      const RateReport report = make_rate_report(res.trace, X, w_star, weights);
      std::ofstream os(out_path(rates_out), std::ios::binary);
      if (!os) throw DataError("cannot open for writing: " + out_path(rates_out));
      os << report.to_json();
      std::cout << "wrote " << out_path(rates_out) << " (gap " << format_real(cert.gap) << ")\n";
      return kExitOk;
    }
    if (exp->parsed()) {
      if (!rho_grid.empty()) cfg.padmm_rhos = rho_grid;
      cfg.max_sweeps_serial = cfg.max_sweeps_parallel;
      cfg.out_dir = out_path(cfg.out_dir);
      const auto summary = run_experiment(cfg);
      std::cout << "mean active-set size " << summary.mean_active_size << "\n";
      for (const auto& [name, work] : summary.mean_work_to_1e4)
        std::cout << name << ": mean work to 1e-4 = " << work << "\n";
      std::cout << "wrote " << cfg.out_dir << "/summary.json\n";
      return kExitOk;
    }
    if (plot->parsed()) {
      std::vector<std::string> files = plot_inputs;
      if (!plot_dir.empty())
        for (const auto& entry : fs::directory_iterator(plot_dir))
          if (entry.path().extension() == ".csv") files.push_back(entry.path().string());
      std::sort(files.begin(), files.end());
      std::vector<PlotSeries> series;
      for (const auto& f : files) {
        const CsvSeries cs = read_trace_csv(f);
        series.push_back(PlotSeries{solver_from_filename(f), trial_from_filename(f), cs.work,
                                    cs.subopt});
      }
      emit_plot_file(series, out_path(plot_out));
      std::cout << "wrote " << out_path(plot_out) << "\n";
      return kExitOk;
    }
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const CertificationError& e) {
    std::cerr << "certification failure: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const OracleInconsistencyError& e) {
    std::cerr << "oracle inconsistency: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const RankError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
