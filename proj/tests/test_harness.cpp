#include <doctest.h>

#include <algorithm>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dykcd/harness.hpp"
#include "test_util.hpp"

using namespace dykcd;
namespace tu = dykcd::testutil;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("instance generation") {
  InstanceSpec spec;
  spec.n = 8;
  spec.p = 5;
  spec.s = 0;
  spec.noise_sd = 0.0;
  spec.lambda = 1.0;
  spec.seed = 99;
  spec.trials = 1;
  const auto prob = gen_instance(spec, 0);
  CHECK(prob.y().lpNorm<Eigen::Infinity>() == 0.0);  // zero signal, zero noise

  spec.s = 2;
  spec.noise_sd = 1.0;
  const auto a = gen_instance(spec, 3);
  const auto b = gen_instance(spec, 3);
  CHECK((a.y() - b.y()).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.design() - b.design()).lpNorm<Eigen::Infinity>() == 0.0);
  const auto c = gen_instance(spec, 4);
  CHECK((a.y() - c.y()).lpNorm<Eigen::Infinity>() > 0.0);

  CHECK_THROWS_AS([&] {
    InstanceSpec bad = spec;
    bad.s = bad.p + 1;
    bad.validate();
  }(), ParameterError);
}

TEST_CASE("certified reference solutions") {
  auto g = tu::rng(91);

  SUBCASE("fully penalized problems certify at zero") {
    const Matrix X = tu::gauss_matrix(g, 10, 6);
    const Vector y = tu::gauss_vector(g, 10);
    const double lam = (X.transpose() * y).lpNorm<Eigen::Infinity>() * 1.0001;
    const auto [w, cert] = reference_lasso(X, y, lam, 1e-12);
    CHECK(w.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(cert.gap <= 1e-12);
  }

  SUBCASE("orthogonal design closed form") {
    const auto [w, cert] = reference_lasso(Matrix::Identity(2, 2), vec2(3, 0.5), 1.0, 1e-10);
    CHECK(w(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(w(1) == 0.0);
    CHECK(cert.gap <= 1e-15);
  }

  SUBCASE("random instance certifies at the requested gap") {
    const Matrix X = tu::gauss_matrix(g, 20, 30);
    const Vector y = 2.0 * tu::gauss_vector(g, 20);
    const auto [w, cert] = reference_lasso(X, y, 1.0, 1e-10);
    CHECK(cert.gap <= 1e-10);
    CHECK(kkt_check(X, y, 1.0, w, 1e-5).pass);
  }

  SUBCASE("grouped problems certify through the block dual norms") {
    const Matrix X = tu::gauss_matrix(g, 15, 12);
    const Vector y = 2.0 * tu::gauss_vector(g, 15);
    auto prob = grouped_problem(X, y, std::vector<Eigen::Index>(4, 3), 0.9);
    const auto [w, cert] = certified_optimum(prob, 1e-10);
    CHECK(cert.gap <= 1e-10);
    StopRule stop;
    stop.max_sweeps = 100000;
    stop.tol_change = 1e-14;
    const auto res = block_cd(prob, stop);
    CHECK(std::abs(criterion(prob, res.w) - criterion(prob, w)) <= 1e-8);
  }
}

TEST_CASE("stationarity check") {
  auto g = tu::rng(92);
  const Matrix X = tu::gauss_matrix(g, 12, 8);
  const Vector y = 2.0 * tu::gauss_vector(g, 12);

  const double lam_big = (X.transpose() * y).lpNorm<Eigen::Infinity>() + 0.1;
  CHECK(kkt_check(X, y, lam_big, Vector::Zero(8), 1e-9).pass);

  const auto [w_star, cert] = reference_lasso(X, y, 0.8, 1e-12);
  CHECK(kkt_check(X, y, 0.8, w_star, 1e-8).pass);

  Vector perturbed = w_star;
  for (Eigen::Index i = 0; i < perturbed.size(); ++i)
    if (std::abs(perturbed(i)) > 1e-9) {
      perturbed(i) += 1e-3;
      break;
    }
  CHECK_FALSE(kkt_check(X, y, 0.8, perturbed, 1e-8).pass);
}

TEST_CASE("polyhedral projection oracle") {
  auto g = tu::rng(93);

  SUBCASE("feasible anchor is returned unchanged") {
    std::vector<ConvexSet> sets{ConvexSet::halfspace(vec2(1, 0), 1.0),
                                ConvexSet::slab(vec2(0, 1), 2.0)};
    const Vector y = vec2(0.2, 0.5);
    CHECK((projection_oracle(sets, y, 1e-9) - y).lpNorm<Eigen::Infinity>() == 0.0);
  }

  SUBCASE("orthant corner") {
    std::vector<ConvexSet> sets{ConvexSet::halfspace(vec2(1, 0), 0.0),
                                ConvexSet::halfspace(vec2(0, 1), 0.0)};
    CHECK(projection_oracle(sets, vec2(1, 1), 1e-9).lpNorm<Eigen::Infinity>() <= 1e-12);
  }

  SUBCASE("multipliers reconstruct the residual on random 3-d systems") {
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<ConvexSet> sets;
      std::vector<Vector> normals;
      for (int i = 0; i < 3; ++i) {
        Vector a = tu::gauss_vector(g, 3);
        normals.push_back(a);
        sets.push_back(ConvexSet::halfspace(a, tu::uniform(g, -0.5, 0.2)));
      }
      const Vector y = 2.0 * tu::gauss_vector(g, 3);
      const auto res = projection_oracle_full(sets, y, 1e-9);
      Vector recon = Vector::Zero(3);
      for (size_t j = 0; j < res.active.size(); ++j)
        recon += res.multipliers(static_cast<Eigen::Index>(j)) *
                 normals[static_cast<size_t>(res.active[j])];
      CHECK((y - res.point - recon).lpNorm<Eigen::Infinity>() <= 1e-8);
      CHECK((res.multipliers.array() >= -1e-9).all());
    }
  }

  SUBCASE("non-polyhedral sets are rejected") {
    std::vector<ConvexSet> sets{ConvexSet::l2_ball(vec2(0, 0), 1.0)};
    CHECK_THROWS_AS(projection_oracle(sets, vec2(2, 0), 1e-9), ParameterError);
  }
}

TEST_CASE("experiment runner on a desk-size family") {
  ExperimentConfig cfg;
  cfg.spec.n = 20;
  cfg.spec.p = 30;
  cfg.spec.s = 4;
  cfg.spec.lambda = 1.0;
  cfg.spec.seed = 7;
  cfg.spec.trials = 2;
  cfg.efficiency.e = 0.1;
  cfg.padmm_rhos = {10.0};
  cfg.rel_subopt_target = 1e-8;
  cfg.max_sweeps_serial = 100000;
  cfg.max_sweeps_parallel = 400000;

  const auto summary = run_experiment(cfg);
  CHECK(summary.trials.size() == 2);
  for (const auto& tr : summary.trials) {
    CHECK(tr.cert_gap <= 1e-10);
    for (const auto& run : tr.runs) {
      CHECK(run.final_rel_subopt <= 1e-8);
      // the certificate gap upper-bounds true suboptimality, so reported
      // suboptimality never goes meaningfully negative
      const double worst =
          *std::min_element(run.suboptimality.begin(), run.suboptimality.end());
      CHECK(worst >= -1e-12);
    }
  }
  CHECK(summary.mean_active_size > 0);
  const std::string json = summary.to_json();
  CHECK(json.find("mean_work_to_1e4") != std::string::npos);
}

TEST_CASE("a lone serial run certifies itself to 1e-10 relative") {
  ExperimentConfig cfg;
  cfg.spec.n = 15;
  cfg.spec.p = 20;
  cfg.spec.s = 3;
  cfg.spec.lambda = 0.9;
  cfg.spec.seed = 21;
  cfg.spec.trials = 1;
  cfg.run_pdcd = false;
  cfg.padmm_rhos.clear();
  cfg.rel_subopt_target = 1e-10;
  cfg.max_sweeps_serial = 200000;
  const auto summary = run_experiment(cfg);
  REQUIRE(summary.trials.size() == 1);
  REQUIRE(summary.trials[0].runs.size() == 1);
  CHECK(summary.trials[0].runs[0].final_rel_subopt <= 1e-10);
}

TEST_CASE("degenerate efficiency makes parallel work equal raw sweeps") {
  EfficiencyModel eff;
  eff.e = 1.0 / 30.0;  // 1/p for p = 30
  eff.validate();
  CHECK(eff.parallel_sweep_cost() == doctest::Approx(30.0));
  CHECK_THROWS_AS([&] {
    EfficiencyModel bad;
    bad.e = 0.0;
    bad.validate();
  }(), ParameterError);
}

TEST_CASE("experiment outputs are byte-identical across reruns") {
  namespace fs = std::filesystem;
  const fs::path dir1 = fs::temp_directory_path() / "dykcd_exp_a";
  const fs::path dir2 = fs::temp_directory_path() / "dykcd_exp_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);

  ExperimentConfig cfg;
  cfg.spec.n = 12;
  cfg.spec.p = 15;
  cfg.spec.s = 2;
  cfg.spec.lambda = 0.8;
  cfg.spec.seed = 11;
  cfg.spec.trials = 1;
  cfg.padmm_rhos = {10.0};
  cfg.rel_subopt_target = 1e-7;
  cfg.max_sweeps_parallel = 200000;

  cfg.out_dir = dir1.string();
  run_experiment(cfg);
  cfg.out_dir = dir2.string();
  run_experiment(cfg);

  for (const auto& entry : fs::directory_iterator(dir1)) {
    const auto other = dir2 / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path().string()) == slurp(other.string()));
  }
}

TEST_CASE("plot emission") {
  PlotSeries s1{"cd", 0, {30, 60, 90}, {1.0, 1e-3, 1e-6}};
  PlotSeries s2{"cd", 1, {30, 60, 90}, {2.0, 1e-2, 1e-5}};
  PlotSeries s3{"pdcd", 0, {10, 20, 30, 40}, {3.0, 0.5, 1e-2, 1e-4}};

  std::ostringstream os;
  emit_plot({s1, s2, s3}, os);
  const std::string svg = os.str();
  CHECK(svg.find("<?xml") == 0);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.rfind("</svg>") != std::string::npos);
  // 3 thin lines + 2 thick mean lines
  size_t count = 0, at = 0;
  while ((at = svg.find("<polyline", at)) != std::string::npos) {
    ++count;
    ++at;
  }
  CHECK(count == 5);

  CHECK_THROWS_AS(emit_plot({}, os), ParameterError);
}
