#include <doctest.h>

#include "dykcd/harness.hpp"
#include "dykcd/rates.hpp"
#include "dykcd/serial.hpp"
#include "test_util.hpp"

using namespace dykcd;
namespace tu = dykcd::testutil;

namespace {

Matrix two_cols() {
  Matrix X(2, 2);
  X << 1, 1.0 / std::sqrt(2.0), 0, 1.0 / std::sqrt(2.0);
  return X;
}

}  // namespace

TEST_CASE("active_set basics") {
  Vector w(2);
  w << 2, 0;
  CHECK(active_set(w) == std::vector<Eigen::Index>{0});
  CHECK(active_set(Vector::Zero(4)).empty());
  CHECK_THROWS_AS(active_set(w, -1.0), ParameterError);
}

TEST_CASE("serial contraction constants on spelled-out designs") {
  Matrix unit(3, 1);
  unit << 1, 0, 0;
  CHECK(bound_iusem(unit, {0}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(bound_deutsch(unit, {0}) == doctest::Approx(0.0));

  const Matrix I2 = Matrix::Identity(2, 2);
  CHECK(bound_iusem(I2, {0, 1}) == doctest::Approx(std::sqrt(4.0 / 5.0)).epsilon(1e-12));
  CHECK(bound_deutsch(I2, {0, 1}) == doctest::Approx(0.0).epsilon(1e-12));

  // columns (1,0) and (1,1)/sqrt(2): Gram [[1, c],[c, 1]] with c = 1/sqrt(2),
  // lambda_min = 1 - c by the 2x2 eigenvalue formula
  const Matrix X = two_cols();
  const double lmin = 1.0 - 1.0 / std::sqrt(2.0);
  CHECK(bound_iusem(X, {0, 1}) == doctest::Approx(std::sqrt(4.0 / (4.0 + lmin))).epsilon(1e-12));
  // cos(theta) between the columns is 1/sqrt(2), and the bound equals |cos|
  CHECK(bound_deutsch(X, {0, 1}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(bound_deutsch(X, {1, 0}), ParameterError);
}

TEST_CASE("parallel contraction constant") {
  Matrix unit(3, 1);
  unit << 1, 0, 0;
  CHECK(bound_parallel(unit, {0}, WeightVector::uniform(1)) ==
        doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(bound_parallel(unit, {0}, WeightVector::uniform(2)) ==
        doctest::Approx(std::sqrt(4.0 / 5.0)).epsilon(1e-12));

  // x -> x/(x+c) is increasing, so the parallel constant dominates the serial
  // one whenever 2a/gamma_min >= a^2
  auto g = tu::rng(81);
  const Matrix X = tu::gauss_matrix(g, 12, 8);
  const std::vector<Eigen::Index> A{0, 2, 5};
  const auto weights = WeightVector::uniform(8);
  const double a = 3.0;
  REQUIRE(2.0 * a / weights.min() >= a * a);
  CHECK(bound_parallel(X, A, weights) >= bound_iusem(X, A));
}

TEST_CASE("distance-ratio lower bound for hyperplane systems") {
  Vector e1(2), h2(2);
  e1 << 1, 0;
  CHECK(mu_lower_bound({e1}) == doctest::Approx(1.0));

  Vector e2(2);
  e2 << 0, 1;
  CHECK(mu_lower_bound({e1, e2}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  h2 << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  // M = [[1, 1/sqrt2],[0, 1/sqrt2]]: M^T M has eigenvalues 1 +- 1/sqrt2
  const double smin = std::sqrt(1.0 - 1.0 / std::sqrt(2.0));
  CHECK(mu_lower_bound({e1, h2}) == doctest::Approx(smin / std::sqrt(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(mu_lower_bound({Vector::Zero(2)}), DegenerateInputError);
}

TEST_CASE("rate bounds are invariant under common column scaling") {
  auto g = tu::rng(82);
  const Matrix X = tu::gauss_matrix(g, 10, 6);
  const std::vector<Eigen::Index> A{1, 3, 4};
  const double c = 3.7;
  CHECK(bound_iusem(X, A) == doctest::Approx(bound_iusem(Matrix(c * X), A)).epsilon(1e-12));
  CHECK(bound_deutsch(X, A) == doctest::Approx(bound_deutsch(Matrix(c * X), A)).epsilon(1e-12));
}

TEST_CASE("empirical ratios from traces") {
  auto g = tu::rng(83);

  SUBCASE("a trace already at the solution yields no ratios") {
    const Matrix X = Matrix::Identity(3, 3);
    Vector y(3);
    y << 3, 0.2, -2;
    auto prob = lasso_problem(X, y, 1.0);
    StopRule stop;
    stop.max_sweeps = 8;
    stop.tol_change = 1e-16;
    const auto res = block_cd(prob, stop, Vector(), SnapshotMode::on);
    const auto [w_star, cert] = reference_lasso(X, y, 1.0, 1e-14);
    const auto rep = empirical_rate(res.trace, X, w_star);
    CHECK(rep.empirical_ratios.empty());  // exact from sweep 1 in the orthogonal design
    REQUIRE(rep.support_id_iter.has_value());
    CHECK(*rep.support_id_iter == 1);
  }

  SUBCASE("post-identification ratios respect both serial bounds") {
    const Eigen::Index n = 50, p = 100;
    const Matrix X = tu::gauss_matrix(g, n, p);
    Vector beta = Vector::Zero(p);
    beta.head(5).setOnes();
    const Vector y = X * beta + 0.5 * tu::gauss_vector(g, n);
    const double lambda = 0.35 * (X.transpose() * y).lpNorm<Eigen::Infinity>();

    const auto [w_star, cert] = reference_lasso(X, y, lambda, 1e-12);
    // the traced run halts while still far above the certificate's error
    // floor, so the measured ratios stay out of the oracle noise
    const double optimum = criterion(lasso_problem(X, y, lambda), w_star);
    StopRule stop;
    stop.max_sweeps = 4000;
    stop.tol_change = 1e-15;
    stop.target_criterion = optimum + 1e-8;
    const auto res = lasso_cd(X, y, lambda, stop, SnapshotMode::on);
    const auto rep = make_rate_report(res.trace, X, w_star);

    REQUIRE(rep.support_id_iter.has_value());
    CHECK(rep.bound_iusem < 1.0);
    CHECK(rep.bound_deutsch < 1.0);
    for (size_t i = 0; i < rep.empirical_ratios.size(); ++i) {
      if (rep.ratio_sweeps[i] < *rep.support_id_iter + 2) continue;
      CHECK(rep.empirical_ratios[i] <= rep.bound_iusem + 1e-8);
      CHECK(rep.empirical_ratios[i] <= rep.bound_deutsch + 1e-8);
    }
  }

  SUBCASE("traces without snapshots are rejected") {
    const Matrix X = Matrix::Identity(3, 3);
    Vector y(3);
    y << 3, 0.2, -2;
    auto prob = lasso_problem(X, y, 1.0);
    StopRule stop;
    stop.max_sweeps = 4;
    const auto res = block_cd(prob, stop, Vector(), SnapshotMode::off);
    CHECK_THROWS_AS(empirical_rate(res.trace, X, y), DataError);
  }
}

TEST_CASE("rate report serializes to JSON") {
  auto g = tu::rng(84);
  const Matrix X = Matrix::Identity(3, 3);
  Vector y(3);
  y << 3, 0.2, -2;
  auto prob = lasso_problem(X, y, 1.0);
  StopRule stop;
  stop.max_sweeps = 6;
  const auto res = block_cd(prob, stop, Vector(), SnapshotMode::on);
  const auto [w_star, cert] = reference_lasso(X, y, 1.0, 1e-14);
  const auto rep = make_rate_report(res.trace, X, w_star, WeightVector::uniform(3));
  const std::string json = rep.to_json();
  CHECK(json.find("\"bound_iusem\"") != std::string::npos);
  CHECK(json.find("\"bound_parallel\"") != std::string::npos);
  CHECK(json.find("\"support_id_iter\": 1") != std::string::npos);
}
