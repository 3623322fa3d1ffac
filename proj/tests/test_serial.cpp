#include <doctest.h>

#include "dykcd/harness.hpp"
#include "dykcd/serial.hpp"
#include "test_util.hpp"

using namespace dykcd;
namespace tu = dykcd::testutil;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Projection onto an intersection of halfspaces via projected gradient on the
// dual QP  min_{nu >= 0} 1/2 ||A^T nu||^2 - nu^T (A y - b),  u = y - A^T nu.
Vector dual_qp_projection(const std::vector<Halfspace>& hs, const Vector& y, int iters) {
  const int m = static_cast<int>(hs.size());
  Matrix A(m, y.size());
  Vector b(m);
  for (int i = 0; i < m; ++i) {
    A.row(i) = hs[static_cast<size_t>(i)].normal.transpose();
    b(i) = hs[static_cast<size_t>(i)].offset;
  }
  const Matrix G = A * A.transpose();
  const Vector q = A * y - b;
  const double step = 1.0 / (G.norm() + 1.0);
  Vector nu = Vector::Zero(m);
  for (int it = 0; it < iters; ++it) nu = (nu - step * (G * nu - q)).cwiseMax(0.0);
  return y - A.transpose() * nu;
}

}  // namespace

TEST_CASE("cyclic corrected projections: orthant corner in one sweep") {
  std::vector<ConvexSet> sets{ConvexSet::halfspace(vec2(1, 0), 0.0),
                              ConvexSet::halfspace(vec2(0, 1), 0.0)};
  StopRule stop;
  stop.max_sweeps = 1;
  const auto res = dykstra(ApproxProblem{vec2(1, 1), sets}, stop);
  CHECK(res.point.lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("cyclic corrected projections: single set is one projection") {
  auto g = tu::rng(31);
  const auto ball = ConvexSet::l2_ball(tu::gauss_vector(g, 3), 0.5);
  const Vector y = 4.0 * tu::gauss_vector(g, 3);
  StopRule stop;
  stop.max_sweeps = 1;
  const auto res = dykstra(ApproxProblem{y, {ball}}, stop);
  CHECK((res.point - ball.project(y)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("cyclic corrected projections agree with the dual QP oracle") {
  auto g = tu::rng(32);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<Halfspace> hs{{tu::gauss_vector(g, 2), -0.5}, {tu::gauss_vector(g, 2), -0.7}};
    const Vector y = vec2(2.0 + tu::uniform(g), 1.5);
    std::vector<ConvexSet> sets;
    for (const auto& h : hs) sets.push_back(ConvexSet::halfspace(h.normal, h.offset));
    StopRule stop;
    stop.max_sweeps = 20000;
    stop.tol_change = 1e-14;
    const auto res = dykstra(ApproxProblem{y, sets}, stop);
    const Vector oracle = dual_qp_projection(hs, y, 400000);
    CHECK((res.point - oracle).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("iterate lands inside its set right after each inner projection") {
  auto g = tu::rng(33);
  std::vector<ConvexSet> sets{ConvexSet::slab(tu::gauss_vector(g, 3), 0.8),
                              ConvexSet::halfspace(tu::gauss_vector(g, 3), 0.1),
                              ConvexSet::l2_ball(tu::gauss_vector(g, 3), 1.5)};
  const Vector y = 3.0 * tu::gauss_vector(g, 3);
  StopRule stop;
  stop.max_sweeps = 50;
  bool all_inside = true;
  dykstra(ApproxProblem{y, sets}, stop, [&](int, int i, const Vector& u, const Vector&) {
    all_inside = all_inside && sets[static_cast<size_t>(i)].contains(u, 1e-10);
  });
  CHECK(all_inside);
}

TEST_CASE("limit optimality against oracle-generated feasible points") {
  auto g = tu::rng(34);
  std::vector<ConvexSet> sets{ConvexSet::halfspace(vec2(1, 0.2), -0.1),
                              ConvexSet::halfspace(vec2(-0.3, 1), -0.2)};
  const Vector y = vec2(1.4, 1.1);
  StopRule stop;
  stop.max_sweeps = 50000;
  stop.tol_change = 1e-14;
  const auto res = dykstra(ApproxProblem{y, sets}, stop);
  REQUIRE(res.trace.status == SolveStatus::converged);
  for (int rep = 0; rep < 30; ++rep) {
    Vector c = 2.0 * tu::gauss_vector(g, 2);
    c = sets[0].project(c);
    c = sets[1].project(c);
    if (!sets[0].contains(c, 1e-12)) continue;
    CHECK((y - res.point).dot(c - res.point) <= 1e-8);
  }
}

TEST_CASE("plain cyclic projections") {
  // two orthogonal lines through the origin meet only at 0
  Matrix b1(2, 1), b2(2, 1);
  b1 << 1, 0;
  b2 << 0, 1;
  std::vector<ConvexSet> lines{ConvexSet::affine_subspace(b1, Vector::Zero(2)),
                               ConvexSet::affine_subspace(b2, Vector::Zero(2))};
  StopRule stop;
  stop.max_sweeps = 200;
  stop.tol_change = 1e-14;
  auto res = alternating_projections(ApproxProblem{vec2(1, 1), lines}, stop);
  CHECK(res.point.lpNorm<Eigen::Infinity>() <= 1e-12);

  // a feasible anchor is a fixed point
  std::vector<ConvexSet> hs{ConvexSet::halfspace(vec2(1, 0), 1.0),
                            ConvexSet::halfspace(vec2(0, 1), 1.0)};
  StopRule one;
  one.max_sweeps = 1;
  auto fixed = alternating_projections(ApproxProblem{vec2(0.5, 0.5), hs}, one);
  CHECK((fixed.point - vec2(0.5, 0.5)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("uncorrected cyclic projections find a feasible point, not the projection") {
  // crafted: two slanted halfspaces through distinct facets
  std::vector<Halfspace> hs{{vec2(1, 0.9), 0.0}, {vec2(1, -0.9), 0.0}};
  std::vector<ConvexSet> sets{ConvexSet::halfspace(hs[0].normal, 0.0),
                              ConvexSet::halfspace(hs[1].normal, 0.0)};
  const Vector y = vec2(2.0, 0.3);
  StopRule stop;
  stop.max_sweeps = 100000;
  stop.tol_change = 1e-14;
  const auto ap = alternating_projections(ApproxProblem{y, sets}, stop);
  const auto dyk = dykstra(ApproxProblem{y, sets}, stop);
  const Vector oracle = dual_qp_projection(hs, y, 400000);

  CHECK(sets[0].contains(ap.point, 1e-9));
  CHECK(sets[1].contains(ap.point, 1e-9));
  CHECK((dyk.point - oracle).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK((ap.point - dyk.point).lpNorm<Eigen::Infinity>() > 1e-3);
}

TEST_CASE("blockwise minimization: orthogonal design decouples") {
  auto prob = lasso_problem(Matrix::Identity(2, 2), vec2(3, 0.5), 1.0);
  StopRule stop;
  stop.max_sweeps = 3;
  const auto res = block_cd(prob, stop);
  CHECK(res.w(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(res.w(1) == 0.0);
  REQUIRE(res.trace.records.size() >= 2);
  CHECK(res.trace.records[0].criterion == doctest::Approx(res.trace.records[1].criterion));
}

TEST_CASE("blockwise minimization: unpenalized square system reaches the solve") {
  auto g = tu::rng(35);
  Matrix X = tu::gauss_matrix(g, 4, 4) + 4.0 * Matrix::Identity(4, 4);
  const Vector y = tu::gauss_vector(g, 4);
  auto prob = lasso_problem(X, y, 0.0);
  StopRule stop;
  stop.max_sweeps = 20000;
  stop.tol_change = 1e-14;
  const auto res = block_cd(prob, stop);
  CHECK((X * res.w - y).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("blockwise minimization reaches the certified optimum") {
  auto g = tu::rng(36);
  const Matrix X = tu::gauss_matrix(g, 20, 30);
  const Vector y = tu::gauss_vector(g, 20) * 2.0;
  auto prob = lasso_problem(X, y, 1.0);
  StopRule stop;
  stop.max_sweeps = 100000;
  stop.tol_change = 1e-15;
  const auto res = block_cd(prob, stop);
  const auto [w_star, cert] = reference_lasso(X, y, 1.0, 1e-12);
  CHECK(criterion(prob, res.w) <= criterion(prob, w_star) + 1e-8);
}

TEST_CASE("criterion is nonincreasing across sweeps") {
  auto g = tu::rng(37);
  const Matrix X = tu::gauss_matrix(g, 15, 24);
  const Vector y = 2.0 * tu::gauss_vector(g, 15);
  auto prob = grouped_problem(X, y, std::vector<Eigen::Index>(8, 3), 0.8);
  StopRule stop;
  stop.max_sweeps = 60;
  const auto res = block_cd(prob, stop);
  for (size_t k = 1; k < res.trace.records.size(); ++k)
    CHECK(res.trace.records[k].criterion <= res.trace.records[k - 1].criterion + 1e-12);
}

TEST_CASE("halfspace specialization: single halfspace and feasible anchor") {
  std::vector<Halfspace> hs{{vec2(1, 0), 1.0}};
  StopRule stop;
  stop.max_sweeps = 5;
  auto res = hildreth(hs, vec2(3, 2), stop);
  CHECK((res.point - vec2(1, 2)).lpNorm<Eigen::Infinity>() <= 1e-14);

  auto feas = hildreth(hs, vec2(0.2, -1), stop);
  CHECK((feas.point - vec2(0.2, -1)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(feas.multipliers.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("halfspace specialization tracks the slab run on split systems") {
  auto g = tu::rng(38);
  const Matrix X = tu::gauss_matrix(g, 5, 7);
  const double lambda = 0.8;
  const Vector y = 2.0 * tu::gauss_vector(g, 5);

  const auto slabs = lasso_slabs(X, lambda);
  const auto halves = lasso_split_halfspaces(X, lambda);

  // record the end-of-pair iterates of the split run and end-of-set iterates
  // of the slab run; the stop rule may fire one sweep apart near the fixed
  // point, so the comparison runs over the common prefix
  std::vector<Vector> slab_iters, half_iters;
  StopRule stop;
  stop.max_sweeps = 40;
  stop.tol_change = 1e-300;
  dykstra(ApproxProblem{y, slabs}, stop, [&](int, int, const Vector& u, const Vector&) {
    slab_iters.push_back(u);
  });
  hildreth(halves, y, stop, [&](int, int i, const Vector& u, const Vector&) {
    if (i % 2 == 1) half_iters.push_back(u);
  });
  const size_t m = std::min(slab_iters.size(), half_iters.size());
  REQUIRE(m >= 35 * 7);
  double dev = 0.0;
  for (size_t i = 0; i < m; ++i)
    dev = std::max(dev, (slab_iters[i] - half_iters[i]).lpNorm<Eigen::Infinity>());
  CHECK(dev <= 1e-10);
}

TEST_CASE("soft-threshold solver basics") {
  auto g = tu::rng(39);
  const Matrix X = tu::gauss_matrix(g, 10, 6);
  const Vector y = tu::gauss_vector(g, 10);
  const double lam_max = (X.transpose() * y).lpNorm<Eigen::Infinity>();

  StopRule stop;
  stop.max_sweeps = 100;
  auto res = lasso_cd(X, y, lam_max * 1.01, stop);
  CHECK(res.w.lpNorm<Eigen::Infinity>() == 0.0);

  auto res2 = lasso_cd(Matrix::Identity(2, 2), vec2(3, 0.5), 1.0, stop);
  CHECK(res2.w(0) == doctest::Approx(2.0));
  CHECK(res2.w(1) == 0.0);

  Matrix with_zero(4, 2);
  with_zero.setZero();
  with_zero.col(0) = tu::gauss_vector(g, 4);
  CHECK_THROWS_AS(lasso_cd(with_zero, tu::gauss_vector(g, 4), 1.0, stop), RankError);
}

TEST_CASE("soft-threshold solver is certified on a random instance") {
  auto g = tu::rng(40);
  const Matrix X = tu::gauss_matrix(g, 40, 60);
  const Vector y = 2.0 * tu::gauss_vector(g, 40);
  StopRule stop;
  stop.max_sweeps = 200000;
  stop.tol_change = 1e-15;
  const auto res = lasso_cd(X, y, 1.0, stop);
  const auto rep = kkt_check(X, y, 1.0, res.w, 1e-8);
  CHECK(rep.pass);
}

TEST_CASE("soft-threshold solver honors a duality-gap stop") {
  auto g = tu::rng(42);
  const Matrix X = tu::gauss_matrix(g, 25, 40);
  const Vector y = 2.0 * tu::gauss_vector(g, 25);
  StopRule stop;
  stop.max_sweeps = 200000;
  stop.tol_change = 1e-300;  // gap rule alone must trigger
  stop.tol_gap = 1e-9;
  const auto res = lasso_cd(X, y, 1.0, stop);
  CHECK(res.trace.status == SolveStatus::converged);
  const Vector r = y - X * res.w;
  const double crit = 0.5 * r.squaredNorm() + res.w.lpNorm<1>();
  const double dn = (X.transpose() * r).lpNorm<Eigen::Infinity>();
  const Vector u = (dn > 1.0 ? 1.0 / dn : 1.0) * r;
  CHECK(crit - (u.dot(y) - 0.5 * u.squaredNorm()) <= 1e-9);
}

TEST_CASE("duality identity holds sweep by sweep") {
  auto g = tu::rng(41);

  SUBCASE("one sweep on a generic instance") {
    const Matrix X = tu::gauss_matrix(g, 12, 9);
    auto prob = lasso_problem(X, 2.0 * tu::gauss_vector(g, 12), 0.9);
    StopRule stop;
    stop.max_sweeps = 1;
    CHECK(equivalence_check(prob, stop) <= 1e-10);
  }

  SUBCASE("identity design, many sweeps") {
    auto prob = lasso_problem(Matrix::Identity(6, 6), 2.0 * tu::gauss_vector(g, 6), 0.5);
    StopRule stop;
    stop.max_sweeps = 50;
    CHECK(equivalence_check(prob, stop) <= 1e-10);
  }

  SUBCASE("grouped blocks, iterative inner solves") {
    const Matrix X = tu::gauss_matrix(g, 20, 30);
    auto prob = grouped_problem(X, 2.0 * tu::gauss_vector(g, 20),
                                std::vector<Eigen::Index>(10, 3), 1.0);
    StopRule stop;
    stop.max_sweeps = 100;
    CHECK(equivalence_check(prob, stop) <= 1e-9);
  }
}
