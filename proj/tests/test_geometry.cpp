#include <doctest.h>

#include <sstream>

#include "dykcd/geometry.hpp"
#include "dykcd/instance_io.hpp"
#include "test_util.hpp"

using namespace dykcd;
namespace tu = dykcd::testutil;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Every implemented set family at a fixed small dimension, for property tests.
std::vector<ConvexSet> sample_sets(std::mt19937_64& g) {
  std::vector<ConvexSet> sets;
  sets.push_back(ConvexSet::halfspace(tu::gauss_vector(g, 4), tu::uniform(g, -1, 1)));
  sets.push_back(ConvexSet::slab(tu::gauss_vector(g, 4), tu::uniform(g, 0.2, 2)));
  {
    Vector lo = tu::gauss_vector(g, 4);
    Vector hi = lo + Vector::Constant(4, 1.0).cwiseProduct(Vector::Ones(4) * tu::uniform(g, 0.5, 2));
    sets.push_back(ConvexSet::box(lo, hi));
  }
  sets.push_back(ConvexSet::l2_ball(tu::gauss_vector(g, 4), tu::uniform(g, 0.5, 2)));
  sets.push_back(ConvexSet::affine_subspace(tu::gauss_matrix(g, 4, 2), tu::gauss_vector(g, 4)));
  sets.push_back(ConvexSet::inverse_image(tu::gauss_matrix(g, 4, 2), Penalty::l1(0.8)));
  sets.push_back(ConvexSet::inverse_image(tu::gauss_matrix(g, 4, 2), Penalty::group_l2(1.1)));
  sets.push_back(ConvexSet::product({ConvexSet::slab(vec2(1, 0.5), 1.0),
                                     ConvexSet::l2_ball(vec2(0, 0), 1.0)}));
  sets.push_back(ConvexSet::consensus(2, 2));
  return sets;
}

// A member of the set, generated by projecting a random point.
Vector random_member(const ConvexSet& set, std::mt19937_64& g) {
  return set.project(tu::gauss_vector(g, set.dim()));
}

}  // namespace

TEST_CASE("projection examples") {
  const auto hs = ConvexSet::halfspace(vec2(1, 0), 1.0);
  CHECK((hs.project(vec2(2, 0)) - vec2(1, 0)).norm() == doctest::Approx(0.0));

  const auto slab = ConvexSet::slab(vec2(1, 0), 1.0);
  CHECK((slab.project(vec2(2, 3)) - vec2(1, 3)).norm() == doctest::Approx(0.0));

  const auto cons = ConvexSet::consensus(2, 2);
  Vector x(4);
  x << 1, 1, 3, 3;
  Vector expected(4);
  expected << 2, 2, 2, 2;
  CHECK((cons.project(x) - expected).norm() == doctest::Approx(0.0));
}

TEST_CASE("projection shape errors") {
  const auto hs = ConvexSet::halfspace(vec2(1, 0), 1.0);
  CHECK_THROWS_AS(hs.project(Vector::Zero(3)), ShapeError);
  CHECK_THROWS_AS(ConvexSet::halfspace(Vector::Zero(2), 1.0), ParameterError);
  CHECK_THROWS_AS(ConvexSet::box(vec2(1, 0), vec2(0, 1)), ParameterError);
  Matrix rank_def(3, 2);
  rank_def << 1, 1, 2, 2, 3, 3;
  CHECK_THROWS_AS(ConvexSet::inverse_image(rank_def, Penalty::l1(1.0)), RankError);
}

TEST_CASE("projections are idempotent and nonexpansive") {
  auto g = tu::rng(21);
  auto sets = sample_sets(g);
  for (const auto& set : sets) {
    for (int rep = 0; rep < 25; ++rep) {
      const Vector x = 3.0 * tu::gauss_vector(g, set.dim());
      const Vector y = 3.0 * tu::gauss_vector(g, set.dim());
      const Vector px = set.project(x);
      const Vector py = set.project(y);
      CHECK((set.project(px) - px).lpNorm<Eigen::Infinity>() <= 1e-12);
      CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
    }
  }
}

TEST_CASE("obtuse-angle inequality at the projection") {
  auto g = tu::rng(22);
  auto sets = sample_sets(g);
  for (const auto& set : sets) {
    const Vector x = 3.0 * tu::gauss_vector(g, set.dim());
    const Vector px = set.project(x);
    for (int rep = 0; rep < 20; ++rep) {
      const Vector c = random_member(set, g);
      CHECK((x - px).dot(c - px) <= 1e-10 * (1.0 + x.norm()) * (1.0 + c.norm()));
    }
  }
}

TEST_CASE("membership is consistent with projection distance") {
  auto g = tu::rng(23);
  auto sets = sample_sets(g);
  for (const auto& set : sets) {
    const Vector inside = random_member(set, g);
    CHECK(set.contains(inside, 1e-10));
    const Vector far = inside + Vector::Constant(set.dim(), 10.0);
    CHECK(set.contains(far, 1e-10) == (set.distance(far) <= 1e-10));
  }
}

TEST_CASE("block_update closed forms") {
  Matrix e1(2, 1);
  e1 << 1, 0;

  Vector b(2);
  b << 3, 5;
  Vector w = block_update(e1, Penalty::l1(1.0), b);
  CHECK(w(0) == doctest::Approx(2.0).epsilon(1e-14));

  b << 0.5, 7;
  w = block_update(e1, Penalty::l1(1.0), b);
  CHECK(w(0) == 0.0);

  // orthonormal design group shrinkage: factor 1 - lambda/||b|| = 0.8
  Vector b2 = vec2(3, 4);
  const Vector wg = block_update(Matrix::Identity(2, 2), Penalty::group_l2(1.0), b2);
  CHECK(wg(0) == doctest::Approx(2.4).epsilon(1e-10));
  CHECK(wg(1) == doctest::Approx(3.2).epsilon(1e-10));
}

TEST_CASE("group update agrees with a long proximal-gradient oracle") {
  auto g = tu::rng(24);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix X = tu::gauss_matrix(g, 8, 3);
    const Vector b = 2.0 * tu::gauss_vector(g, 8);
    const double lam = tu::uniform(g, 0.3, 2.0);
    const Vector w = block_update(X, Penalty::group_l2(lam), b);

    // oracle: plain proximal gradient run far past the root-finder's tolerance
    const Matrix G = X.transpose() * X;
    const Vector q = X.transpose() * b;
    const double step = 1.0 / (G.norm() + 1.0);
    Vector v = Vector::Zero(3);
    for (int it = 0; it < 200000; ++it) {
      Vector z = v - step * (G * v - q);
      const double nz = z.norm();
      v = (nz <= lam * step) ? Vector::Zero(3) : Vector((1.0 - lam * step / nz) * z);
    }
    CHECK((w - v).lpNorm<Eigen::Infinity>() <= 1e-7);
  }
}

TEST_CASE("residual_map examples and identity") {
  Matrix e1(2, 1);
  e1 << 1, 0;
  Vector b(2);
  b << 3, 5;
  CHECK((residual_map(e1, Penalty::l1(1.0), b) - vec2(2, 0)).norm() == doctest::Approx(0.0));
  CHECK(residual_map(e1, Penalty::l1(1.0), Vector::Zero(2)).norm() == doctest::Approx(0.0));
  CHECK(residual_map(e1, Penalty::l1(10.0), b).norm() == doctest::Approx(0.0));
}

TEST_CASE("blockwise minimization matches the residual of the set projection") {
  // the identity X_i w_hat = b - P(b) over random draws
  auto g = tu::rng(25);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::Index cols = 1 + static_cast<Eigen::Index>(g() % 3);
    const Matrix X = tu::gauss_matrix(g, 6, cols);
    const Vector b = 2.0 * tu::gauss_vector(g, 6);
    Penalty pen = Penalty::l1(0.7);
    switch (rep % 4) {
      case 0: pen = Penalty::l1(tu::uniform(g, 0.1, 2)); break;
      case 1: pen = Penalty::group_l2(tu::uniform(g, 0.1, 2)); break;
      case 2: pen = Penalty::linf(tu::uniform(g, 0.1, 2)); break;
      case 3: pen = Penalty::zero(); break;
    }
    const Vector lhs = X * block_update(X, pen, b);
    const Vector rhs = b - ConvexSet::inverse_image(X, pen).project(b);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-9);

    // the projection really is the nearest member: inside the set and obtuse
    const Vector pb = b - lhs;
    CHECK(pen.dual_member(X.transpose() * pb, 1e-8));
  }
}

TEST_CASE("support_value examples") {
  CHECK(support_value(Penalty::l1(2.0), vec2(1, -3)) == doctest::Approx(8.0));
  CHECK(support_value(Penalty::group_l2(1.0), vec2(3, 4)) == doctest::Approx(5.0));
  CHECK(support_value(Penalty::linf(1.5), Vector::Zero(3)) == doctest::Approx(0.0));
  CHECK(support_value(Penalty::zero(), vec2(9, 9)) == doctest::Approx(0.0));
}

TEST_CASE("support_value dominates sampled inner products over the dual set") {
  auto g = tu::rng(26);
  const Eigen::Index dim = 3;
  const double lam = 1.3;
  const Vector v = tu::gauss_vector(g, dim);

  auto check_penalty = [&](const Penalty& pen, auto sample_dual) {
    const double closed = support_value(pen, v);
    double sampled = -1e300;
    for (int i = 0; i < 10000; ++i) sampled = std::max(sampled, v.dot(sample_dual()));
    CHECK(sampled <= closed + 1e-12);
    CHECK(closed >= 0.0);
  };

  check_penalty(Penalty::l1(lam), [&] {
    Vector d(dim);
    for (Eigen::Index i = 0; i < dim; ++i) d(i) = tu::uniform(g, -lam, lam);
    return d;
  });
  check_penalty(Penalty::group_l2(lam), [&] {
    Vector d = tu::gauss_vector(g, dim);
    const double r = lam * std::pow(tu::uniform(g), 1.0 / 3.0);
    return Vector((r / d.norm()) * d);
  });
  check_penalty(Penalty::linf(lam), [&] {
    // uniform over the cross-polytope via exponential spacings and signs
    Vector e(dim);
    for (Eigen::Index i = 0; i < dim; ++i) e(i) = -std::log(tu::uniform(g, 1e-12, 1.0));
    e *= lam * tu::uniform(g) / e.sum();
    for (Eigen::Index i = 0; i < dim; ++i)
      if (tu::uniform(g) < 0.5) e(i) = -e(i);
    return e;
  });
}

TEST_CASE("criterion examples") {
  auto g = tu::rng(27);
  const Matrix X = tu::gauss_matrix(g, 5, 4);
  const Vector y = tu::gauss_vector(g, 5);
  auto prob = lasso_problem(X, y, 0.7);
  CHECK(criterion(prob, Vector::Zero(4)) == doctest::Approx(0.5 * y.squaredNorm()));

  auto interp = lasso_problem(Matrix::Identity(4, 4), Vector::Ones(4), 0.0);
  CHECK(criterion(interp, Vector::Ones(4)) == doctest::Approx(0.0));

  Matrix I2 = Matrix::Identity(2, 2);
  Vector y2 = vec2(3, 0);
  auto prob2 = lasso_problem(I2, y2, 1.0);
  const Vector w2 = vec2(2, 0);
  // direct arithmetic: 1/2 * ||(1,0)||^2 + 1*|2| = 2.5
  CHECK(criterion(prob2, w2) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(criterion(prob2, Vector::Zero(3)), ShapeError);
}

TEST_CASE("l1 ball projection keeps the radius and minimizes distance") {
  auto g = tu::rng(28);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector v = 2.0 * tu::gauss_vector(g, 5);
    const double radius = tu::uniform(g, 0.1, 3.0);
    const Vector p = project_l1_ball(v, radius);
    CHECK(p.lpNorm<1>() <= radius + 1e-12);
    // optimality against random feasible points
    for (int c = 0; c < 10; ++c) {
      Vector q = tu::gauss_vector(g, 5);
      q = project_l1_ball(q, radius);
      CHECK((v - p).squaredNorm() <= (v - q).squaredNorm() + 1e-10);
    }
  }
}

TEST_CASE("instance JSON round trip is exact") {
  auto g = tu::rng(29);
  const Matrix X = tu::gauss_matrix(g, 6, 5);
  const Vector y = tu::gauss_vector(g, 6);
  std::vector<Block> blocks;
  blocks.push_back(Block{X.leftCols(2), Penalty::group_l2(0.9)});
  blocks.push_back(Block{X.middleCols(2, 1), Penalty::l1(1.7)});
  blocks.push_back(Block{X.rightCols(2), Penalty::zero()});
  Instance inst{RegressionProblem(y, std::move(blocks)), SmoothLoss::logistic(Vector::Zero(6))};

  std::stringstream ss;
  write_instance_json(ss, inst);
  const Instance back = read_instance_json(ss);

  CHECK(back.problem.n() == inst.problem.n());
  CHECK(back.problem.p() == inst.problem.p());
  CHECK(back.problem.d() == inst.problem.d());
  CHECK((back.problem.y() - inst.problem.y()).lpNorm<Eigen::Infinity>() == 0.0);
  for (Eigen::Index i = 0; i < back.problem.d(); ++i) {
    const auto& a = back.problem.blocks()[static_cast<size_t>(i)];
    const auto& b = inst.problem.blocks()[static_cast<size_t>(i)];
    CHECK((a.X - b.X).lpNorm<Eigen::Infinity>() == 0.0);  // %.17g round-trips exactly
    CHECK(a.penalty.kind() == b.penalty.kind());
    CHECK(a.penalty.lambda() == b.penalty.lambda());
  }
  REQUIRE(back.loss.has_value());
  CHECK(back.loss->kind() == SmoothLoss::Kind::logistic);

  const Vector w = tu::gauss_vector(g, 5);
  CHECK(criterion(back.problem, w) == criterion(inst.problem, w));

  std::stringstream bad("{\"y\": [1,2], \"blocks\": \"nope\"}");
  CHECK_THROWS_AS(read_instance_json(bad), DataError);
}
