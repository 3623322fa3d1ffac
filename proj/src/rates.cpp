#include "dykcd/rates.hpp"

#include <cmath>
#include <sstream>

namespace dykcd {

namespace {

Matrix select_columns(const Matrix& X, const std::vector<Eigen::Index>& A) {
  Matrix XA(X.rows(), static_cast<Eigen::Index>(A.size()));
  for (size_t j = 0; j < A.size(); ++j) {
    if (A[j] < 0 || A[j] >= X.cols()) throw ShapeError("active index out of range");
    XA.col(static_cast<Eigen::Index>(j)) = X.col(A[j]);
  }
  return XA;
}

double min_eig_over_maxnorm(const Matrix& X, const std::vector<Eigen::Index>& A) {
  const Matrix XA = select_columns(X, A);
  if (!numerics::has_full_column_rank(XA))
    throw RankError("rate bound: active columns are rank deficient");
  const double lmin = numerics::min_eigenvalue(XA.transpose() * XA);
  double maxnorm2 = 0.0;
  for (Eigen::Index j = 0; j < XA.cols(); ++j)
    maxnorm2 = std::max(maxnorm2, XA.col(j).squaredNorm());
  return lmin / maxnorm2;
}

int sign_of(double v, double tol) { return v > tol ? 1 : (v < -tol ? -1 : 0); }

}  // namespace

std::vector<Eigen::Index> active_set(const Vector& w, double tol) {
  if (tol < 0) throw ParameterError("active_set: tolerance must be nonnegative");
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (std::abs(w(i)) > tol) idx.push_back(i);
  return idx;
}

double bound_iusem(const Matrix& X, const std::vector<Eigen::Index>& A) {
  if (A.empty()) return 0.0;
  const double a = static_cast<double>(A.size());
  const double c = min_eig_over_maxnorm(X, A);
  return std::sqrt(a * a / (a * a + c));
}

double bound_deutsch(const Matrix& X, const std::vector<Eigen::Index>& A) {
  if (A.empty()) return 0.0;
  for (size_t j = 1; j < A.size(); ++j)
    if (A[j] <= A[j - 1]) throw ParameterError("bound_deutsch: active set must ascend");
  const Matrix XA = select_columns(X, A);
  if (!numerics::has_full_column_rank(XA))
    throw RankError("rate bound: active columns are rank deficient");
  const size_t a = A.size();
  double prod = 1.0;  // empty product when a == 1
  for (size_t j = 0; j + 1 < a; ++j) {
    const Matrix tail = XA.rightCols(static_cast<Eigen::Index>(a - j - 1));
    const Vector col = XA.col(static_cast<Eigen::Index>(j));
    const Vector residual = numerics::orthocomplement_projection(tail, col);
    prod *= residual.squaredNorm() / col.squaredNorm();
  }
  const double inside = std::max(0.0, 1.0 - prod);
  return std::sqrt(inside);
}

double bound_parallel(const Matrix& X, const std::vector<Eigen::Index>& A,
                      const WeightVector& weights) {
  if (A.empty()) return 0.0;
  const double a = static_cast<double>(A.size());
  const double c = min_eig_over_maxnorm(X, A);
  const double q = 2.0 * a / weights.min();
  return std::sqrt(q / (q + c));
}

double mu_lower_bound(const std::vector<Vector>& normals) {
  if (normals.empty()) throw ParameterError("mu_lower_bound: needs at least one normal");
  const Eigen::Index n = normals.front().size();
  Matrix M(n, static_cast<Eigen::Index>(normals.size()));
  double max_norm = 0.0;
  for (size_t i = 0; i < normals.size(); ++i) {
    if (normals[i].size() != n) throw ShapeError("mu_lower_bound: mixed dimensions");
    const double nm = normals[i].norm();
    if (nm == 0.0) throw DegenerateInputError("mu_lower_bound: zero normal");
    max_norm = std::max(max_norm, nm);
    M.col(static_cast<Eigen::Index>(i)) = normals[i];
  }
  const double smin = numerics::min_nonzero_singular_value(M);
  return smin / (std::sqrt(static_cast<double>(normals.size())) * max_norm);
}

RateReport empirical_rate(const SolverTrace& trace, const Matrix& X, const Vector& w_star,
                          double support_tol) {
  RateReport report;
  std::vector<const Vector*> snaps;
  std::vector<int> sweeps;
  for (const auto& rec : trace.records)
    if (rec.w) {
      snaps.push_back(&*rec.w);
      sweeps.push_back(rec.k);
    }
  if (snaps.empty()) throw DataError("empirical_rate: trace carries no coefficient snapshots");
  for (const auto* w : snaps)
    if (w->size() != w_star.size() || X.cols() != w_star.size())
      throw ShapeError("empirical_rate: dimension mismatch");

  report.active = active_set(w_star, support_tol);
  report.a = static_cast<Eigen::Index>(report.active.size());

  // persistent sign-pattern identification
  std::vector<int> target(static_cast<size_t>(w_star.size()));
  for (Eigen::Index i = 0; i < w_star.size(); ++i)
    target[static_cast<size_t>(i)] = sign_of(w_star(i), support_tol);
  auto matches = [&](const Vector& w) {
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (sign_of(w(i), support_tol) != target[static_cast<size_t>(i)]) return false;
    return true;
  };
  std::optional<int> id_iter;
  for (size_t s = snaps.size(); s-- > 0;) {
    if (matches(*snaps[s]))
      id_iter = sweeps[s];
    else
      break;
  }
  report.support_id_iter = id_iter;

  std::vector<double> sigma_dist(snaps.size());
  for (size_t s = 0; s < snaps.size(); ++s) sigma_dist[s] = (X * (*snaps[s] - w_star)).norm();
  for (size_t s = 0; s + 1 < snaps.size(); ++s) {
    if (sigma_dist[s] < 1e-14) continue;  // omitted rather than reported as 0/0
    report.ratio_sweeps.push_back(sweeps[s]);
    report.empirical_ratios.push_back(sigma_dist[s + 1] / sigma_dist[s]);
  }
  return report;
}

RateReport make_rate_report(const SolverTrace& trace, const Matrix& X, const Vector& w_star,
                            const std::optional<WeightVector>& weights, double support_tol) {
  RateReport report = empirical_rate(trace, X, w_star, support_tol);
  if (!report.active.empty()) {
    report.bound_iusem = bound_iusem(X, report.active);
    report.bound_deutsch = bound_deutsch(X, report.active);
    if (weights) report.bound_parallel = bound_parallel(X, report.active, *weights);
    std::vector<Vector> normals;
    normals.reserve(report.active.size());
    for (Eigen::Index idx : report.active) normals.push_back(X.col(idx));
    report.mu_lower = mu_lower_bound(normals);
  }
  return report;
}

std::string RateReport::to_json() const {
  auto real_or_null = [](double v) {
    return std::isfinite(v) ? format_real(v) : std::string("null");
  };
  std::ostringstream os;
  os << "{\n  \"active\": [";
  for (size_t i = 0; i < active.size(); ++i) os << (i ? "," : "") << active[i];
  os << "],\n  \"a\": " << a;
  os << ",\n  \"bound_iusem\": " << real_or_null(bound_iusem);
  os << ",\n  \"bound_deutsch\": " << real_or_null(bound_deutsch);
  os << ",\n  \"bound_parallel\": " << real_or_null(bound_parallel);
  os << ",\n  \"mu_lower\": " << real_or_null(mu_lower);
  os << ",\n  \"support_id_iter\": ";
  if (support_id_iter)
    os << *support_id_iter;
  else
    os << "null";
  os << ",\n  \"ratio_sweeps\": [";
  for (size_t i = 0; i < ratio_sweeps.size(); ++i) os << (i ? "," : "") << ratio_sweeps[i];
  os << "],\n  \"empirical_ratios\": [";
  for (size_t i = 0; i < empirical_ratios.size(); ++i)
    os << (i ? "," : "") << format_real(empirical_ratios[i]);
  os << "]\n}\n";
  return os.str();
}

}  // namespace dykcd
