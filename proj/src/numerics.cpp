#include "dykcd/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace dykcd::numerics {

double min_eigenvalue(const Matrix& G) {
  if (G.rows() != G.cols()) throw ShapeError("min_eigenvalue: matrix must be square");
  const double scale = G.cwiseAbs().maxCoeff();
  if (scale > 0) {
    const double asym = (G - G.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) throw ShapeError("min_eigenvalue: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  double lam = es.eigenvalues().minCoeff();
  if (lam < 0 && lam > -1e-10 * std::max(1.0, scale)) lam = 0.0;
  return lam;
}

double min_nonzero_singular_value(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0)
    throw DegenerateInputError("min_nonzero_singular_value: all-zero matrix");
  const double thresh = kRankTol * sv(0);
  double smallest = sv(0);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) smallest = sv(i);
  return smallest;
}

Vector orthocomplement_projection(const Matrix& M, const Vector& v) {
  if (M.rows() != v.size())
    throw ShapeError("orthocomplement_projection: row count must match vector length");
  if (M.cols() == 0) return v;
  // Orthonormal basis of col(M) via thin QR with column pivoting (rank safe).
  Eigen::ColPivHouseholderQR<Matrix> qr(M);
  const Eigen::Index r = qr.rank();
  if (r == 0) return v;
  Matrix Q = qr.householderQ() * Matrix::Identity(M.rows(), r);
  return v - Q * (Q.transpose() * v);
}

bool has_full_column_rank(const Matrix& A) {
  if (A.cols() == 0) return true;
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0) return false;
  return sv(sv.size() - 1) > kRankTol * sv(0);
}

Vector least_squares(const Matrix& A, const Vector& b) {
  if (A.rows() != b.size()) throw ShapeError("least_squares: row count must match rhs length");
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return Vector(0);
  if (sv(0) == 0.0 || sv(sv.size() - 1) <= kRankTol * sv(0))
    throw RankError("least_squares: rank-deficient matrix");
  return svd.solve(b);
}

}  // namespace dykcd::numerics
