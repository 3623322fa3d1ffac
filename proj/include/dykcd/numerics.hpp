#pragma once

#include <Eigen/Dense>

#include "dykcd/errors.hpp"

namespace dykcd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace numerics {

// Rank threshold, relative to the largest singular value.  Near-rank-deficient
// inputs are rejected rather than silently accepted.
inline constexpr double kRankTol = 1e-10;

// Smallest eigenvalue of a symmetric PSD matrix.  Values within kRankTol
// below zero are clamped to 0.  Throws ShapeError for non-square or
// asymmetric (relative asymmetry > 1e-10) input.
double min_eigenvalue(const Matrix& G);

// Smallest singular value above kRankTol * sigma_max.  Throws
// DegenerateInputError for an all-zero matrix.
double min_nonzero_singular_value(const Matrix& M);

// (I - P) v where P is the orthogonal projection onto the column span of M.
Vector orthocomplement_projection(const Matrix& M, const Vector& v);

// Unique minimizer of ||b - A x||_2 for full-column-rank A.  Throws RankError
// if sigma_min(A) <= kRankTol * sigma_max(A).
Vector least_squares(const Matrix& A, const Vector& b);

// sigma_min(A) > kRankTol * sigma_max(A)?
bool has_full_column_rank(const Matrix& A);

}  // namespace numerics
}  // namespace dykcd
