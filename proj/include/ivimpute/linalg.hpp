#pragma once

#include <cstddef>
#include <vector>

#include "ivimpute/matrix.hpp"

namespace ivimpute {

// A matrix counts as rank deficient when the smallest-to-largest ratio of
// the pivoted R diagonal (a singular-value surrogate) drops below this.
inline constexpr double kRankRatioTol = 1e-10;

// Householder QR with column pivoting of an m x k matrix (m >= k).
// R is stored on and above the diagonal, the Householder vectors below it.
class QRPivoted {
 public:
  explicit QRPivoted(Matrix a);

  std::size_t rows() const { return a_.rows(); }
  std::size_t cols() const { return a_.cols(); }

  // First k entries of Q'v.
  Vector qt_head(const Vector& v) const;

  // Solves R x = c (c of length k) and undoes the column permutation.
  Vector r_solve(const Vector& c) const;

  // Least-squares solution of the factored matrix against b.
  Vector solve(const Vector& b) const { return r_solve(qt_head(b)); }

  // min |R_jj| / max |R_jj|; zero when the matrix is exactly singular.
  double rank_ratio() const;

  double r_diag(std::size_t j) const { return a_(j, j); }

 private:
  Matrix a_;
  std::vector<double> tau_;
  std::vector<std::size_t> perm_;
};

// Cholesky factor (lower triangular) of a symmetric positive definite
// matrix. Throws EstimationError when a pivot is not positive.
Matrix cholesky(const Matrix& s);

// Solves S x = b given the Cholesky factor of S.
Vector chol_solve(const Matrix& l, const Vector& b);

// Solves S X = B column by column.
Matrix chol_solve_matrix(const Matrix& l, const Matrix& b);

// S^{-1} for small SPD matrices (population-moment formulas).
Matrix spd_inverse(const Matrix& s);

}  // namespace ivimpute
