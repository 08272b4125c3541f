#include "ivimpute/linalg.hpp"

#include <cmath>
#include <numeric>

#include "ivimpute/errors.hpp"
#include "ivimpute/kernels.hpp"

namespace ivimpute {

QRPivoted::QRPivoted(Matrix a) : a_(std::move(a)) {
  const std::size_t m = a_.rows();
  const std::size_t k = a_.cols();
  if (m < k) throw EstimationError("QR: fewer rows than columns");
  tau_.assign(k, 0.0);
  perm_.resize(k);
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  const auto& ops = kernels::active();

  for (std::size_t j = 0; j < k; ++j) {
    // Column pivot on the remaining norm; k is small, recomputing is fine.
    std::size_t pivot = j;
    double best = -1.0;
    for (std::size_t c = j; c < k; ++c) {
      const double* col = a_.col(c) + j;
      const double nrm2 = ops.dot(col, col, m - j);
      if (nrm2 > best) {
        best = nrm2;
        pivot = c;
      }
    }
    if (pivot != j) {
      for (std::size_t i = 0; i < m; ++i)
        std::swap(a_(i, j), a_(i, pivot));
      std::swap(perm_[j], perm_[pivot]);
    }

    double* colj = a_.col(j) + j;
    const double sigma = std::sqrt(ops.dot(colj, colj, m - j));
    if (sigma == 0.0) {
      tau_[j] = 0.0;  // exactly zero column, R_jj = 0
      continue;
    }
    const double alpha = colj[0];
    const double beta = -std::copysign(sigma, alpha);
    tau_[j] = (beta - alpha) / beta;
    const double scale = 1.0 / (alpha - beta);
    for (std::size_t i = 1; i < m - j; ++i) colj[i] *= scale;
    colj[0] = beta;

    for (std::size_t c = j + 1; c < k; ++c) {
      double* colc = a_.col(c) + j;
      double w = colc[0] + ops.dot(colj + 1, colc + 1, m - j - 1);
      w *= tau_[j];
      colc[0] -= w;
      ops.axpy(colc + 1, -w, colj + 1, m - j - 1);
    }
  }
}

Vector QRPivoted::qt_head(const Vector& v) const {
  const std::size_t m = a_.rows();
  const std::size_t k = a_.cols();
  if (v.size() != m) throw EstimationError("QR: length mismatch in qt_head");
  Vector b = v;
  const auto& ops = kernels::active();
  for (std::size_t j = 0; j < k; ++j) {
    if (tau_[j] == 0.0) continue;
    const double* colj = a_.col(j) + j;
    double w = b[j] + ops.dot(colj + 1, b.data() + j + 1, m - j - 1);
    w *= tau_[j];
    b[j] -= w;
    ops.axpy(b.data() + j + 1, -w, colj + 1, m - j - 1);
  }
  b.resize(k);
  return b;
}

Vector QRPivoted::r_solve(const Vector& c) const {
  const std::size_t k = a_.cols();
  if (c.size() != k) throw EstimationError("QR: length mismatch in r_solve");
  Vector y(k, 0.0);
  for (std::size_t jj = k; jj-- > 0;) {
    double acc = c[jj];
    for (std::size_t c2 = jj + 1; c2 < k; ++c2) acc -= a_(jj, c2) * y[c2];
    const double d = a_(jj, jj);
    if (d == 0.0) throw EstimationError("QR: singular R in back substitution");
    y[jj] = acc / d;
  }
  Vector x(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) x[perm_[j]] = y[j];
  return x;
}

double QRPivoted::rank_ratio() const {
  const std::size_t k = a_.cols();
  double lo = std::abs(a_(0, 0));
  double hi = lo;
  for (std::size_t j = 1; j < k; ++j) {
    const double d = std::abs(a_(j, j));
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi == 0.0 ? 0.0 : lo / hi;
}

Matrix cholesky(const Matrix& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw EstimationError("cholesky: matrix not square");
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0))
      throw EstimationError("cholesky: matrix not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = s(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }
  return l;
}

Vector chol_solve(const Matrix& l, const Vector& b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw EstimationError("chol_solve: length mismatch");
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = b[i];
    for (std::size_t k = 0; k < i; ++k) acc -= l(i, k) * y[k];
    y[i] = acc / l(i, i);
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) acc -= l(k, ii) * x[k];
    x[ii] = acc / l(ii, ii);
  }
  return x;
}

Matrix chol_solve_matrix(const Matrix& l, const Matrix& b) {
  Matrix x(b.rows(), b.cols());
  Vector col(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    Vector sol = chol_solve(l, col);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = sol[i];
  }
  return x;
}

Matrix spd_inverse(const Matrix& s) {
  return chol_solve_matrix(cholesky(s), Matrix::identity(s.rows()));
}

}  // namespace ivimpute
