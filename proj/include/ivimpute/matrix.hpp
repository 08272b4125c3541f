#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace ivimpute {

using Vector = std::vector<double>;

// Dense column-major matrix. Columns are contiguous so that row-indexed
// reductions (sums over observations) run through the SIMD kernels.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[j * rows_ + i];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[j * rows_ + i];
  }

  double* col(std::size_t j) { return data_.data() + j * rows_; }
  const double* col(std::size_t j) const { return data_.data() + j * rows_; }

  const std::vector<double>& data() const { return data_; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// row_dot is the one place Z_i'w is evaluated throughout the library. Using
// a single sequential loop everywhere makes repeated evaluations bit-identical,
// which is what forces the imputed-row first-stage residuals to exact zero.
inline double row_dot(const Matrix& m, std::size_t i, const Vector& w) {
  assert(w.size() == m.cols());
  double acc = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * w[j];
  return acc;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) += a(i, k) * bkj;
    }
  return c;
}

inline Vector matvec(const Matrix& a, const Vector& x) {
  assert(x.size() == a.cols());
  Vector y(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] += a(i, j) * x[j];
  return y;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  Matrix c(a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) = a(i, j) + b(i, j);
  return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  Matrix c(a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) = a(i, j) - b(i, j);
  return c;
}

inline Matrix operator*(double s, const Matrix& a) {
  Matrix c(a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) = s * a(i, j);
  return c;
}

inline Matrix symmetrize(const Matrix& a) {
  assert(a.rows() == a.cols());
  Matrix s(a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i)
      s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

// x'Ay for square A.
inline double quad_form(const Vector& x, const Matrix& a, const Vector& y) {
  assert(a.rows() == x.size() && a.cols() == y.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double col_acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) col_acc += x[i] * a(i, j);
    acc += col_acc * y[j];
  }
  return acc;
}

}  // namespace ivimpute
