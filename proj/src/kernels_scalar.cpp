#include "ivimpute/kernels.hpp"

namespace ivimpute::kernels {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double dot3_scalar(const double* w, const double* x, const double* y,
                   std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i] * y[i];
  return acc;
}

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void mul_scalar(double* out, const double* x, const double* y,
                std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void fma3_scalar(double* out, double a, const double* x, const double* y,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += a * x[i] * y[i];
}

void sub_scaled_scalar(double* out, const double* y, double b,
                       const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] - b * x[i];
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{sum_scalar, dot_scalar,  dot3_scalar,      axpy_scalar,
                       mul_scalar, fma3_scalar, sub_scaled_scalar, "scalar"};
  return ops;
}

}  // namespace ivimpute::kernels
