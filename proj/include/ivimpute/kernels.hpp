#pragma once

#include <cstddef>

namespace ivimpute::kernels {

// Contiguous-array kernels behind the moment accumulation and residual
// loops. scalar_ops() is the reference implementation; SIMD backends may
// reorder summations and must agree with it to roundoff (checked by the
// equivalence tests in tests/test_kernels.cpp).
struct Ops {
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i w[i]*x[i]*y[i]
  double (*dot3)(const double* w, const double* x, const double* y,
                 std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // out[i] = x[i]*y[i]
  void (*mul)(double* out, const double* x, const double* y, std::size_t n);
  // out[i] += a*x[i]*y[i]
  void (*fma3)(double* out, double a, const double* x, const double* y,
               std::size_t n);
  // out[i] = y[i] - b*x[i]
  void (*sub_scaled)(double* out, const double* y, double b, const double* x,
                     std::size_t n);
  const char* name;
};

const Ops& scalar_ops();

bool cpu_has_avx2();

#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif

// Backend is selected once on first use: AVX2 when the CPU supports it,
// otherwise scalar. The environment variable IVIMPUTE_KERNELS=scalar|avx2|auto
// pins a specific backend (useful for cross-machine reproducibility).
const Ops& active();

}  // namespace ivimpute::kernels
