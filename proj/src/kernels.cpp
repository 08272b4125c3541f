#include "ivimpute/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace ivimpute::kernels {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && \
    (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const Ops& select_backend() {
  const char* env = std::getenv("IVIMPUTE_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return avx2_ops();
#endif
    // unknown value or unsupported backend falls through to auto
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (cpu_has_avx2()) return avx2_ops();
#endif
  return scalar_ops();
}

}  // namespace

const Ops& active() {
  static const Ops& ops = select_backend();
  return ops;
}

}  // namespace ivimpute::kernels
