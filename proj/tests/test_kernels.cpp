#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "ivimpute/kernels.hpp"
#include "ivimpute/rng.hpp"

using ivimpute::kernels::Ops;

namespace {

std::vector<double> random_array(ivimpute::rng::CounterRng& gen,
                                 std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = gen.next_normal();
  return v;
}

const std::size_t kSizes[] = {0,  1,  2,  3,  4,   5,   7,   8,    9,   15,
                              16, 17, 31, 33, 64,  67,  255, 1000, 1003};

void check_reduction_pair(const Ops& a, const Ops& b) {
  ivimpute::rng::CounterRng gen(7, ivimpute::rng::Stream::fixture, 11);
  for (std::size_t n : kSizes) {
    const auto w = random_array(gen, n);
    const auto x = random_array(gen, n);
    const auto y = random_array(gen, n);
    const double scale = static_cast<double>(n) + 1.0;

    CHECK(std::abs(a.sum(x.data(), n) - b.sum(x.data(), n)) <=
          1e-13 * scale);
    CHECK(std::abs(a.dot(x.data(), y.data(), n) -
                   b.dot(x.data(), y.data(), n)) <= 1e-13 * scale);
    CHECK(std::abs(a.dot3(w.data(), x.data(), y.data(), n) -
                   b.dot3(w.data(), x.data(), y.data(), n)) <= 1e-13 * scale);

    auto ya = y, yb = y;
    a.axpy(ya.data(), 1.7, x.data(), n);
    b.axpy(yb.data(), 1.7, x.data(), n);
    std::vector<double> oa(n), ob(n);
    a.mul(oa.data(), x.data(), y.data(), n);
    b.mul(ob.data(), x.data(), y.data(), n);
    auto fa = y, fb = y;
    a.fma3(fa.data(), -0.3, x.data(), w.data(), n);
    b.fma3(fb.data(), -0.3, x.data(), w.data(), n);
    std::vector<double> sa(n), sb(n);
    a.sub_scaled(sa.data(), y.data(), 2.5, x.data(), n);
    b.sub_scaled(sb.data(), y.data(), 2.5, x.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(ya[i] == doctest::Approx(yb[i]).epsilon(1e-15));
      CHECK(oa[i] == ob[i]);  // a single product rounds identically
      CHECK(fa[i] == doctest::Approx(fb[i]).epsilon(1e-15));
      CHECK(sa[i] == doctest::Approx(sb[i]).epsilon(1e-15));
    }
  }
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar reference matches hand sums") {
  const auto& ops = ivimpute::kernels::scalar_ops();
  const double x[] = {1.0, 2.0, 3.0};
  const double y[] = {4.0, -5.0, 6.0};
  const double w[] = {0.5, 1.0, 2.0};
  CHECK(ops.sum(x, 3) == 6.0);
  CHECK(ops.dot(x, y, 3) == 4.0 - 10.0 + 18.0);
  CHECK(ops.dot3(w, x, y, 3) == 0.5 * 4.0 - 10.0 + 2.0 * 18.0);
  double out[3] = {0, 0, 0};
  ops.sub_scaled(out, y, 2.0, x, 3);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == -9.0);
  CHECK(out[2] == 0.0);
}

TEST_CASE("active backend is one of the known implementations") {
  const auto& ops = ivimpute::kernels::active();
  const bool known = std::strcmp(ops.name, "scalar") == 0 ||
                     std::strcmp(ops.name, "avx2") == 0;
  CHECK(known);
#if defined(__x86_64__) || defined(_M_X64)
  if (ivimpute::kernels::cpu_has_avx2())
    CHECK(std::strcmp(ops.name, "scalar") != 0);
#endif
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 backend agrees with the scalar reference") {
  if (!ivimpute::kernels::cpu_has_avx2()) return;
  check_reduction_pair(ivimpute::kernels::scalar_ops(),
                       ivimpute::kernels::avx2_ops());
}
#endif

TEST_CASE("kernels are deterministic across repeated calls") {
  const auto& ops = ivimpute::kernels::active();
  ivimpute::rng::CounterRng gen(3, ivimpute::rng::Stream::fixture, 12);
  const auto x = random_array(gen, 513);
  const auto y = random_array(gen, 513);
  const double first = ops.dot(x.data(), y.data(), x.size());
  for (int k = 0; k < 5; ++k)
    CHECK(ops.dot(x.data(), y.data(), x.size()) == first);
}

}  // TEST_SUITE
