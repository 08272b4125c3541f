#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ivimpute/errors.hpp"
#include "ivimpute/estimators.hpp"
#include "ivimpute/rng.hpp"
#include "ivimpute/simulation.hpp"
#include "oracles.hpp"

using ivimpute::IVDataset;
using ivimpute::Matrix;
using ivimpute::Vector;

namespace {

Matrix column(std::initializer_list<double> vals) {
  Matrix z(vals.size(), 1);
  std::size_t i = 0;
  for (double v : vals) z(i++, 0) = v;
  return z;
}

IVDataset noiseless_dataset(std::uint64_t tag, std::size_t n, std::size_t L,
                            double beta, double mask_p) {
  ivimpute::rng::CounterRng gen(37, ivimpute::rng::Stream::fixture, tag);
  IVDataset d;
  d.y.resize(n);
  d.x.resize(n);
  d.x_missing.assign(n, 0);
  d.Z = Matrix(n, L);
  const Vector coef(L, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < L; ++j) d.Z(i, j) = gen.next_normal();
    d.x[i] = ivimpute::row_dot(d.Z, i, coef);  // v = 0
    d.y[i] = beta * d.x[i];                    // u = 0
    if (gen.next_uniform() < mask_p) d.x_missing[i] = 1;
  }
  return ivimpute::validate(d);
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("tsls on exactly proportional data") {
  CHECK(ivimpute::tsls({2, 4}, {1, 2}, column({1, 2})) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("tsls with y = x returns 1") {
  const IVDataset d = noiseless_dataset(1, 30, 2, 1.0, 0.0);
  CHECK(ivimpute::tsls(d.x, d.x, d.Z) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tsls matches the dense projection-matrix oracle") {
  // 6-row fixture with two instruments
  Matrix z(6, 2);
  const double zvals[6][2] = {{1.0, 0.3},  {-0.4, 1.1}, {0.9, -0.2},
                              {1.6, 0.8},  {-1.2, 0.5}, {0.2, -1.4}};
  Vector x = {0.8, 0.7, -0.3, 2.1, -0.9, -1.0};
  Vector y = {1.1, 0.2, -0.1, 2.4, -1.3, -0.8};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 2; ++j) z(i, j) = zvals[i][j];
  CHECK(ivimpute::tsls(y, x, z) ==
        doctest::Approx(oracles::tsls_dense(y, x, z)).epsilon(1e-10));
}

TEST_CASE("tsls with one instrument reduces to the ratio of cross sums") {
  ivimpute::rng::CounterRng gen(5, ivimpute::rng::Stream::fixture, 40);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 25;
    Matrix z(n, 1);
    Vector x(n), y(n);
    double zy = 0.0, zx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z(i, 0) = gen.next_normal();
      x[i] = 0.9 * z(i, 0) + gen.next_normal();
      y[i] = 0.5 * x[i] + gen.next_normal();
      zy += z(i, 0) * y[i];
      zx += z(i, 0) * x[i];
    }
    CHECK(ivimpute::tsls(y, x, z) ==
          doctest::Approx(zy / zx).epsilon(1e-12));
  }
}

TEST_CASE("tsls error paths") {
  // rank-deficient Z
  Matrix z(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    z(i, 0) = static_cast<double>(i + 1);
    z(i, 1) = 2.0 * z(i, 0);
  }
  CHECK_THROWS_AS(ivimpute::tsls({1, 2, 3, 4}, {1, 2, 3, 4}, z),
                  ivimpute::EstimationError);
  // zero first-stage relevance: x orthogonal to the instrument
  CHECK_THROWS_AS(
      ivimpute::tsls({1, 1, -1, -1}, {1, 1, -1, -1},
                     column({1, -1, 1, -1})),
      ivimpute::EstimationError);
}

TEST_CASE("first stage on an exact fit") {
  IVDataset d;
  d.y = {0, 0};
  d.x = {1, 2};
  d.x_missing = {0, 0};
  d.Z = column({1, 2});
  const auto fit = ivimpute::first_stage(ivimpute::split(ivimpute::validate(d)));
  CHECK(fit.pi_cc[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(fit.residuals_cc[0]) < 1e-14);
  CHECK(std::abs(fit.residuals_cc[1]) < 1e-14);
}

TEST_CASE("first stage with x orthogonal to the instrument column") {
  IVDataset d;
  d.y = {0, 0, 0, 0};
  d.x = {1, 1, -1, -1};
  d.x_missing = {0, 0, 0, 0};
  d.Z = column({1, -1, 1, -1});
  const auto fit = ivimpute::first_stage(ivimpute::split(ivimpute::validate(d)));
  CHECK(std::abs(fit.pi_cc[0]) < 1e-15);
  CHECK(fit.f_statistic >= 0.0);
  CHECK(fit.f_statistic < 1e-20);
}

TEST_CASE("first stage residuals are orthogonal to the instruments") {
  for (std::uint64_t tag = 0; tag < 10; ++tag) {
    const IVDataset d = ivimpute::validate(
        oracles::random_dataset(600 + tag, 60, 3, 0.25));
    const auto sp = ivimpute::split(d);
    const auto fit = ivimpute::first_stage(sp);
    CHECK(fit.f_statistic >= 0.0);
    for (std::size_t j = 0; j < sp.L(); ++j) {
      double dot = 0.0, znorm = 0.0, rnorm = 0.0;
      for (std::size_t i = 0; i < sp.n0(); ++i) {
        dot += sp.Z0(i, j) * fit.residuals_cc[i];
        znorm += sp.Z0(i, j) * sp.Z0(i, j);
        rnorm += fit.residuals_cc[i] * fit.residuals_cc[i];
      }
      CHECK(std::abs(dot) <= 1e-8 * std::sqrt(znorm * rnorm) + 1e-12);
    }
  }
}

TEST_CASE("first stage requires n0 > L") {
  IVDataset d;
  d.y = {0, 0};
  d.x = {1, 0};
  d.x_missing = {0, 1};
  d.Z = column({1, 2});
  CHECK_THROWS_AS(ivimpute::first_stage(ivimpute::split(ivimpute::validate(d))),
                  ivimpute::EstimationError);
}

TEST_CASE("tsls_ri collapses to plain tsls when nothing is missing") {
  for (std::uint64_t tag = 0; tag < 8; ++tag) {
    const IVDataset d = ivimpute::validate(
        oracles::random_dataset(700 + tag, 45, 2, 0.0));
    const auto est = ivimpute::tsls_ri(d);
    const double plain = ivimpute::tsls(d.y, d.x, d.Z);
    CHECK(oracles::rel_err(est.beta_hat, plain) <= 1e-12);
    CHECK(est.n1 == 0);
    CHECK(est.p_hat == 0.0);
  }
}

TEST_CASE("tsls_ri recovers beta exactly on noiseless data, any mask") {
  for (std::uint64_t tag = 0; tag < 8; ++tag) {
    const IVDataset d = noiseless_dataset(800 + tag, 50, 2, 0.7, 0.3);
    const auto est = ivimpute::tsls_ri(d);
    CHECK(est.beta_hat == doctest::Approx(0.7).epsilon(1e-10));
  }
}

TEST_CASE("tsls_ri matches the dense-matrix oracle on a seeded fixture") {
  const IVDataset d = ivimpute::validate(
      oracles::random_dataset(901, 50, 2, 0.4));
  const auto est = ivimpute::tsls_ri(d);
  const auto imp = ivimpute::impute(ivimpute::split(d));
  const double want = oracles::tsls_dense(imp.y, imp.x_tilde, imp.Z);
  CHECK(oracles::rel_err(est.beta_hat, want) <= 1e-10);
  // residual definitions
  for (std::size_t i = 0; i < d.n(); ++i) {
    CHECK(est.residuals_u_tilde[i] ==
          doctest::Approx(imp.y[i] - imp.x_tilde[i] * est.beta_hat)
              .epsilon(1e-12));
    if (imp.imputed_flag[i]) CHECK(est.residuals_v_tilde[i] == 0.0);
  }
}

TEST_CASE("tsls_complete_case behavior") {
  {
    const IVDataset d = ivimpute::validate(
        oracles::random_dataset(910, 40, 2, 0.0));
    CHECK(ivimpute::tsls_complete_case(ivimpute::split(d)) ==
          doctest::Approx(ivimpute::tsls(d.y, d.x, d.Z)).epsilon(1e-12));
  }
  {
    const IVDataset d = noiseless_dataset(911, 40, 2, 0.7, 0.3);
    CHECK(ivimpute::tsls_complete_case(ivimpute::split(d)) ==
          doctest::Approx(0.7).epsilon(1e-10));
  }
  {
    const IVDataset d = ivimpute::validate(
        oracles::random_dataset(912, 60, 3, 0.3));
    const auto sp = ivimpute::split(d);
    CHECK(ivimpute::tsls_complete_case(sp) ==
          doctest::Approx(oracles::tsls_dense(sp.y0, sp.x0, sp.Z0))
              .epsilon(1e-10));
  }
}

TEST_CASE("property: beta_RI is invariant under joint row permutation") {
  const IVDataset d = ivimpute::validate(
      oracles::random_dataset(920, 48, 2, 0.35));
  const double base = ivimpute::tsls_ri(d).beta_hat;
  ivimpute::rng::CounterRng gen(11, ivimpute::rng::Stream::fixture, 99);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<std::size_t> perm(d.n());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = d.n(); i > 1; --i)
      std::swap(perm[i - 1], perm[gen.next_u32() % i]);
    IVDataset s;
    s.y.resize(d.n());
    s.x.resize(d.n());
    s.x_missing.resize(d.n());
    s.Z = Matrix(d.n(), d.L());
    for (std::size_t i = 0; i < d.n(); ++i) {
      s.y[i] = d.y[perm[i]];
      s.x[i] = d.x[perm[i]];
      s.x_missing[i] = d.x_missing[perm[i]];
      for (std::size_t j = 0; j < d.L(); ++j) s.Z(i, j) = d.Z(perm[i], j);
    }
    CHECK(ivimpute::tsls_ri(s).beta_hat ==
          doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("property: beta_RI is invariant under instrument rescaling") {
  const IVDataset d = ivimpute::validate(
      oracles::random_dataset(930, 48, 3, 0.35));
  const double base = ivimpute::tsls_ri(d).beta_hat;
  for (double c : {2.0, -0.5, 1e3, 1e-3}) {
    IVDataset s = d;
    for (std::size_t i = 0; i < s.n(); ++i) s.Z(i, 1) *= c;
    CHECK(ivimpute::tsls_ri(s).beta_hat ==
          doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("statistical: estimation error shrinks with n") {
  // The experiment design ties pi to n (entries sqrt(F*L/n)), which holds
  // instrument strength constant; a consistency sweep must keep pi fixed,
  // so f_target scales with n here.
  ivimpute::SimConfig small;
  small.n = 1000;
  small.R = 200;
  ivimpute::SimConfig big = small;
  big.n = 8000;
  big.f_target = small.f_target * 8.0;  // same pi entries at both sizes
  auto median_abs_err = [](const ivimpute::SimConfig& config) {
    std::vector<double> errs;
    for (int r = 0; r < config.R; ++r) {
      const auto draw = ivimpute::generate(config, r);
      const auto del =
          ivimpute::mcar_delete(draw.data, 0.4, config.seed, r);
      errs.push_back(
          std::abs(ivimpute::tsls_ri(del).beta_hat - config.beta));
    }
    std::nth_element(errs.begin(), errs.begin() + errs.size() / 2,
                     errs.end());
    return errs[errs.size() / 2];
  };
  CHECK(median_abs_err(big) < median_abs_err(small));
}

}  // TEST_SUITE
