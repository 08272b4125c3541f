#include <doctest.h>

#include <cmath>

#include "ivimpute/errors.hpp"
#include "ivimpute/estimators.hpp"
#include "ivimpute/simulation.hpp"
#include "ivimpute/variance.hpp"
#include "oracles.hpp"

using ivimpute::IVDataset;
using ivimpute::Matrix;
using ivimpute::MomentBlocks;
using ivimpute::PopulationMoments;
using ivimpute::Vector;

namespace {

struct Fitted {
  ivimpute::ImputedDataset imp;
  ivimpute::RIEstimate est;
};

Fitted fit(const IVDataset& d) {
  return {ivimpute::impute(ivimpute::split(d)), ivimpute::tsls_ri(d)};
}

PopulationMoments scalar_moments(double q, double su2, double sv2, double suv,
                                 double p, double beta) {
  PopulationMoments m;
  m.q_zx = {q};
  m.q_zz = Matrix(1, 1);
  m.q_zz(0, 0) = 1.0;
  m.q_zz_0 = m.q_zz;
  m.sigma_u2 = su2;
  m.sigma_v2 = sv2;
  m.sigma_uv = suv;
  m.p = p;
  m.beta = beta;
  return m;
}

}  // namespace

TEST_SUITE("variance") {

TEST_CASE("moment block invariants") {
  const IVDataset d = ivimpute::validate(
      oracles::random_dataset(100, 64, 3, 0.3));
  const Fitted f = fit(d);
  const MomentBlocks b = ivimpute::compute_moment_blocks(
      f.imp, f.est.residuals_u_tilde, f.est.residuals_v_tilde);

  // additivity is exact by construction
  CHECK(b.S_zz_full == b.S_zz_0 + b.S_zz_1);
  // symmetry is exact; PSD of the weighted Gram blocks up to roundoff
  ivimpute::rng::CounterRng gen(13, ivimpute::rng::Stream::fixture, 3);
  for (const Matrix* m :
       {&b.S_zz_full, &b.S_zz_0, &b.S_zz_1, &b.S_uu, &b.S_uv_0, &b.S_vv_0,
        &b.S_quartic_1}) {
    for (std::size_t i = 0; i < m->rows(); ++i)
      for (std::size_t j = 0; j < m->cols(); ++j)
        CHECK((*m)(i, j) == (*m)(j, i));
  }
  for (const Matrix* m : {&b.S_zz_0, &b.S_uu, &b.S_vv_0}) {
    for (int rep = 0; rep < 20; ++rep) {
      Vector t(m->rows());
      for (auto& v : t) v = gen.next_normal();
      CHECK(oracles::quad(t, *m, t) >= -1e-10);
    }
  }
}

TEST_CASE("meat collapses to the HC0 sum when nothing is imputed") {
  const IVDataset d = ivimpute::validate(
      oracles::random_dataset(110, 50, 2, 0.0));
  const Fitted f = fit(d);
  const MomentBlocks b = ivimpute::compute_moment_blocks(
      f.imp, f.est.residuals_u_tilde, f.est.residuals_v_tilde);
  const Matrix w = ivimpute::meat_ri(b, f.est.beta_hat);
  CHECK(w == b.S_uu);  // bit-exact: every correction sum is empty
}

TEST_CASE("meat collapses to the HC0 sum at beta = 0") {
  const IVDataset d = ivimpute::validate(
      oracles::random_dataset(111, 50, 2, 0.4));
  const Fitted f = fit(d);
  const MomentBlocks b = ivimpute::compute_moment_blocks(
      f.imp, f.est.residuals_u_tilde, f.est.residuals_v_tilde);
  const Matrix w = ivimpute::meat_ri(b, 0.0);
  CHECK(w == b.S_uu);  // every correction carries beta or beta^2
}

TEST_CASE("meat matches the literal term-by-term oracle") {
  for (std::uint64_t tag = 0; tag < 6; ++tag) {
    const IVDataset d = ivimpute::validate(
        oracles::random_dataset(120 + tag, 40, 2, 0.4));
    const Fitted f = fit(d);
    const MomentBlocks b = ivimpute::compute_moment_blocks(
        f.imp, f.est.residuals_u_tilde, f.est.residuals_v_tilde);
    const Matrix got = ivimpute::meat_ri(b, f.est.beta_hat);
    for (std::size_t i = 0; i < got.rows(); ++i)
      for (std::size_t j = 0; j < got.cols(); ++j)
        CHECK(got(i, j) == got(j, i));
    const Matrix raw = oracles::meat_ri_naive(
        f.imp.Z, f.imp.imputed_flag, f.est.residuals_u_tilde,
        f.est.residuals_v_tilde, f.est.beta_hat);
    CHECK(oracles::matrix_rel_err(got, ivimpute::symmetrize(raw)) <= 1e-10);
    // the quadratic form is insensitive to the symmetrization
    const auto reg = ivimpute::project_regressor(
        ivimpute::InstrumentProjection(f.imp.Z), f.imp.x_tilde);
    const double via_raw =
        oracles::quad(reg.g, raw, reg.g) / (reg.s * reg.s);
    CHECK(oracles::rel_err(f.est.variance_robust_ri, via_raw) <= 1e-10);
  }
}

TEST_CASE("robust variance: zero on noiseless data") {
  IVDataset d;
  const std::size_t n = 30;
  d.y.resize(n);
  d.x.resize(n);
  d.x_missing.assign(n, 0);
  d.Z = Matrix(n, 1);
  ivimpute::rng::CounterRng gen(14, ivimpute::rng::Stream::fixture, 8);
  for (std::size_t i = 0; i < n; ++i) {
    d.Z(i, 0) = gen.next_normal();
    d.x[i] = d.Z(i, 0);
    d.y[i] = 0.7 * d.x[i];
    if (i % 4 == 0) d.x_missing[i] = 1;
  }
  const auto est = ivimpute::tsls_ri(ivimpute::validate(d));
  CHECK(est.variance_robust_ri >= 0.0);
  CHECK(est.variance_robust_ri < 1e-25);
  CHECK(est.variance_conventional < 1e-25);
}

TEST_CASE("robust variance equals textbook HC0 when nothing is missing") {
  for (std::uint64_t tag = 0; tag < 6; ++tag) {
    const IVDataset d = ivimpute::validate(
        oracles::random_dataset(130 + tag, 60, 2, 0.0));
    const auto est = ivimpute::tsls_ri(d);
    const double want = oracles::hc0_2sls_variance(d.y, d.x, d.Z);
    CHECK(oracles::rel_err(est.variance_robust_ri, want) <= 1e-10);
  }
}

TEST_CASE("standalone variance ops agree with the composed estimate") {
  const IVDataset d = ivimpute::validate(
      oracles::random_dataset(140, 55, 3, 0.35));
  const auto sp = ivimpute::split(d);
  const auto imp = ivimpute::impute(sp);
  const auto fit_cc = ivimpute::first_stage(sp);
  const auto est = ivimpute::tsls_ri(d);
  CHECK(ivimpute::variance_robust_ri(imp, fit_cc, est.beta_hat) ==
        doctest::Approx(est.variance_robust_ri).epsilon(1e-12));
  CHECK(ivimpute::variance_conventional(imp, est.beta_hat) ==
        doctest::Approx(est.variance_conventional).epsilon(1e-12));
}

TEST_CASE("conventional variance matches the direct naive evaluation") {
  const IVDataset d = ivimpute::validate(
      oracles::random_dataset(150, 45, 2, 0.3));
  const Fitted f = fit(d);
  const double want = oracles::conventional_variance_naive(
      f.imp.y, f.imp.x_tilde, f.imp.Z, f.est.beta_hat);
  CHECK(oracles::rel_err(f.est.variance_conventional, want) <= 1e-10);
}

TEST_CASE("conventional variance equals the textbook non-robust form at p=0") {
  const IVDataset d = ivimpute::validate(
      oracles::random_dataset(151, 60, 2, 0.0));
  const auto est = ivimpute::tsls_ri(d);
  const double want = oracles::nonrobust_2sls_variance(d.y, d.x, d.Z);
  CHECK(oracles::rel_err(est.variance_conventional, want) <= 1e-10);
}

TEST_CASE("negative meat is clamped to zero with a flag") {
  // Hand-built blocks with an overwhelming cross term make the sandwich
  // negative; the library clamps and reports it.
  MomentBlocks b;
  auto one = [](double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
  };
  b.S_uu = one(1.0);
  b.S_uv_0 = one(5.0);
  b.S_vv_0 = one(0.1);
  b.S_zz_0 = one(1.0);
  b.S_zz_1 = one(1.0);
  b.S_zz_full = one(2.0);
  b.S_quartic_1 = one(0.0);
  const ivimpute::ProjectedRegressor reg{{1.0}, 1.0};
  const auto res = ivimpute::variance_robust_from_blocks(b, reg, 1.0);
  CHECK(res.clamped);
  CHECK(res.value == 0.0);
}

TEST_CASE("asymptotic variance under MCAR: worked scalar cases") {
  // p = 0 leaves only the standard 2SLS term
  CHECK(ivimpute::asymptotic_variance_mcar(
            scalar_moments(1.0, 2.0, 1.0, 0.0, 0.0, 0.5)) == 2.0);
  // L=1, q=1, su2=1, sv2=1, beta=0.5, p=0.5 -> 1 + 1*0.25 = 1.25
  CHECK(ivimpute::asymptotic_variance_mcar(
            scalar_moments(1.0, 1.0, 1.0, 0.0, 0.5, 0.5)) ==
        doctest::Approx(1.25).epsilon(1e-14));
  // strictly increasing in p
  const double at03 = ivimpute::asymptotic_variance_mcar(
      scalar_moments(1.0, 1.0, 1.0, 0.0, 0.3, 0.5));
  const double at06 = ivimpute::asymptotic_variance_mcar(
      scalar_moments(1.0, 1.0, 1.0, 0.0, 0.6, 0.5));
  CHECK(at06 > at03);
}

TEST_CASE("conventional limit: worked scalar cases and orderings") {
  // sigma_uv = -0.3, beta = 0.5, p = 0.5: 1 + 0.5*(-0.3 + 0.25) = 0.975,
  // below the p = 0 value - the counterintuitive decrease
  const double limit = ivimpute::conventional_variance_limit(
      scalar_moments(1.0, 1.0, 1.0, -0.3, 0.5, 0.5));
  CHECK(limit == doctest::Approx(0.975).epsilon(1e-14));
  const double at_p0 = ivimpute::conventional_variance_limit(
      scalar_moments(1.0, 1.0, 1.0, -0.3, 0.0, 0.5));
  CHECK(limit < at_p0);

  // p = 0: conventional limit and true asymptotic variance coincide exactly
  CHECK(ivimpute::conventional_variance_limit(
            scalar_moments(1.0, 1.7, 1.3, -0.2, 0.0, 0.4)) ==
        ivimpute::asymptotic_variance_mcar(
            scalar_moments(1.0, 1.7, 1.3, -0.2, 0.0, 0.4)));

  // sigma_uv = 0: conventional limit underestimates for every p in (0,1)
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    CHECK(ivimpute::conventional_variance_limit(
              scalar_moments(1.0, 1.0, 1.0, 0.0, p, 0.5)) <
          ivimpute::asymptotic_variance_mcar(
              scalar_moments(1.0, 1.0, 1.0, 0.0, p, 0.5)));
  }

  // beta = 0: the two coincide for every p
  for (double p : {0.0, 0.2, 0.5, 0.8}) {
    CHECK(ivimpute::conventional_variance_limit(
              scalar_moments(1.0, 1.0, 1.0, 0.3, p, 0.0)) ==
          ivimpute::asymptotic_variance_mcar(
              scalar_moments(1.0, 1.0, 1.0, 0.3, p, 0.0)));
  }
}

TEST_CASE("gap between true and conventional limits") {
  auto gap = [](double su2, double suv) {
    return ivimpute::asymptotic_variance_mcar(
               scalar_moments(1.0, su2, 1.0, suv, 0.4, 0.5)) -
           ivimpute::conventional_variance_limit(
               scalar_moments(1.0, su2, 1.0, suv, 0.4, 0.5));
  };
  // independent of sigma_u2
  CHECK(gap(1.0, 0.2) == doctest::Approx(gap(7.0, 0.2)).epsilon(1e-12));
  // sigma_uv*beta < 0 widens it
  CHECK(gap(1.0, -0.3) > gap(1.0, 0.3));
}

TEST_CASE("monotone sweep of the MCAR variance over the p grid") {
  double prev = -1.0;
  for (int k = 0; k <= 8; ++k) {
    const double p = 0.1 * k;
    const double v = ivimpute::asymptotic_variance_mcar(
        scalar_moments(1.0, 1.0, 1.0, 0.0, p, 0.5));
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("pre-MCAR homoskedastic form reduces to the MCAR one") {
  PopulationMoments m;
  m.q_zx = {0.4, 0.2};
  m.q_zz = Matrix::identity(2);
  m.q_zz(0, 1) = m.q_zz(1, 0) = 0.2;
  m.q_zz_0 = m.q_zz;
  m.sigma_u2 = 1.3;
  m.sigma_v2 = 0.8;
  m.sigma_uv = 0.1;
  m.p = 0.35;
  m.beta = 0.6;
  CHECK(ivimpute::asymptotic_variance_homoskedastic(m) ==
        doctest::Approx(ivimpute::asymptotic_variance_mcar(m))
            .epsilon(1e-12));
  // a complete-case moment that differs from q_zz moves the result
  m.q_zz_0(0, 0) = 1.5;
  CHECK(ivimpute::asymptotic_variance_homoskedastic(m) !=
        doctest::Approx(ivimpute::asymptotic_variance_mcar(m))
            .epsilon(1e-6));
}

TEST_CASE("population moment validation") {
  auto m = scalar_moments(1.0, 1.0, 1.0, 0.0, 0.5, 0.5);
  m.p = 1.0;
  CHECK_THROWS_AS(ivimpute::asymptotic_variance_mcar(m),
                  ivimpute::ValidationError);
  m = scalar_moments(1.0, 1.0, 1.0, 1.5, 0.5, 0.5);
  CHECK_THROWS_AS(ivimpute::asymptotic_variance_mcar(m),
                  ivimpute::ValidationError);
  m = scalar_moments(1.0, -1.0, 1.0, 0.0, 0.5, 0.5);
  CHECK_THROWS_AS(ivimpute::asymptotic_variance_mcar(m),
                  ivimpute::ValidationError);
}

TEST_CASE("statistical: homoskedastic MCAR consistency at p=0.4") {
  ivimpute::SimConfig config;
  config.n = 20000;
  config.R = 200;
  config.homoskedastic_override = true;
  config.sigma_uv = 0.3;
  const double p = 0.4;
  double acc = 0.0;
  for (int r = 0; r < config.R; ++r) {
    const auto draw = ivimpute::generate(config, r);
    const auto del = ivimpute::mcar_delete(draw.data, p, config.seed, r);
    acc += config.n * ivimpute::tsls_ri(del).variance_robust_ri;
  }
  PopulationMoments m;
  m.q_zz = Matrix(config.L, config.L);
  for (int j = 0; j < config.L; ++j)
    m.q_zz(j, j) = 1.0 / static_cast<double>(config.L);
  m.q_zz_0 = m.q_zz;
  m.q_zx = ivimpute::matvec(m.q_zz, config.pi());
  m.sigma_u2 = 1.0;
  m.sigma_v2 = 1.0;
  m.sigma_uv = config.sigma_uv;
  m.p = p;
  m.beta = config.beta;
  const double want = ivimpute::asymptotic_variance_mcar(m);
  CHECK(oracles::rel_err(acc / config.R, want) < 0.05);
}

TEST_CASE("statistical: heteroskedastic consistency against the simulated "
          "population variance") {
  ivimpute::SimConfig config;  // heteroskedastic design
  config.n = 20000;
  config.R = 100;
  config.sigma_uv = -0.3;
  const double p = 0.4;

  // Population oracle: moment matrices of the row distribution estimated
  // from one large independent draw, assembled into the five-term
  // asymptotic meat (complete and incomplete classes share the moments
  // under MCAR), then the population sandwich.
  ivimpute::SimConfig pop = config;
  pop.n = 400000;
  const auto big = ivimpute::generate(pop, 999983);
  const std::size_t m = big.u.size();
  const std::size_t L = static_cast<std::size_t>(config.L);
  Matrix e_uuzz(L, L), e_uvzz(L, L), e_vvzz(L, L), q_zz(L, L);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < L; ++b) {
        const double zz = big.data.Z(i, a) * big.data.Z(i, b);
        e_uuzz(a, b) += big.u[i] * big.u[i] * zz;
        e_uvzz(a, b) += big.u[i] * big.v[i] * zz;
        e_vvzz(a, b) += big.v[i] * big.v[i] * zz;
        q_zz(a, b) += zz;
      }
  const double inv_m = 1.0 / static_cast<double>(m);
  e_uuzz = inv_m * e_uuzz;
  e_uvzz = inv_m * e_uvzz;
  e_vvzz = inv_m * e_vvzz;
  q_zz = inv_m * q_zz;

  const Matrix q_inv = oracles::gauss_inverse(q_zz);
  const double beta = config.beta;
  const Matrix cross = ivimpute::matmul(
      e_uvzz, ivimpute::matmul(q_inv, q_zz));  // E[uvZZ'] Q0^{-1} Q1
  const Matrix noise = ivimpute::matmul(
      q_zz, ivimpute::matmul(
                q_inv, ivimpute::matmul(
                           e_vvzz, ivimpute::matmul(q_inv, q_zz))));
  const Matrix omega =
      e_uuzz - (2.0 * p * beta) * cross +
      (p * p / (1.0 - p) * beta * beta) * noise +
      (2.0 * p * beta) * e_uvzz + (p * beta * beta) * e_vvzz;
  const Vector pi = config.pi();
  const double denom = oracles::quad(pi, q_zz, pi);
  const double v_pop = oracles::quad(pi, omega, pi) / (denom * denom);

  double acc = 0.0;
  for (int r = 0; r < config.R; ++r) {
    const auto draw = ivimpute::generate(config, r);
    const auto del = ivimpute::mcar_delete(draw.data, p, config.seed, r);
    acc += config.n * ivimpute::tsls_ri(del).variance_robust_ri;
  }
  CHECK(oracles::rel_err(acc / config.R, v_pop) < 0.10);
}

}  // TEST_SUITE
