#include "ivimpute/variance.hpp"

#include <cmath>
#include <string>

#include "ivimpute/errors.hpp"
#include "ivimpute/kernels.hpp"
#include "ivimpute/linalg.hpp"

namespace ivimpute {

namespace {

// S[j,k] = sum_i w[i] Z_ij Z_ik, mirrored so the result is symmetric by
// construction.
Matrix weighted_gram(const Matrix& z, const Vector& w) {
  const auto& ops = kernels::active();
  const std::size_t L = z.cols();
  const std::size_t n = z.rows();
  Matrix s(L, L);
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t k = j; k < L; ++k) {
      const double v = ops.dot3(w.data(), z.col(j), z.col(k), n);
      s(j, k) = v;
      s(k, j) = v;
    }
  return s;
}

}  // namespace

MomentBlocks compute_moment_blocks(const ImputedDataset& d,
                                   const Vector& u_tilde,
                                   const Vector& v_tilde) {
  const auto& ops = kernels::active();
  const std::size_t n = d.n();
  const std::size_t L = d.L();
  if (u_tilde.size() != n || v_tilde.size() != n)
    throw ValidationError("moment blocks: residual length mismatch");

  Vector ind0(n), ind1(n);
  for (std::size_t i = 0; i < n; ++i) {
    ind1[i] = d.imputed_flag[i] ? 1.0 : 0.0;
    ind0[i] = 1.0 - ind1[i];
  }

  Vector w(n);
  MomentBlocks b;
  ops.mul(w.data(), u_tilde.data(), u_tilde.data(), n);
  b.S_uu = weighted_gram(d.Z, w);
  ops.mul(w.data(), u_tilde.data(), v_tilde.data(), n);
  ops.mul(w.data(), w.data(), ind0.data(), n);
  b.S_uv_0 = weighted_gram(d.Z, w);
  ops.mul(w.data(), v_tilde.data(), v_tilde.data(), n);
  ops.mul(w.data(), w.data(), ind0.data(), n);
  b.S_vv_0 = weighted_gram(d.Z, w);
  b.S_zz_0 = weighted_gram(d.Z, ind0);
  b.S_zz_1 = weighted_gram(d.Z, ind1);
  b.S_zz_full = b.S_zz_0 + b.S_zz_1;

  Matrix chol;
  try {
    chol = cholesky(b.S_zz_0);
  } catch (const EstimationError&) {
    throw EstimationError("singular complete-case moment matrix S_zz_0");
  }
  const Matrix a = symmetrize(
      chol_solve_matrix(chol, transpose(chol_solve_matrix(chol, b.S_vv_0))));

  // Z_i Z_i' A Z_i Z_i' = (Z_i'A Z_i) Z_i Z_i', so the quartic block is a
  // weighted Gram with per-row quadratic-form weights.
  Vector quad(n, 0.0);
  for (std::size_t j = 0; j < L; ++j) {
    ops.fma3(quad.data(), a(j, j), d.Z.col(j), d.Z.col(j), n);
    for (std::size_t k = j + 1; k < L; ++k)
      ops.fma3(quad.data(), 2.0 * a(j, k), d.Z.col(j), d.Z.col(k), n);
  }
  ops.mul(quad.data(), quad.data(), ind1.data(), n);
  b.S_quartic_1 = weighted_gram(d.Z, quad);
  return b;
}

Matrix meat_ri(const MomentBlocks& blocks, double beta_hat) {
  Matrix chol;
  try {
    chol = cholesky(blocks.S_zz_0);
  } catch (const EstimationError&) {
    throw EstimationError("singular complete-case moment matrix S_zz_0");
  }
  const Matrix b = chol_solve_matrix(chol, blocks.S_zz_1);  // S0^{-1} S1
  const Matrix cross = matmul(blocks.S_uv_0, b);
  const Matrix noise = matmul(transpose(b), matmul(blocks.S_vv_0, b));
  const double b2 = beta_hat * beta_hat;
  const Matrix w = blocks.S_uu - (2.0 * beta_hat) * cross + b2 * noise -
                   b2 * blocks.S_quartic_1;
  return symmetrize(w);
}

VarianceResult variance_robust_from_blocks(const MomentBlocks& blocks,
                                           const ProjectedRegressor& reg,
                                           double beta_hat) {
  const Matrix w = meat_ri(blocks, beta_hat);
  const double raw = quad_form(reg.g, w, reg.g) / (reg.s * reg.s);
  if (raw < 0.0) return {0.0, true};
  return {raw, false};
}

VarianceResult variance_robust_ri_result(const ImputedDataset& d,
                                         const FirstStageFit& fit,
                                         double beta_hat) {
  const auto& ops = kernels::active();
  const std::size_t n = d.n();
  Vector u(n), v(n);
  ops.sub_scaled(u.data(), d.y.data(), beta_hat, d.x_tilde.data(), n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = d.x_tilde[i] - row_dot(d.Z, i, fit.pi_cc);
  const MomentBlocks blocks = compute_moment_blocks(d, u, v);
  InstrumentProjection proj(d.Z);
  const ProjectedRegressor reg = project_regressor(proj, d.x_tilde);
  return variance_robust_from_blocks(blocks, reg, beta_hat);
}

double variance_robust_ri(const ImputedDataset& d, const FirstStageFit& fit,
                          double beta_hat) {
  return variance_robust_ri_result(d, fit, beta_hat).value;
}

double variance_conventional_from_parts(const Vector& u_tilde,
                                        const ProjectedRegressor& reg) {
  const auto& ops = kernels::active();
  const std::size_t n = u_tilde.size();
  const double sigma2 =
      ops.dot(u_tilde.data(), u_tilde.data(), n) / static_cast<double>(n);
  return sigma2 / reg.s;
}

double variance_conventional(const ImputedDataset& d, double beta_hat) {
  const auto& ops = kernels::active();
  const std::size_t n = d.n();
  Vector u(n);
  ops.sub_scaled(u.data(), d.y.data(), beta_hat, d.x_tilde.data(), n);
  InstrumentProjection proj(d.Z);
  const ProjectedRegressor reg = project_regressor(proj, d.x_tilde);
  return variance_conventional_from_parts(u, reg);
}

void PopulationMoments::validate() const {
  const std::size_t L = q_zx.size();
  if (L == 0) throw ValidationError("population moments: q_zx is empty");
  if (q_zz.rows() != L || q_zz.cols() != L)
    throw ValidationError("population moments: q_zz has wrong shape");
  if (q_zz_0.rows() != L || q_zz_0.cols() != L)
    throw ValidationError("population moments: q_zz_0 has wrong shape");
  if (!(sigma_u2 > 0.0) || !(sigma_v2 > 0.0))
    throw ValidationError("population moments: error variances must be > 0");
  if (std::abs(sigma_uv) > std::sqrt(sigma_u2 * sigma_v2))
    throw ValidationError(
        "population moments: |sigma_uv| exceeds sqrt(sigma_u2*sigma_v2)");
  if (!(p >= 0.0 && p < 1.0))
    throw ValidationError("population moments: p must be in [0, 1)");
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t k = 0; k < L; ++k) {
      if (std::abs(q_zz(j, k) - q_zz(k, j)) > 1e-12)
        throw ValidationError("population moments: q_zz not symmetric");
      if (std::abs(q_zz_0(j, k) - q_zz_0(k, j)) > 1e-12)
        throw ValidationError("population moments: q_zz_0 not symmetric");
    }
  try {
    cholesky(q_zz);
    cholesky(q_zz_0);
  } catch (const EstimationError&) {
    throw ValidationError(
        "population moments: q_zz / q_zz_0 not positive definite");
  }
}

namespace {

// C = (q_xZ q_zz^{-1} q_zx)^{-1}
double bread_inverse(const PopulationMoments& m) {
  const Vector solved = chol_solve(cholesky(m.q_zz), m.q_zx);
  double s = 0.0;
  for (std::size_t j = 0; j < m.q_zx.size(); ++j) s += m.q_zx[j] * solved[j];
  if (!(s > 0.0))
    throw EstimationError("population moments: q_xZ q_zz^{-1} q_zx not > 0");
  return 1.0 / s;
}

}  // namespace

double asymptotic_variance_mcar(const PopulationMoments& m) {
  m.validate();
  const double c = bread_inverse(m);
  return c * m.sigma_u2 +
         c * (m.p / (1.0 - m.p)) * m.sigma_v2 * (m.beta * m.beta);
}

double asymptotic_variance_homoskedastic(const PopulationMoments& m) {
  m.validate();
  const double c = bread_inverse(m);
  const Vector solved0 = chol_solve(cholesky(m.q_zz_0), m.q_zx);
  double s0 = 0.0;
  for (std::size_t j = 0; j < m.q_zx.size(); ++j) s0 += m.q_zx[j] * solved0[j];
  const double b2 = m.beta * m.beta;
  return c * m.sigma_u2 - c * m.sigma_v2 * b2 +
         (1.0 / (1.0 - m.p)) * c * s0 * c * m.sigma_v2 * b2;
}

double conventional_variance_limit(const PopulationMoments& m) {
  m.validate();
  const double c = bread_inverse(m);
  return c * m.sigma_u2 +
         c * m.p * (2.0 * m.sigma_uv * m.beta + m.sigma_v2 * m.beta * m.beta);
}

}  // namespace ivimpute
