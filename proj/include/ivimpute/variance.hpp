#pragma once

#include "ivimpute/estimators.hpp"
#include "ivimpute/matrix.hpp"
#include "ivimpute/model.hpp"

namespace ivimpute {

// Empirical moment blocks entering the imputation-aware sandwich. All sums
// are raw (no divisor). Blocks restricted to complete (suffix _0) or
// incomplete (suffix _1) rows are accumulated with indicator weights so the
// restriction is structural rather than a property of the residuals.
struct MomentBlocks {
  Matrix S_zz_full;    // sum over all rows of Z_i Z_i' (= S_zz_0 + S_zz_1)
  Matrix S_zz_0;       // complete rows
  Matrix S_zz_1;       // incomplete rows
  Matrix S_uu;         // sum u_i^2 Z_i Z_i', all rows
  Matrix S_uv_0;       // sum u_i v_i Z_i Z_i', complete rows
  Matrix S_vv_0;       // sum v_i^2 Z_i Z_i', complete rows
  Matrix S_quartic_1;  // sum over incomplete rows of (Z_i'A Z_i) Z_i Z_i'
                       // with A = S_zz_0^{-1} S_vv_0 S_zz_0^{-1}
};

MomentBlocks compute_moment_blocks(const ImputedDataset& d,
                                   const Vector& u_tilde,
                                   const Vector& v_tilde);

// The sandwich middle matrix correcting for regression imputation:
// HC0 meat over all rows, a cross term in beta, an imputation-noise term in
// beta^2 and a per-row quartic deduction in beta^2. Symmetrized on output.
Matrix meat_ri(const MomentBlocks& blocks, double beta_hat);

struct VarianceResult {
  double value = 0.0;
  bool clamped = false;  // roundoff or small-sample indefiniteness hit zero
};

VarianceResult variance_robust_from_blocks(const MomentBlocks& blocks,
                                           const ProjectedRegressor& reg,
                                           double beta_hat);

// Imputation-aware heteroskedasticity-robust variance of beta_hat_RI
// (finite-sample scale: se = sqrt of this).
double variance_robust_ri(const ImputedDataset& d, const FirstStageFit& fit,
                          double beta_hat);
VarianceResult variance_robust_ri_result(const ImputedDataset& d,
                                         const FirstStageFit& fit,
                                         double beta_hat);

// What standard software reports when the imputed data is treated as
// observed: (x'P_Z x)^{-1} * (1/n) sum (y_i - x_tilde_i beta)^2. Not
// consistent unless p = 0 or beta = 0.
double variance_conventional(const ImputedDataset& d, double beta_hat);
double variance_conventional_from_parts(const Vector& u_tilde,
                                        const ProjectedRegressor& reg);

// Population moments for the closed-form asymptotic variances.
struct PopulationMoments {
  Vector q_zx;     // E[Z_i x_i]
  Matrix q_zz;     // E[Z_i Z_i']
  Matrix q_zz_0;   // E[Z_i Z_i' | complete]; equals q_zz under MCAR
  double sigma_u2 = 1.0;
  double sigma_v2 = 1.0;
  double sigma_uv = 0.0;
  double p = 0.0;
  double beta = 0.0;

  void validate() const;  // throws ValidationError
};

// Asymptotic variance of the imputed 2SLS estimator under homoskedasticity
// and MCAR: C*sigma_u2 + C*(p/(1-p))*sigma_v2*beta^2 with
// C = (q_xZ q_zz^{-1} q_zx)^{-1}. Compare against n * variance_robust_ri.
double asymptotic_variance_mcar(const PopulationMoments& m);

// Same object before imposing MCAR: uses q_zz_0 and reduces to the MCAR
// form when q_zz_0 == q_zz.
double asymptotic_variance_homoskedastic(const PopulationMoments& m);

// Probability limit of n * variance_conventional under homoskedasticity
// and MCAR: C*sigma_u2 + C*p*(2*sigma_uv*beta + sigma_v2*beta^2).
double conventional_variance_limit(const PopulationMoments& m);

}  // namespace ivimpute
