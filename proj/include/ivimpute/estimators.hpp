#pragma once

#include <string>
#include <vector>

#include "ivimpute/linalg.hpp"
#include "ivimpute/matrix.hpp"
#include "ivimpute/model.hpp"

namespace ivimpute {

// Shared projection helper: one QR of Z per dataset serves the 2SLS
// coefficient and every sandwich bread. P_Z itself is never materialized
// (the dense version lives only in test oracles).
class InstrumentProjection {
 public:
  // Throws EstimationError when Z is rank deficient.
  explicit InstrumentProjection(const Matrix& z);

  std::size_t n() const { return n_; }
  std::size_t L() const { return qr_.cols(); }

  // First L coordinates of Q'v.
  Vector qt_head(const Vector& v) const { return qr_.qt_head(v); }
  // R^{-1} c, permutation undone.
  Vector r_solve(const Vector& c) const { return qr_.r_solve(c); }

 private:
  QRPivoted qr_;
  std::size_t n_;
};

// g = (Z'Z)^{-1} Z'x and s = x'P_Z x for a given regressor column.
struct ProjectedRegressor {
  Vector g;
  double s = 0.0;
};

// Throws EstimationError when x'P_Z x vanishes relative to x'x
// (numerically zero first-stage relevance).
ProjectedRegressor project_regressor(const InstrumentProjection& proj,
                                     const Vector& x);

// Complete-case first stage: coefficients, residuals and the joint
// homoskedastic F statistic for pi = 0, all on the n0 complete rows.
struct FirstStageFit {
  Vector pi_cc;
  Vector residuals_cc;
  double f_statistic = 0.0;
  std::size_t n0 = 0;
  std::size_t L = 0;
};

// Requires n0 > L and full-rank Z0.
FirstStageFit first_stage(const SplitDataset& s);

// Plain 2SLS coefficient (x'P_Z x)^{-1} x'P_Z y.
double tsls(const Vector& y, const Vector& x, const Matrix& z);

// 2SLS on the complete cases only.
double tsls_complete_case(const SplitDataset& s);

// 2SLS after regression imputation, with both variance flavors attached.
struct RIEstimate {
  double beta_hat = 0.0;
  double variance_robust_ri = 0.0;
  double variance_conventional = 0.0;
  double se_robust_ri = 0.0;
  double se_conventional = 0.0;
  std::size_t n = 0, n0 = 0, n1 = 0;
  double p_hat = 0.0;
  Vector residuals_u_tilde;  // y_i - x_tilde_i * beta_hat
  Vector residuals_v_tilde;  // x_tilde_i - Z_i'pi_cc; exactly 0 on imputed rows
  std::vector<std::string> warnings;
};

// validate -> split -> impute -> 2SLS, then the variance module.
RIEstimate tsls_ri(const IVDataset& d);

}  // namespace ivimpute
