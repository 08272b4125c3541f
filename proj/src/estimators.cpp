#include "ivimpute/estimators.hpp"

#include <cmath>
#include <limits>

#include "ivimpute/errors.hpp"
#include "ivimpute/kernels.hpp"
#include "ivimpute/variance.hpp"

namespace ivimpute {

InstrumentProjection::InstrumentProjection(const Matrix& z)
    : qr_(z), n_(z.rows()) {
  if (qr_.rank_ratio() < kRankRatioTol)
    throw EstimationError("rank-deficient instrument matrix");
}

ProjectedRegressor project_regressor(const InstrumentProjection& proj,
                                     const Vector& x) {
  const auto& ops = kernels::active();
  const Vector c = proj.qt_head(x);
  double s = 0.0;
  for (double v : c) s += v * v;
  const double xx = ops.dot(x.data(), x.data(), x.size());
  if (s <= kRankRatioTol * kRankRatioTol * xx || s == 0.0)
    throw EstimationError(
        "zero first-stage relevance: x'P_Z x vanishes numerically");
  return ProjectedRegressor{proj.r_solve(c), s};
}

FirstStageFit first_stage(const SplitDataset& s) {
  const std::size_t n0 = s.n0();
  const std::size_t L = s.L();
  if (n0 <= L)
    throw EstimationError("first stage needs n0 > L, got n0 = " +
                          std::to_string(n0) + ", L = " + std::to_string(L));
  QRPivoted qr(s.Z0);
  if (qr.rank_ratio() < kRankRatioTol)
    throw EstimationError("rank-deficient complete-case instrument matrix");

  FirstStageFit fit;
  fit.pi_cc = qr.solve(s.x0);
  fit.n0 = n0;
  fit.L = L;
  fit.residuals_cc.resize(n0);
  double fitted_ss = 0.0;
  double rss = 0.0;
  for (std::size_t i = 0; i < n0; ++i) {
    const double fitted = row_dot(s.Z0, i, fit.pi_cc);
    const double r = s.x0[i] - fitted;
    fit.residuals_cc[i] = r;
    fitted_ss += fitted * fitted;
    rss += r * r;
  }
  const double s2 = rss / static_cast<double>(n0 - L);
  if (s2 > 0.0) {
    fit.f_statistic = (fitted_ss / static_cast<double>(L)) / s2;
  } else {
    fit.f_statistic =
        fitted_ss == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return fit;
}

double tsls(const Vector& y, const Vector& x, const Matrix& z) {
  if (y.size() != x.size() || z.rows() != y.size())
    throw ValidationError("tsls: y, x, Z disagree on the number of rows");
  InstrumentProjection proj(z);
  const Vector c_x = proj.qt_head(x);
  const Vector c_y = proj.qt_head(y);
  double s = 0.0;
  double cross = 0.0;
  for (std::size_t j = 0; j < c_x.size(); ++j) {
    s += c_x[j] * c_x[j];
    cross += c_x[j] * c_y[j];
  }
  const auto& ops = kernels::active();
  const double xx = ops.dot(x.data(), x.data(), x.size());
  if (s <= kRankRatioTol * kRankRatioTol * xx || s == 0.0)
    throw EstimationError(
        "zero first-stage relevance: x'P_Z x vanishes numerically");
  return cross / s;
}

double tsls_complete_case(const SplitDataset& s) {
  return tsls(s.y0, s.x0, s.Z0);
}

RIEstimate tsls_ri(const IVDataset& d) {
  const IVDataset dv = validate(d);
  const SplitDataset sp = split(dv);
  const ImputedDataset imp = impute(sp);
  const std::size_t n = imp.n();

  InstrumentProjection proj(imp.Z);
  const Vector c_x = proj.qt_head(imp.x_tilde);
  const Vector c_y = proj.qt_head(imp.y);
  double s = 0.0;
  double cross = 0.0;
  for (std::size_t j = 0; j < c_x.size(); ++j) {
    s += c_x[j] * c_x[j];
    cross += c_x[j] * c_y[j];
  }
  const auto& ops = kernels::active();
  const double xx =
      ops.dot(imp.x_tilde.data(), imp.x_tilde.data(), imp.x_tilde.size());
  if (s <= kRankRatioTol * kRankRatioTol * xx || s == 0.0)
    throw EstimationError(
        "zero first-stage relevance: x'P_Z x vanishes numerically");

  RIEstimate est;
  est.beta_hat = cross / s;
  est.n = n;
  est.n0 = sp.n0();
  est.n1 = sp.n1();
  est.p_hat = sp.p_hat;

  est.residuals_u_tilde.resize(n);
  ops.sub_scaled(est.residuals_u_tilde.data(), imp.y.data(), est.beta_hat,
                 imp.x_tilde.data(), n);
  // v_tilde = x_tilde - Z pi_cc; the same row_dot evaluation used by
  // impute(), so imputed rows come out exactly zero.
  est.residuals_v_tilde.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    est.residuals_v_tilde[i] = imp.x_tilde[i] - row_dot(imp.Z, i, imp.pi_cc);

  const MomentBlocks blocks =
      compute_moment_blocks(imp, est.residuals_u_tilde, est.residuals_v_tilde);
  const ProjectedRegressor reg{proj.r_solve(c_x), s};
  const VarianceResult robust =
      variance_robust_from_blocks(blocks, reg, est.beta_hat);
  est.variance_robust_ri = robust.value;
  if (robust.clamped)
    est.warnings.push_back(
        "robust variance was negative in finite sample and was clamped to 0");
  est.variance_conventional =
      variance_conventional_from_parts(est.residuals_u_tilde, reg);
  est.se_robust_ri = std::sqrt(est.variance_robust_ri);
  est.se_conventional = std::sqrt(est.variance_conventional);
  return est;
}

}  // namespace ivimpute
