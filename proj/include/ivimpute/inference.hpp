#pragma once

#include <string>

namespace ivimpute {

enum class VarianceKind { robust_ri, conventional, complete_case_hc0 };

std::string to_string(VarianceKind k);

// Two-sided Wald test and symmetric confidence interval. Critical values
// come from the standard normal, matching the asymptotic theory; at small
// n there is no t correction.
struct TestResult {
  double beta_hat = 0.0;
  double se = 0.0;
  double null_value = 0.0;
  double t_stat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double alpha = 0.05;
  bool reject = false;
  bool extreme = false;  // se == 0 with beta_hat != null_value
  VarianceKind variance_kind = VarianceKind::robust_ri;
};

// variance is the finite-sample object (not sqrt(n)-scaled); se = sqrt of it.
// Throws ValidationError on variance < 0 or alpha outside (0, 1).
TestResult wald_test(double beta_hat, double variance, double null_value,
                     double alpha,
                     VarianceKind kind = VarianceKind::robust_ri);

// z with Phi(z) = 1 - alpha/2, via the AS241 rational approximation
// (absolute error well below 1e-8). Throws ValidationError for alpha
// outside (0, 1).
double critical_z(double alpha);

// Standard normal quantile and CDF helpers.
double normal_quantile(double prob);
double normal_cdf(double z);

}  // namespace ivimpute
