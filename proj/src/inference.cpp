#include "ivimpute/inference.hpp"

#include <cmath>
#include <limits>

#include "ivimpute/errors.hpp"

namespace ivimpute {

std::string to_string(VarianceKind k) {
  switch (k) {
    case VarianceKind::robust_ri:
      return "robust_ri";
    case VarianceKind::conventional:
      return "conventional";
    case VarianceKind::complete_case_hc0:
      return "complete_case_hc0";
  }
  return "unknown";
}

// AS241 (Wichura 1988), the double-precision PPND16 variant.
double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw ValidationError("normal_quantile: probability must be in (0, 1)");
  const double q = prob - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) *
                     r +
                 4.5921953931549871457e4) *
                    r +
                1.3731693765509461125e4) *
                   r +
               1.9715909503065514427e3) *
                  r +
              1.3314166789178437745e2) *
                 r +
             3.3871328727963666080e0);
    const double den =
        ((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
             3.9307895800092710610e4) *
                r +
            2.1213794301586595867e4) *
               r +
           5.3941960214247511077e3) *
              r +
          6.8718700749205790830e2) *
             r +
         4.2313330701600911252e1) *
            r +
        1.0;
    return num / den;
  }
  double r = q < 0.0 ? prob : 1.0 - prob;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e0) *
                r +
            3.64784832476320460504e0) *
               r +
           5.76949722146069140550e0) *
              r +
          4.63033784615654529590e0) *
             r +
         1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e0) *
              r +
          2.05319162663775882187e0) *
             r +
         1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e0) *
              r +
          5.46378491116411436990e0) *
             r +
         6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                  r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double critical_z(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("alpha must be in (0, 1)");
  return normal_quantile(1.0 - alpha / 2.0);
}

TestResult wald_test(double beta_hat, double variance, double null_value,
                     double alpha, VarianceKind kind) {
  if (!(variance >= 0.0))
    throw ValidationError("wald_test: variance must be >= 0");
  TestResult r;
  r.beta_hat = beta_hat;
  r.null_value = null_value;
  r.alpha = alpha;
  r.variance_kind = kind;
  r.se = std::sqrt(variance);
  const double z = critical_z(alpha);
  const double half = z * r.se;
  r.ci_low = beta_hat - half;
  r.ci_high = beta_hat + half;
  const double diff = beta_hat - null_value;
  if (r.se > 0.0) {
    r.t_stat = diff / r.se;
    // |diff| > z*se rather than |t| > z keeps the CI duality exact.
    r.reject = std::abs(diff) > half;
  } else {
    if (diff == 0.0) {
      r.t_stat = 0.0;
      r.reject = false;
    } else {
      r.t_stat = std::copysign(std::numeric_limits<double>::infinity(), diff);
      r.reject = true;
      r.extreme = true;
    }
  }
  return r;
}

}  // namespace ivimpute
