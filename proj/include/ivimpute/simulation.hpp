#pragma once

#include <cstdint>
#include <vector>

#include "ivimpute/matrix.hpp"
#include "ivimpute/model.hpp"

namespace ivimpute {

inline constexpr std::uint64_t kDefaultSeed = 123456789;

// Monte Carlo design. Defaults reproduce the full-scale experiment; the
// CLI presets scale R and the grid step down for desk runs.
struct SimConfig {
  double beta = 0.5;
  int L = 3;
  int n = 1000;
  int R = 5000;
  double sigma_uv = 0.3;      // endogeneity; the experiment uses +/-0.3
  double phi = 5.0;           // heteroskedasticity strength
  double f_target = 100.0;    // full-sample first-stage F calibration
  std::vector<double> p_grid; // defaults to 0:0.005:0.8 when empty
  std::uint64_t seed = kDefaultSeed;
  double alpha = 0.05;
  // Replaces the heteroskedastic structural error with
  // u = sigma_uv*v + sqrt(1-sigma_uv^2)*eta, eta ~ N(0,1). Not part of the
  // experiment design; needed to exercise the closed-form homoskedastic
  // MCAR variance numerically.
  bool homoskedastic_override = false;

  void validate() const;  // throws ValidationError naming the field

  // First-stage coefficients: equal entries sqrt(f_target*L/n), so the
  // full-sample concentration parameter is f_target*L and the full-sample
  // F statistic is close to f_target.
  Vector pi() const;

  std::vector<double> effective_p_grid() const;
};

std::vector<double> make_p_grid(double p_max, double p_step);

// One synthetic draw: x = Z'pi + v, y = x*beta + u, with
// Z_i ~ N(0, (1/L) I_L), v_i ~ N(0,1) and the heteroskedastic structural
// error u_i = sigma_uv*v_i
//   + sqrt((1-sigma_uv^2)/(phi+0.86^2)) * (phi*eps1_i + 0.86*eps2_i),
// eps1_i ~ N(0, Z_i'Z_i), eps2_i ~ N(0, 0.86^2).
struct DgpDraw {
  IVDataset data;  // no missing entries
  Vector u, v;     // ground-truth errors, for moment diagnostics
};

// Deterministic in (config.seed, replication_index); independent of
// evaluation order across replications.
DgpDraw generate(const SimConfig& config, int replication_index);

// Deletes each x_i independently with probability p. Deterministic in
// (seed, replication_index, p).
IVDataset mcar_delete(const IVDataset& d, double p, std::uint64_t seed,
                      int replication_index);

// Per-missing-probability aggregates over replications.
struct ExperimentRow {
  double p = 0.0;
  double rmse = 0.0;
  double mean_se_robust = 0.0;
  double mean_se_conventional = 0.0;
  double rejection_robust = 0.0;
  double rejection_conventional = 0.0;
  double mean_cc_f = 0.0;
  int replications_used = 0;
};

// Runs R replications at missing probability p: generate, delete, estimate,
// test H0: beta = config.beta at config.alpha, aggregate. Replications whose
// estimation fails are excluded and counted; more than 1% failures is an
// error. threads <= 0 uses hardware concurrency; the result does not depend
// on the thread count.
ExperimentRow run_cell(const SimConfig& config, double p, int threads = 0);

// run_cell over the whole grid, ordered by p.
std::vector<ExperimentRow> run_experiment(const SimConfig& config,
                                          int threads = 0);

}  // namespace ivimpute
