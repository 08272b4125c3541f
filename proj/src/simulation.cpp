#include "ivimpute/simulation.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <thread>

#include "ivimpute/errors.hpp"
#include "ivimpute/estimators.hpp"
#include "ivimpute/inference.hpp"
#include "ivimpute/rng.hpp"

namespace ivimpute {

void SimConfig::validate() const {
  if (L < 1) throw ValidationError("config.L must be >= 1");
  if (n <= L) throw ValidationError("config.n must be > L");
  if (R < 1) throw ValidationError("config.R must be >= 1");
  if (!(std::abs(sigma_uv) < 1.0))
    throw ValidationError("config.sigma_uv must satisfy |sigma_uv| < 1");
  if (!(phi >= 0.0)) throw ValidationError("config.phi must be >= 0");
  if (!(f_target > 0.0)) throw ValidationError("config.f_target must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("config.alpha must be in (0, 1)");
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (!(p_grid[i] >= 0.0 && p_grid[i] < 1.0))
      throw ValidationError("config.p_grid[" + std::to_string(i) +
                            "] must be in [0, 1)");
  }
}

Vector SimConfig::pi() const {
  const double entry =
      std::sqrt(f_target * static_cast<double>(L) / static_cast<double>(n));
  return Vector(static_cast<std::size_t>(L), entry);
}

std::vector<double> make_p_grid(double p_max, double p_step) {
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double p = static_cast<double>(k) * p_step;
    if (p > p_max + 1e-12) break;
    grid.push_back(p);
  }
  return grid;
}

std::vector<double> SimConfig::effective_p_grid() const {
  if (!p_grid.empty()) return p_grid;
  return make_p_grid(0.8, 0.005);
}

DgpDraw generate(const SimConfig& config, int replication_index) {
  config.validate();
  const std::size_t n = static_cast<std::size_t>(config.n);
  const std::size_t L = static_cast<std::size_t>(config.L);
  rng::CounterRng gen(config.seed, rng::Stream::dgp,
                      static_cast<std::uint64_t>(replication_index));

  DgpDraw draw;
  draw.data.y.resize(n);
  draw.data.x.resize(n);
  draw.data.x_missing.assign(n, 0);
  draw.data.Z = Matrix(n, L);
  draw.u.resize(n);
  draw.v.resize(n);

  const Vector pi = config.pi();
  const double z_sd = 1.0 / std::sqrt(static_cast<double>(L));
  const double het_scale = std::sqrt((1.0 - config.sigma_uv * config.sigma_uv) /
                                     (config.phi + 0.86 * 0.86));
  const double hom_scale =
      std::sqrt(1.0 - config.sigma_uv * config.sigma_uv);

  for (std::size_t i = 0; i < n; ++i) {
    double zz = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      const double zij = z_sd * gen.next_normal();
      draw.data.Z(i, j) = zij;
      zz += zij * zij;
    }
    const double v = gen.next_normal();
    double u;
    if (config.homoskedastic_override) {
      u = config.sigma_uv * v + hom_scale * gen.next_normal();
    } else {
      const double eps1 = std::sqrt(zz) * gen.next_normal();
      const double eps2 = 0.86 * gen.next_normal();
      u = config.sigma_uv * v + het_scale * (config.phi * eps1 + 0.86 * eps2);
    }
    const double x = row_dot(draw.data.Z, i, pi) + v;
    draw.data.x[i] = x;
    draw.data.y[i] = x * config.beta + u;
    draw.u[i] = u;
    draw.v[i] = v;
  }
  return draw;
}

IVDataset mcar_delete(const IVDataset& d, double p, std::uint64_t seed,
                      int replication_index) {
  if (!(p >= 0.0 && p < 1.0))
    throw ValidationError("mcar_delete: p must be in [0, 1)");
  IVDataset out = d;
  // One uniform per row, shared across missing probabilities: the masks for
  // two p values on the same replication are nested, so sweeps over p use
  // common random numbers while each cell stays exactly Bernoulli(p).
  rng::CounterRng gen(seed, rng::Stream::mcar,
                      static_cast<std::uint64_t>(replication_index));
  for (std::size_t i = 0; i < out.n(); ++i) {
    if (gen.next_uniform() < p) {
      out.x_missing[i] = 1;
      out.x[i] = 0.0;
    }
  }
  return out;
}

namespace {

struct ReplicationRecord {
  double beta = 0.0;
  double se_robust = 0.0;
  double se_conventional = 0.0;
  bool reject_robust = false;
  bool reject_conventional = false;
  double cc_f = 0.0;
};

std::optional<ReplicationRecord> run_replication(const SimConfig& config,
                                                 double p, int r) {
  try {
    const DgpDraw draw = generate(config, r);
    const IVDataset deleted = mcar_delete(draw.data, p, config.seed, r);
    const SplitDataset sp = split(deleted);
    const FirstStageFit fit = first_stage(sp);
    const RIEstimate est = tsls_ri(deleted);
    const TestResult robust =
        wald_test(est.beta_hat, est.variance_robust_ri, config.beta,
                  config.alpha, VarianceKind::robust_ri);
    const TestResult conventional =
        wald_test(est.beta_hat, est.variance_conventional, config.beta,
                  config.alpha, VarianceKind::conventional);
    return ReplicationRecord{est.beta_hat,       est.se_robust_ri,
                             est.se_conventional, robust.reject,
                             conventional.reject, fit.f_statistic};
  } catch (const EstimationError&) {
    return std::nullopt;
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

ExperimentRow run_cell(const SimConfig& config, double p, int threads) {
  config.validate();
  if (!(p >= 0.0 && p < 1.0))
    throw ValidationError("run_cell: p must be in [0, 1)");
  const int r_total = config.R;
  std::vector<std::optional<ReplicationRecord>> records(
      static_cast<std::size_t>(r_total));

  const int workers = std::min(resolve_threads(threads), r_total);
  if (workers <= 1) {
    for (int r = 0; r < r_total; ++r)
      records[static_cast<std::size_t>(r)] = run_replication(config, p, r);
  } else {
    // Static block partition: records land in a preallocated slot per
    // replication, and the reduction below walks them in index order, so
    // the result is identical for every worker count.
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const int chunk = (r_total + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(r_total, lo + chunk);
      pool.emplace_back([&, lo, hi]() {
        for (int r = lo; r < hi; ++r)
          records[static_cast<std::size_t>(r)] = run_replication(config, p, r);
      });
    }
    for (auto& t : pool) t.join();
  }

  ExperimentRow row;
  row.p = p;
  int used = 0;
  double sq_err = 0.0, se_r = 0.0, se_c = 0.0, f_acc = 0.0;
  int rej_r = 0, rej_c = 0;
  for (const auto& rec : records) {
    if (!rec.has_value()) continue;
    ++used;
    const double err = rec->beta - config.beta;
    sq_err += err * err;
    se_r += rec->se_robust;
    se_c += rec->se_conventional;
    f_acc += rec->cc_f;
    rej_r += rec->reject_robust ? 1 : 0;
    rej_c += rec->reject_conventional ? 1 : 0;
  }
  const int failed = r_total - used;
  if (static_cast<double>(failed) >
      0.01 * static_cast<double>(r_total))
    throw EstimationError("run_cell: " + std::to_string(failed) + " of " +
                          std::to_string(r_total) +
                          " replications failed (limit is 1%) at p = " +
                          std::to_string(p));
  if (used == 0) throw EstimationError("run_cell: no usable replications");
  const double denom = static_cast<double>(used);
  row.rmse = std::sqrt(sq_err / denom);
  row.mean_se_robust = se_r / denom;
  row.mean_se_conventional = se_c / denom;
  row.rejection_robust = static_cast<double>(rej_r) / denom;
  row.rejection_conventional = static_cast<double>(rej_c) / denom;
  row.mean_cc_f = f_acc / denom;
  row.replications_used = used;
  return row;
}

std::vector<ExperimentRow> run_experiment(const SimConfig& config,
                                          int threads) {
  config.validate();
  std::vector<ExperimentRow> rows;
  const std::vector<double> grid = config.effective_p_grid();
  rows.reserve(grid.size());
  for (double p : grid) rows.push_back(run_cell(config, p, threads));
  return rows;
}

}  // namespace ivimpute
