#include "ivimpute/cli.hpp"

#include <cstdlib>
#include <fstream>

#include "ivimpute/csv.hpp"
#include "ivimpute/errors.hpp"
#include "ivimpute/estimators.hpp"
#include "ivimpute/inference.hpp"

namespace ivimpute::cli {

namespace {

bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "NA";
}

}  // namespace

IVDataset load_dataset(const EstimateArgs& args) {
  const CsvTable t = read_csv(args.data_path);
  const std::size_t jy = t.column(args.outcome_col);
  const std::size_t jx = t.column(args.endogenous_col);
  if (args.instrument_cols.empty())
    throw ValidationError("at least one instrument column is required");
  std::vector<std::size_t> jz;
  for (const auto& name : args.instrument_cols) jz.push_back(t.column(name));

  const std::size_t n = t.rows.size();
  if (n == 0) throw ValidationError("'" + args.data_path + "': no data rows");
  IVDataset d;
  d.y.resize(n);
  d.x.assign(n, 0.0);
  d.x_missing.assign(n, 0);
  d.Z = Matrix(n, jz.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cells = t.rows[i];
    // data row i+1 sits on file line i+2 (header is line 1)
    const std::string rowctx =
        "row " + std::to_string(i + 1) + " (line " + std::to_string(i + 2) +
        ")";
    if (is_missing_token(cells[jy]))
      throw ValidationError("missingness outside endogenous column, " +
                            rowctx + " (column " + args.outcome_col + ")");
    d.y[i] = parse_double(cells[jy], rowctx + ", column " + args.outcome_col);
    if (is_missing_token(cells[jx])) {
      d.x_missing[i] = 1;
    } else {
      d.x[i] =
          parse_double(cells[jx], rowctx + ", column " + args.endogenous_col);
    }
    for (std::size_t k = 0; k < jz.size(); ++k) {
      if (is_missing_token(cells[jz[k]]))
        throw ValidationError("missingness outside endogenous column, " +
                              rowctx + " (column " + args.instrument_cols[k] +
                              ")");
      d.Z(i, k) = parse_double(cells[jz[k]],
                               rowctx + ", column " + args.instrument_cols[k]);
    }
  }
  return d;
}

EstimateReport run_estimate(const EstimateArgs& args) {
  if (!(args.alpha > 0.0 && args.alpha < 1.0))
    throw ValidationError("alpha must be in (0, 1)");
  const IVDataset d = validate(load_dataset(args));
  const SplitDataset sp = split(d);
  const FirstStageFit fit = first_stage(sp);
  const RIEstimate est = tsls_ri(d);
  const TestResult test =
      wald_test(est.beta_hat, est.variance_robust_ri, args.null_value,
                args.alpha, VarianceKind::robust_ri);

  EstimateReport r;
  r.beta_hat = est.beta_hat;
  r.se_robust_ri = est.se_robust_ri;
  r.se_conventional = est.se_conventional;
  r.ci_low = test.ci_low;
  r.ci_high = test.ci_high;
  r.t_robust = test.t_stat;
  r.null_value = args.null_value;
  r.alpha = args.alpha;
  r.p_hat = est.p_hat;
  r.n = est.n;
  r.n0 = est.n0;
  r.n1 = est.n1;
  r.L = d.L();
  r.cc_first_stage_f = fit.f_statistic;
  r.warnings = est.warnings;
  if (test.extreme)
    r.warnings.push_back("zero standard error with beta_hat != null: "
                         "t reported as infinite");
  return r;
}

nlohmann::json config_to_json(const SimConfig& config) {
  return nlohmann::json{{"beta", config.beta},
                        {"L", config.L},
                        {"n", config.n},
                        {"R", config.R},
                        {"sigma_uv", config.sigma_uv},
                        {"phi", config.phi},
                        {"f_target", config.f_target},
                        {"p_grid", config.effective_p_grid()},
                        {"seed", config.seed},
                        {"alpha", config.alpha},
                        {"homoskedastic_override",
                         config.homoskedastic_override}};
}

SimConfig config_from_json(const nlohmann::json& j) {
  SimConfig c;
  double p_max = -1.0, p_step = -1.0;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "beta") {
        c.beta = value.get<double>();
      } else if (key == "L") {
        c.L = value.get<int>();
      } else if (key == "n") {
        c.n = value.get<int>();
      } else if (key == "R") {
        c.R = value.get<int>();
      } else if (key == "sigma_uv") {
        c.sigma_uv = value.get<double>();
      } else if (key == "phi") {
        c.phi = value.get<double>();
      } else if (key == "f_target") {
        c.f_target = value.get<double>();
      } else if (key == "p_grid") {
        c.p_grid = value.get<std::vector<double>>();
      } else if (key == "p_max") {
        p_max = value.get<double>();
      } else if (key == "p_step") {
        p_step = value.get<double>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "alpha") {
        c.alpha = value.get<double>();
      } else if (key == "homoskedastic_override") {
        c.homoskedastic_override = value.get<bool>();
      } else {
        throw ValidationError("unknown config field '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config field '" + key + "' has the wrong type");
    }
  }
  if (p_max >= 0.0 || p_step >= 0.0) {
    if (!c.p_grid.empty())
      throw ValidationError("config: give either p_grid or p_max/p_step");
    if (!(p_step > 0.0))
      throw ValidationError("config field 'p_step' must be > 0");
    if (!(p_max >= 0.0 && p_max < 1.0))
      throw ValidationError("config field 'p_max' must be in [0, 1)");
    c.p_grid = make_p_grid(p_max, p_step);
  }
  c.validate();
  return c;
}

SimConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path + "': invalid JSON: " + e.what());
  }
  return config_from_json(j);
}

namespace {

SimConfig preset_config(const std::string& name, double scale) {
  if (name != "paper-fig1" && name != "paper-fig2")
    throw ValidationError("unknown preset '" + name +
                          "' (expected paper-fig1 or paper-fig2)");
  if (!(scale > 0.0 && scale <= 1.0))
    throw ValidationError("--scale must be in (0, 1]");
  SimConfig c;  // experiment defaults
  c.R = std::max(1, static_cast<int>(std::lround(c.R * scale)));
  c.p_grid = make_p_grid(0.8, 0.005 / scale);
  return c;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

void write_one(const std::string& path, const std::string& format,
               const SimConfig& config,
               const std::vector<ExperimentRow>& rows) {
  if (format == "csv") {
    write_experiment_csv(path, rows);
    return;
  }
  if (format != "json")
    throw ValidationError("unknown output format '" + format + "'");
  nlohmann::json jrows = nlohmann::json::array();
  for (const auto& r : rows)
    jrows.push_back({{"p", r.p},
                     {"rmse", r.rmse},
                     {"mean_se_robust", r.mean_se_robust},
                     {"mean_se_conventional", r.mean_se_conventional},
                     {"rejection_robust", r.rejection_robust},
                     {"rejection_conventional", r.rejection_conventional},
                     {"mean_cc_f", r.mean_cc_f},
                     {"replications_used", r.replications_used}});
  nlohmann::json doc{{"config", config_to_json(config)}, {"rows", jrows}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace

SimulateOutput run_simulate(const SimulateArgs& args) {
  if (args.out_path.empty())
    throw ValidationError("simulate requires --out <path>");
  if (!args.config_path.empty() && !args.preset.empty())
    throw ValidationError("give either --config or --preset, not both");

  SimConfig base;
  if (!args.config_path.empty()) {
    base = load_config_file(args.config_path);
  } else if (!args.preset.empty()) {
    base = preset_config(args.preset, args.scale);
  }

  if (const char* env = std::getenv("IVIMPUTE_SEED")) {
    try {
      base.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ValidationError("IVIMPUTE_SEED is not a valid unsigned integer");
    }
  }
  if (args.seed.has_value()) base.seed = *args.seed;
  if (args.repl.has_value()) base.R = *args.repl;
  if (args.p_grid.has_value()) base.p_grid = *args.p_grid;
  base.validate();

  SimulateOutput out;
  if (!args.preset.empty()) {
    // The experiment reports both endogeneity signs: one table each.
    out.echo["preset"] = args.preset;
    nlohmann::json configs = nlohmann::json::array();
    for (const double sign : {+1.0, -1.0}) {
      SimConfig c = base;
      c.sigma_uv = sign * std::abs(c.sigma_uv);
      const std::string path =
          with_suffix(args.out_path, sign > 0 ? "_uvpos" : "_uvneg");
      const std::vector<ExperimentRow> rows =
          run_experiment(c, args.threads);
      write_one(path, args.format, c, rows);
      out.files.push_back(path);
      configs.push_back(config_to_json(c));
    }
    out.echo["config"] = configs;
  } else {
    const std::vector<ExperimentRow> rows = run_experiment(base, args.threads);
    write_one(args.out_path, args.format, base, rows);
    out.files.push_back(args.out_path);
    out.echo["config"] = config_to_json(base);
  }
  out.echo["files"] = out.files;
  return out;
}

}  // namespace ivimpute::cli
