#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ivimpute/checks.hpp"
#include "ivimpute/cli.hpp"
#include "ivimpute/errors.hpp"
#include "ivimpute/kernels.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitEstimation = 3;
constexpr int kExitIo = 4;

int do_estimate(const ivimpute::cli::EstimateArgs& args,
                const std::string& format, const std::string& out_path) {
  if (format != "json" && format != "text")
    throw ivimpute::ValidationError("--format must be json or text");
  const ivimpute::EstimateReport report = ivimpute::cli::run_estimate(args);
  const std::string body =
      format == "json" ? ivimpute::report_to_json(report).dump(2) + "\n"
                       : ivimpute::report_to_text(report);
  if (out_path.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(out_path);
    if (!out)
      throw ivimpute::IoError("cannot open '" + out_path + "' for writing");
    out << body;
    if (!out) throw ivimpute::IoError("failed writing '" + out_path + "'");
  }
  return kExitOk;
}

int do_simulate(const ivimpute::cli::SimulateArgs& args) {
  const ivimpute::cli::SimulateOutput out = ivimpute::cli::run_simulate(args);
  std::cout << out.echo.dump(2) << "\n";
  return kExitOk;
}

int do_check(const std::string& only) {
  const auto results = ivimpute::checks::run(only);
  bool all_pass = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << ": "
              << r.detail << "\n";
    all_pass = all_pass && r.pass;
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2SLS estimation with a regression-imputed endogenous "
               "regressor, imputation-aware robust variance, and the "
               "accompanying Monte Carlo engine"};
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand(
      "estimate", "fit 2SLS with regression imputation on a CSV file");
  ivimpute::cli::EstimateArgs eargs;
  std::string est_format = "json";
  std::string est_out;
  est->add_option("--data", eargs.data_path, "CSV file with a header row")
      ->required();
  est->add_option("--outcome", eargs.outcome_col, "outcome column name")
      ->required();
  est->add_option("--endogenous", eargs.endogenous_col,
                  "endogenous regressor column (empty cells or NA = missing)")
      ->required();
  est->add_option("--instruments", eargs.instrument_cols,
                  "comma-separated instrument column names")
      ->required()
      ->delimiter(',');
  est->add_option("--null", eargs.null_value, "null value for the Wald test");
  est->add_option("--alpha", eargs.alpha, "test level in (0, 1)");
  est->add_option("--format", est_format, "json or text");
  est->add_option("--out", est_out, "write the report here instead of stdout");

  // simulate
  auto* sim = app.add_subcommand(
      "simulate", "run the Monte Carlo experiment and write a table per run");
  ivimpute::cli::SimulateArgs sargs;
  std::uint64_t seed_flag = 0;
  int repl_flag = 0;
  std::vector<double> pgrid_flag;
  sim->add_option("--config", sargs.config_path, "JSON config file");
  sim->add_option("--preset", sargs.preset,
                  "paper-fig1 or paper-fig2 (both endogeneity signs)");
  sim->add_option("--scale", sargs.scale,
                  "preset scale: multiplies R, widens the p step");
  auto* seed_opt =
      sim->add_option("--seed", seed_flag, "overrides IVIMPUTE_SEED/config");
  sim->add_option("--threads", sargs.threads,
                  "worker threads (default: machine parallelism); never "
                  "changes results");
  auto* repl_opt = sim->add_option("--repl", repl_flag, "replications per cell");
  auto* pgrid_opt = sim->add_option("--p-grid", pgrid_flag,
                                    "comma-separated missing probabilities")
                        ->delimiter(',');
  sim->add_option("--out", sargs.out_path, "output table path")->required();
  sim->add_option("--format", sargs.format, "csv or json");

  // check
  auto* chk = app.add_subcommand(
      "check", "run the built-in diagnostic suite (nonzero exit on failure)");
  std::string only;
  chk->add_option("--only", only, "run a single named check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (est->parsed()) return do_estimate(eargs, est_format, est_out);
    if (sim->parsed()) {
      if (seed_opt->count() > 0) sargs.seed = seed_flag;
      if (repl_opt->count() > 0) sargs.repl = repl_flag;
      if (pgrid_opt->count() > 0) sargs.p_grid = pgrid_flag;
      return do_simulate(sargs);
    }
    if (chk->parsed()) return do_check(only);
  } catch (const ivimpute::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ivimpute::EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const ivimpute::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
