#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivimpute/report.hpp"
#include "ivimpute/simulation.hpp"

namespace ivimpute::cli {

struct EstimateArgs {
  std::string data_path;
  std::string outcome_col;
  std::string endogenous_col;
  std::vector<std::string> instrument_cols;
  double null_value = 0.0;
  double alpha = 0.05;
};

// CSV ingestion (empty cell or the literal token NA in the endogenous
// column means missing) followed by validate -> tsls_ri -> wald test.
EstimateReport run_estimate(const EstimateArgs& args);

// Loads a dataset from CSV with the same missing-token rules.
IVDataset load_dataset(const EstimateArgs& args);

struct SimulateArgs {
  std::string config_path;              // JSON file matching SimConfig
  std::string preset;                   // paper-fig1 | paper-fig2
  double scale = 1.0;                   // preset scale: R*scale, step/scale
  std::optional<std::uint64_t> seed;    // --seed beats IVIMPUTE_SEED beats file
  std::optional<int> repl;
  std::optional<std::vector<double>> p_grid;
  int threads = 0;
  std::string out_path;
  std::string format = "csv";           // csv | json
};

struct SimulateOutput {
  std::vector<std::string> files;
  nlohmann::json echo;  // fully resolved config(s), including the seed
};

SimulateOutput run_simulate(const SimulateArgs& args);

// Statistical fields only; deliberately excludes the thread count so output
// files are byte-identical for any --threads.
nlohmann::json config_to_json(const SimConfig& config);
SimConfig config_from_json(const nlohmann::json& j);
SimConfig load_config_file(const std::string& path);

}  // namespace ivimpute::cli
