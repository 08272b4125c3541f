#pragma once

#include <string>
#include <vector>

#include "ivimpute/simulation.hpp"

namespace ivimpute {

// Minimal CSV support for the CLI: header row required, comma separated,
// no quoting (the data files here are purely numeric).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // raw cells, trimmed

  // Column index by name; throws ValidationError when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// Strict double parser; context goes into the error message
// ("row 7, column price"). Throws ValidationError on anything that is not
// a complete numeric token.
double parse_double(const std::string& cell, const std::string& context);

// Shortest 17-significant-digit representation; round-trips exactly.
std::string format_double(double v);

// Experiment table with the fixed header
// p,rmse,mean_se_robust,mean_se_conventional,rejection_robust,
// rejection_conventional,mean_cc_f,replications_used.
void write_experiment_csv(const std::string& path,
                          const std::vector<ExperimentRow>& rows);
std::vector<ExperimentRow> read_experiment_csv(const std::string& path);

}  // namespace ivimpute
