#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace ivimpute {

// Presentation form of an imputed-2SLS fit for the CLI.
struct EstimateReport {
  double beta_hat = 0.0;
  double se_robust_ri = 0.0;
  double se_conventional = 0.0;
  double ci_low = 0.0;   // robust CI
  double ci_high = 0.0;
  double t_robust = 0.0;
  double null_value = 0.0;
  double alpha = 0.05;
  double p_hat = 0.0;
  std::size_t n = 0, n0 = 0, n1 = 0, L = 0;
  double cc_first_stage_f = 0.0;
  std::vector<std::string> warnings;
};

nlohmann::json report_to_json(const EstimateReport& r);
EstimateReport report_from_json(const nlohmann::json& j);
std::string report_to_text(const EstimateReport& r);

}  // namespace ivimpute
