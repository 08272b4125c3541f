#include "ivimpute/report.hpp"

#include <sstream>

#include "ivimpute/csv.hpp"

namespace ivimpute {

nlohmann::json report_to_json(const EstimateReport& r) {
  return nlohmann::json{{"beta_hat", r.beta_hat},
                        {"se_robust_ri", r.se_robust_ri},
                        {"se_conventional", r.se_conventional},
                        {"ci_robust", {r.ci_low, r.ci_high}},
                        {"t_robust", r.t_robust},
                        {"null_value", r.null_value},
                        {"alpha", r.alpha},
                        {"p_hat", r.p_hat},
                        {"n", r.n},
                        {"n0", r.n0},
                        {"n1", r.n1},
                        {"L", r.L},
                        {"cc_first_stage_f", r.cc_first_stage_f},
                        {"warnings", r.warnings}};
}

EstimateReport report_from_json(const nlohmann::json& j) {
  EstimateReport r;
  r.beta_hat = j.at("beta_hat").get<double>();
  r.se_robust_ri = j.at("se_robust_ri").get<double>();
  r.se_conventional = j.at("se_conventional").get<double>();
  r.ci_low = j.at("ci_robust").at(0).get<double>();
  r.ci_high = j.at("ci_robust").at(1).get<double>();
  r.t_robust = j.at("t_robust").get<double>();
  r.null_value = j.at("null_value").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.p_hat = j.at("p_hat").get<double>();
  r.n = j.at("n").get<std::size_t>();
  r.n0 = j.at("n0").get<std::size_t>();
  r.n1 = j.at("n1").get<std::size_t>();
  r.L = j.at("L").get<std::size_t>();
  r.cc_first_stage_f = j.at("cc_first_stage_f").get<double>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string report_to_text(const EstimateReport& r) {
  std::ostringstream out;
  out << "2SLS with regression imputation\n"
      << "  observations        " << r.n << " (complete " << r.n0
      << ", imputed " << r.n1 << ", p_hat " << format_double(r.p_hat) << ")\n"
      << "  instruments         " << r.L << "\n"
      << "  beta_hat            " << format_double(r.beta_hat) << "\n"
      << "  se (robust)         " << format_double(r.se_robust_ri) << "\n"
      << "  se (conventional)   " << format_double(r.se_conventional) << "\n"
      << "  t vs null="
      << format_double(r.null_value) << "    " << format_double(r.t_robust)
      << "\n"
      << "  " << format_double(100.0 * (1.0 - r.alpha))
      << "% CI (robust)    [" << format_double(r.ci_low) << ", "
      << format_double(r.ci_high) << "]\n"
      << "  first-stage F (CC)  " << format_double(r.cc_first_stage_f)
      << "\n";
  for (const auto& w : r.warnings) out << "  warning: " << w << "\n";
  return out.str();
}

}  // namespace ivimpute
