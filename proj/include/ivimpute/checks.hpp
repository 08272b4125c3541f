#pragma once

#include <string>
#include <vector>

namespace ivimpute::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // measured vs expected
};

std::vector<std::string> names();

// Runs the named check, or every check when `only` is empty. Setting the
// environment variable IVIMPUTE_CHECK_FAULT adds a deliberately failing
// entry (used to test error propagation in scripts).
std::vector<CheckResult> run(const std::string& only = "");

}  // namespace ivimpute::checks
