#pragma once

#include <stdexcept>
#include <string>

namespace ivimpute {

// Invalid input data or configuration (CLI exit code 2).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what)
      : std::runtime_error(what) {}
};

// Estimation cannot proceed: rank deficiency, too few complete cases,
// zero first-stage relevance (CLI exit code 3).
struct EstimationError : std::runtime_error {
  explicit EstimationError(const std::string& what)
      : std::runtime_error(what) {}
};

// File system / parsing trouble at the I/O boundary (CLI exit code 4).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ivimpute
