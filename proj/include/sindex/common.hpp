#pragma once

#include <stdexcept>
#include <string>

namespace sindex {

// Input-side failures: malformed CSV, invalid configuration. The CLI maps
// these to exit code 2.
class IngestError : public std::runtime_error {
 public:
  explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures during estimation: rank deficiency, singular restricted
// information, non-convergence. The CLI maps these to exit code 3.
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sindex
