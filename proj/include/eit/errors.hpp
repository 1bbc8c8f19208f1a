#pragma once

#include <stdexcept>
#include <string>

namespace eit {

// Invalid user-supplied parameters, geometry, or file contents.
// CLI maps this to exit code 1.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// A solve or assembly violated its numerical contract (non-convergence,
// residual breach, degenerate geometry discovered mid-computation).
// CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace eit
