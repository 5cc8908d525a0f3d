#pragma once

#include <stdexcept>
#include <string>

namespace lorentz {

// Malformed or inconsistent input data (bad file, unknown id, cycle, ...).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure (non-finite loss/gradient, off-manifold point, ...).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lorentz
