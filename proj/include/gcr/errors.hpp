#pragma once

#include <stdexcept>
#include <string>

namespace gcr {

// Raised when a run encounters non-finite observations, ratios or losses.
// The CLI maps it to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gcr
