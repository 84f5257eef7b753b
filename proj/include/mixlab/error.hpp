#pragma once

#include <stdexcept>
#include <string>

namespace mixlab {

// Exception families map onto CLI exit codes: usage (1), data (2),
// numerical (3).

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input, shape mismatch, missing file or I/O failure.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Infeasible configuration, singular system, or a model that failed to fit.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mixlab
