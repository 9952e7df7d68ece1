#pragma once

#include <stdexcept>

namespace alst {

// API misuse: bad shapes, bad arguments, broken preconditions.
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf produced by numeric code, or a refused optimizer step.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (manifests, feature files).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration: unknown keys, out-of-range values, dim mismatches.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace alst
