#pragma once

#include <stdexcept>

namespace udsgd {

// Error taxonomy used across the library. The CLI maps each class to a
// distinct exit code, so keep the split meaningful:
//   ConfigError     -- malformed config files / unknown keys / bad CLI usage
//   ValidationError -- structurally invalid inputs (graphs, matrices, data)
//   NumericalError  -- runtime numerical failures (divergence, singularity,
//                      stability-condition violations)
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace udsgd
