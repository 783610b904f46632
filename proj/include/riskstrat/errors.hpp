#pragma once

#include <stdexcept>
#include <string>

namespace riskstrat {

// Error taxonomy mirrored by the CLI exit codes: usage 1, data 2, fit 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace riskstrat
