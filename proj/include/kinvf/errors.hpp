#pragma once

#include <stdexcept>

namespace kinvf {

// Data reaches the edge of the grid where it must vanish.
struct SupportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A time-stepping run stopped (support, negativity, non-finite values).
struct SolverAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kinvf
