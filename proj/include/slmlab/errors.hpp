#pragma once

#include <stdexcept>
#include <string>

namespace slm {

// Bad user input: unknown names, out-of-range parameters, malformed configs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Something went wrong inside a solver: non-finite state, sparse bins,
// Picard divergence, violated mesh bound.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace slm
