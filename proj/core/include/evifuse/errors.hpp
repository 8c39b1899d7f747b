#pragma once

#include <stdexcept>
#include <string>

namespace evifuse {

// Bad input: malformed data, invalid arguments, unreadable files.
// The CLI maps this family to exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A well-formed request that cannot be computed (total conflict,
// divergence, non-finite intermediates). The CLI maps this to exit code 1.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace evifuse
