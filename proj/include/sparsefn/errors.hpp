#pragma once

#include <stdexcept>
#include <string>

namespace sparsefn {

/// Rejected input: bad parameters, malformed files, violated preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not meet its contract (e.g. bracket cap hit).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw InputError(message);
}

}  // namespace sparsefn
