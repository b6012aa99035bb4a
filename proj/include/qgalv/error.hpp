#pragma once

#include <stdexcept>
#include <string>

namespace qgalv {

/// Input violates a documented precondition (bad config, out-of-range parameter, mismatched grids).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not deliver its contract (quadrature or solver non-convergence,
/// a physically impossible result such as a negative atom number).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace detail
}  // namespace qgalv
