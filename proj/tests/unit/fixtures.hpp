#pragma once

#include <algorithm>
#include <cmath>

#include "qgalv/condensate.hpp"
#include "qgalv/nanowire.hpp"

namespace fixture {

inline qgalv::TrapConfig trap(double atoms = 1e5) {
  qgalv::TrapConfig t;
  t.atom_number = atoms;
  return t;
}

inline qgalv::NanowireConfig wire() { return {}; }

/// Relative difference, safe at zero.
inline double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace fixture
