#pragma once

#include <array>
#include <vector>

#include "rfla/geometry.hpp"

namespace rfla {

/// One candidate solution: a circle carrying a filled, translucent shape.
struct Particle {
  double cx = 0.0;
  double cy = 0.0;
  double r = 10.0;
  double alpha = 1.0;
  std::array<double, 3> rgb{};
  std::vector<double> angles;

  Circle circle() const { return {cx, cy, r}; }

  friend bool operator==(const Particle&, const Particle&) = default;
};

}  // namespace rfla
