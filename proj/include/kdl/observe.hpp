#pragma once

#include <span>
#include <vector>

#include "kdl/space.hpp"

namespace kdl {

// Axis-aligned window on the torus, [lo, hi) per axis after wrapping of the
// offset from lo. An axis with hi <= lo spans the whole side.
struct Window {
  Vec lo{};
  Vec hi{};
  bool contains(const Box& box, const Vec& x) const;
};

// One row of the observable stream shared by both dynamics.
struct Observation {
  double time = 0.0;
  std::size_t count = 0;     // points in the window
  std::vector<double> obs;   // <phi_k, gamma> for the configured inner functions
};

Observation observe(double time, std::span<const Vec> points, const Box& box, const Window& window,
                    const std::vector<InnerFunction>& functions);

}  // namespace kdl
