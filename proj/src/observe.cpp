#include "kdl/observe.hpp"

#include <cmath>

namespace kdl {

bool Window::contains(const Box& box, const Vec& x) const {
  for (int k = 0; k < box.dim(); ++k) {
    if (hi[k] <= lo[k]) continue;
    const double w = hi[k] - lo[k];
    double off = x[k] - lo[k];
    off -= box.side() * std::floor(off / box.side());
    if (off >= w) return false;
  }
  return true;
}

Observation observe(double time, std::span<const Vec> points, const Box& box, const Window& window,
                    const std::vector<InnerFunction>& functions) {
  Observation o;
  o.time = time;
  o.obs.assign(functions.size(), 0.0);
  for (const Vec& x : points) {
    if (window.contains(box, x)) ++o.count;
    for (std::size_t k = 0; k < functions.size(); ++k) o.obs[k] += functions[k].value(x);
  }
  return o;
}

}  // namespace kdl
