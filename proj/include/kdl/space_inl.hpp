#pragma once

// Inline template members of CellList.

namespace kdl {

template <class Fn>
void CellList::for_each_within(const Vec& x, double r, std::size_t exclude, Fn&& fn) const {
  const double r2 = r * r;
  auto visit = [&](std::size_t j) {
    if (j == exclude) return;
    const Vec d = box_.min_image_diff(x, points_[j]);
    const double dist2 = norm2(d);
    if (dist2 <= r2) fn(j, d, dist2);
  };
  if (!uses_cells() || r > cell_size_) {
    for (std::size_t j = 0; j < points_.size(); ++j) visit(j);
    return;
  }
  const int dim = box_.dim();
  const int m = cells_per_axis_;
  std::array<int, kMaxDim> base{};
  for (int k = 0; k < dim; ++k) {
    double w = x[k] - box_.side() * std::floor(x[k] / box_.side());
    int c = static_cast<int>(w / cell_size_);
    if (c >= m) c = m - 1;
    base[k] = c;
  }
  int span_count = 1;
  for (int k = 0; k < dim; ++k) span_count *= 3;
  for (int s = 0; s < span_count; ++s) {
    int rest = s;
    std::size_t cell = 0;
    std::size_t stride = 1;
    for (int k = 0; k < dim; ++k) {
      const int off = rest % 3 - 1;
      rest /= 3;
      int c = (base[k] + off + m) % m;
      cell += static_cast<std::size_t>(c) * stride;
      stride *= static_cast<std::size_t>(m);
    }
    for (std::size_t j : cells_[cell]) visit(j);
  }
}

}  // namespace kdl
