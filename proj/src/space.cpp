#include "kdl/space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kdl/errors.hpp"
#include "kdl/rng.hpp"

namespace kdl {

// ---------------------------------------------------------------------------
// Box

Box::Box(int dim, double side) : dim_(dim), side_(side) {
  if (dim < 1 || dim > kMaxDim) throw ValidationError("box: dim must be in 1..3");
  if (!(side > 0.0) || !std::isfinite(side)) throw ValidationError("box: side must be positive and finite");
}

double Box::volume() const { return std::pow(side_, dim_); }

Vec Box::min_image_diff(const Vec& x, const Vec& y) const {
  Vec d{};
  const double half = 0.5 * side_;
  for (int k = 0; k < dim_; ++k) {
    double v = x[k] - y[k];
    v -= side_ * std::floor(v / side_ + 0.5);
    if (v >= half) v -= side_;
    if (v < -half) v += side_;
    d[k] = v;
  }
  return d;
}

Vec Box::wrap(const Vec& x) const {
  Vec w{};
  for (int k = 0; k < dim_; ++k) {
    double v = x[k] - side_ * std::floor(x[k] / side_);
    if (v >= side_ || v < 0.0) v = 0.0;
    w[k] = v;
  }
  return w;
}

bool Box::contains(const Vec& x) const {
  for (int k = 0; k < kMaxDim; ++k) {
    if (k < dim_) {
      if (!(x[k] >= 0.0 && x[k] < side_)) return false;
    } else if (x[k] != 0.0) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Configuration

Configuration::Configuration(const Box& box, std::vector<Vec> points) : box_(box) {
  particles_.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) particles_.push_back({i, points[i]});
  next_id_ = points.size();
  validate();
}

Configuration::Configuration(const Box& box, std::vector<Particle> particles)
    : box_(box), particles_(std::move(particles)) {
  for (const auto& p : particles_) next_id_ = std::max(next_id_, p.id + 1);
  validate();
}

void Configuration::validate() const {
  for (const auto& p : particles_) {
    if (!box_.contains(p.pos)) {
      std::ostringstream os;
      os << "configuration: point " << p.id << " lies outside [0, L)^d";
      throw ValidationError(os.str());
    }
  }
  std::vector<std::size_t> order(particles_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return particles_[a].pos < particles_[b].pos; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (particles_[order[i]].pos == particles_[order[i - 1]].pos)
      throw ValidationError("configuration: duplicate points (only simple configurations are allowed)");
  }
  std::vector<std::uint64_t> ids;
  ids.reserve(particles_.size());
  for (const auto& p : particles_) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw ValidationError("configuration: duplicate particle ids");
}

std::vector<Vec> Configuration::positions() const {
  std::vector<Vec> out;
  out.reserve(particles_.size());
  for (const auto& p : particles_) out.push_back(p.pos);
  return out;
}

std::size_t Configuration::find(const Vec& x) const {
  for (std::size_t i = 0; i < particles_.size(); ++i)
    if (particles_[i].pos == x) return i;
  return npos;
}

Configuration Configuration::with_added(const Vec& x) const {
  if (!box_.contains(x)) throw ValidationError("configuration: added point outside the box");
  if (find(x) != npos) throw ValidationError("configuration: added point coincides with an existing point");
  auto ps = particles_;
  ps.push_back({next_id_, x});
  return Configuration(box_, std::move(ps), next_id_ + 1, Unchecked{});
}

Configuration Configuration::without(std::size_t index) const {
  if (index >= particles_.size()) throw ValidationError("configuration: index out of range");
  auto ps = particles_;
  ps.erase(ps.begin() + static_cast<std::ptrdiff_t>(index));
  return Configuration(box_, std::move(ps), next_id_, Unchecked{});
}

Configuration Configuration::with_moved(std::size_t index, const Vec& to) const {
  if (index >= particles_.size()) throw ValidationError("configuration: index out of range");
  if (!box_.contains(to)) throw ValidationError("configuration: moved point outside the box");
  const std::size_t hit = find(to);
  if (hit != npos && hit != index) throw ValidationError("configuration: moved point coincides with another point");
  auto ps = particles_;
  ps[index].pos = to;
  return Configuration(box_, std::move(ps), next_id_, Unchecked{});
}

// ---------------------------------------------------------------------------
// CellList

CellList::CellList(const Box& box, double cutoff, std::span<const Vec> points)
    : box_(box), cutoff_(cutoff), points_(points.begin(), points.end()) {
  if (!(cutoff > 0.0)) throw ValidationError("cell list: cutoff must be positive");
  cells_per_axis_ = static_cast<int>(std::floor(box.side() / cutoff));
  if (cells_per_axis_ > 64) cells_per_axis_ = 64;
  cell_size_ = cells_per_axis_ > 0 ? box.side() / cells_per_axis_ : box.side();
  if (!uses_cells()) return;
  std::size_t count = 1;
  for (int k = 0; k < box.dim(); ++k) count *= static_cast<std::size_t>(cells_per_axis_);
  cells_.assign(count, {});
  cell_index_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cell_index_[i] = cell_of(points_[i]);
    cells_[cell_index_[i]].push_back(i);
  }
}

std::size_t CellList::cell_of(const Vec& x) const {
  std::size_t cell = 0, stride = 1;
  for (int k = 0; k < box_.dim(); ++k) {
    double w = x[k] - box_.side() * std::floor(x[k] / box_.side());
    int c = static_cast<int>(w / cell_size_);
    if (c >= cells_per_axis_) c = cells_per_axis_ - 1;
    if (c < 0) c = 0;
    cell += static_cast<std::size_t>(c) * stride;
    stride *= static_cast<std::size_t>(cells_per_axis_);
  }
  return cell;
}

std::vector<Neighbor> CellList::query(const Vec& x, double r, std::size_t exclude) const {
  std::vector<Neighbor> out;
  for_each_within(x, r, exclude, [&](std::size_t j, const Vec& d, double dist2) {
    out.push_back({j, d, std::sqrt(dist2)});
  });
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
  return out;
}

void CellList::move(std::size_t index, const Vec& to) {
  points_[index] = to;
  if (!uses_cells()) return;
  const std::size_t c = cell_of(to);
  if (c == cell_index_[index]) return;
  auto& old = cells_[cell_index_[index]];
  old.erase(std::find(old.begin(), old.end(), index));
  cells_[c].push_back(index);
  cell_index_[index] = c;
}

std::vector<Neighbor> neighbors_within(const Configuration& gamma, const Vec& x, double r, std::size_t exclude) {
  const Box& box = gamma.box();
  if (!(r > 0.0)) throw ValidationError("neighbors_within: radius must be positive");
  if (r > 0.5 * box.side()) throw ValidationError("neighbors_within: radius exceeds L/2 (minimum image is ambiguous)");
  const auto pts = gamma.positions();
  CellList cells(box, r, pts);
  return cells.query(x, r, exclude);
}

// ---------------------------------------------------------------------------
// InnerFunction

namespace {

struct Step {
  double f, d1, d2;
};

// f(s) = exp(-1/s) for s > 0, else 0, with two derivatives.
Step smooth_edge(double s) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  const double f = std::exp(-1.0 / s);
  const double s2 = s * s;
  return {f, f / s2, f * (1.0 - 2.0 * s) / (s2 * s2)};
}

// Smooth step S(t): 0 for t <= 0, 1 for t >= 1.
Step smooth_step(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const Step a = smooth_edge(t);
  const Step bb = smooth_edge(1.0 - t);
  const double A = a.f, A1 = a.d1, A2 = a.d2;
  const double B = bb.f, B1 = -bb.d1, B2 = bb.d2;
  const double D = A + B, D1 = A1 + B1, D2 = A2 + B2;
  const double num1 = A1 * D - A * D1;
  const double S = A / D;
  const double S1 = num1 / (D * D);
  const double S2 = (A2 * D - A * D2) / (D * D) - 2.0 * D1 * num1 / (D * D * D);
  return {S, S1, S2};
}

}  // namespace

InnerFunction::InnerFunction(const Box& box, Params params) : box_(box), p_(std::move(params)) {
  if (!(p_.radius > 0.0)) throw ValidationError("inner function: radius must be positive");
  if (p_.radius > 0.5 * box.side()) throw ValidationError("inner function: radius exceeds L/2");
  if (p_.window == Window::Plateau && !(p_.inner_radius > 0.0 && p_.inner_radius < p_.radius))
    throw ValidationError("inner function: plateau needs 0 < inner_radius < radius");
  if (!box.contains(p_.center)) throw ValidationError("inner function: centre outside the box");
  for (int k = box.dim(); k < kMaxDim; ++k) {
    p_.linear[k] = 0.0;
    for (int j = 0; j < kMaxDim; ++j) p_.quadratic[k][j] = p_.quadratic[j][k] = 0.0;
  }
}

InnerFunction::Jet InnerFunction::window_jet(const Vec& u) const {
  Jet jet{0.0, Vec{}, Mat{}};
  const int dim = box_.dim();
  if (p_.window == Window::Bump) {
    const double R2 = p_.radius * p_.radius;
    const double q = norm2(u) / R2;
    if (q >= 1.0) return jet;
    const double om = 1.0 - q;
    const double w = std::exp(1.0 - 1.0 / om);
    const double G1 = -1.0 / (om * om);
    const double G2 = -2.0 / (om * om * om);
    const Vec gq = (2.0 / R2) * u;
    jet.v = w;
    jet.g = (w * G1) * gq;
    jet.h = outer(gq, gq);
    for (auto& row : jet.h)
      for (double& x : row) x *= w * (G2 + G1 * G1);
    add_scaled(jet.h, w * G1 * 2.0 / R2, identity(dim));
    return jet;
  }
  const double rho = norm(u);
  if (rho >= p_.radius) return jet;
  if (rho <= p_.inner_radius) {
    jet.v = 1.0;
    return jet;
  }
  const double width = p_.radius - p_.inner_radius;
  const Step s = smooth_step((p_.radius - rho) / width);
  const Vec uhat = (1.0 / rho) * u;
  jet.v = s.f;
  jet.g = (-s.d1 / width) * uhat;
  jet.h = outer(uhat, uhat);
  for (auto& row : jet.h)
    for (double& x : row) x *= s.d2 / (width * width) + s.d1 / (width * rho);
  add_scaled(jet.h, -s.d1 / (width * rho), identity(dim));
  return jet;
}

namespace {

Vec mat_vec(const Mat& m, const Vec& v) {
  Vec out{};
  for (int i = 0; i < kMaxDim; ++i) out[i] = dot(m[i], v);
  return out;
}

}  // namespace

double InnerFunction::value(const Vec& x) const {
  const Vec u = box_.min_image_diff(x, p_.center);
  const Jet w = window_jet(u);
  if (w.v == 0.0) return 0.0;
  const double p = p_.constant + dot(p_.linear, u) + dot(u, mat_vec(p_.quadratic, u));
  return p * w.v;
}

Vec InnerFunction::grad(const Vec& x) const {
  const Vec u = box_.min_image_diff(x, p_.center);
  const Jet w = window_jet(u);
  if (w.v == 0.0 && norm2(w.g) == 0.0) return Vec{};
  const Vec qu = mat_vec(p_.quadratic, u);
  Vec qtu{};
  for (int i = 0; i < kMaxDim; ++i)
    for (int j = 0; j < kMaxDim; ++j) qtu[i] += p_.quadratic[j][i] * u[j];
  const double p = p_.constant + dot(p_.linear, u) + dot(u, qu);
  const Vec gp = p_.linear + qu + qtu;
  return w.v * gp + p * w.g;
}

Mat InnerFunction::hess(const Vec& x) const {
  const Vec u = box_.min_image_diff(x, p_.center);
  const Jet w = window_jet(u);
  if (w.v == 0.0 && norm2(w.g) == 0.0 && max_abs(w.h) == 0.0) return Mat{};
  const Vec qu = mat_vec(p_.quadratic, u);
  Vec qtu{};
  for (int i = 0; i < kMaxDim; ++i)
    for (int j = 0; j < kMaxDim; ++j) qtu[i] += p_.quadratic[j][i] * u[j];
  const double p = p_.constant + dot(p_.linear, u) + dot(u, qu);
  const Vec gp = p_.linear + qu + qtu;
  Mat h{};
  for (int i = 0; i < kMaxDim; ++i)
    for (int j = 0; j < kMaxDim; ++j)
      h[i][j] = w.v * (p_.quadratic[i][j] + p_.quadratic[j][i]) + gp[i] * w.g[j] + w.g[i] * gp[j] +
                p * w.h[i][j];
  return h;
}

double InnerFunction::distance_to_support(const Vec& x) const {
  return box_.min_image_dist(x, p_.center) - p_.radius;
}

// ---------------------------------------------------------------------------
// OuterFunction

OuterFunction OuterFunction::linear(std::vector<double> w, double b) {
  if (w.empty()) throw ValidationError("outer function: arity must be >= 1");
  OuterFunction g(Kind::Linear, w.size());
  g.w_ = std::move(w);
  g.b_ = b;
  return g;
}

OuterFunction OuterFunction::quadratic(std::vector<double> a, std::vector<double> w, double b) {
  const std::size_t n = w.size();
  if (n == 0 || a.size() != n * n) throw ValidationError("outer function: quadratic needs an N x N matrix");
  OuterFunction g(Kind::Quadratic, n);
  g.a_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g.a_[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
  g.w_ = std::move(w);
  g.b_ = b;
  return g;
}

OuterFunction OuterFunction::sine(std::vector<double> w, double b) {
  if (w.empty()) throw ValidationError("outer function: arity must be >= 1");
  OuterFunction g(Kind::Sine, w.size());
  g.w_ = std::move(w);
  g.b_ = b;
  return g;
}

OuterFunction OuterFunction::gaussian(std::size_t n, double scale) {
  if (n == 0 || !(scale > 0.0)) throw ValidationError("outer function: gaussian needs N >= 1 and scale > 0");
  OuterFunction g(Kind::Gaussian, n);
  g.scale_ = scale;
  return g;
}

bool OuterFunction::is_constant() const {
  if (kind_ != Kind::Linear) return false;
  return std::all_of(w_.begin(), w_.end(), [](double v) { return v == 0.0; });
}

double OuterFunction::value(std::span<const double> t) const {
  switch (kind_) {
    case Kind::Linear: {
      double s = b_;
      for (std::size_t i = 0; i < n_; ++i) s += w_[i] * t[i];
      return s;
    }
    case Kind::Quadratic: {
      double s = b_;
      for (std::size_t i = 0; i < n_; ++i) {
        s += w_[i] * t[i];
        for (std::size_t j = 0; j < n_; ++j) s += 0.5 * t[i] * a_[i * n_ + j] * t[j];
      }
      return s;
    }
    case Kind::Sine: {
      double s = b_;
      for (std::size_t i = 0; i < n_; ++i) s += w_[i] * t[i];
      return std::sin(s);
    }
    case Kind::Gaussian: {
      double s = 0.0;
      for (std::size_t i = 0; i < n_; ++i) s += t[i] * t[i];
      return std::exp(-0.5 * s / (scale_ * scale_));
    }
  }
  return 0.0;
}

std::vector<double> OuterFunction::grad(std::span<const double> t) const {
  std::vector<double> g(n_, 0.0);
  switch (kind_) {
    case Kind::Linear:
      g = w_;
      break;
    case Kind::Quadratic:
      for (std::size_t i = 0; i < n_; ++i) {
        g[i] = w_[i];
        for (std::size_t j = 0; j < n_; ++j) g[i] += a_[i * n_ + j] * t[j];
      }
      break;
    case Kind::Sine: {
      double s = b_;
      for (std::size_t i = 0; i < n_; ++i) s += w_[i] * t[i];
      const double c = std::cos(s);
      for (std::size_t i = 0; i < n_; ++i) g[i] = c * w_[i];
      break;
    }
    case Kind::Gaussian: {
      const double v = value(t);
      const double s2 = scale_ * scale_;
      for (std::size_t i = 0; i < n_; ++i) g[i] = -v * t[i] / s2;
      break;
    }
  }
  return g;
}

std::vector<double> OuterFunction::hess(std::span<const double> t) const {
  std::vector<double> h(n_ * n_, 0.0);
  switch (kind_) {
    case Kind::Linear:
      break;
    case Kind::Quadratic:
      h = a_;
      break;
    case Kind::Sine: {
      double s = b_;
      for (std::size_t i = 0; i < n_; ++i) s += w_[i] * t[i];
      const double sn = std::sin(s);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) h[i * n_ + j] = -sn * w_[i] * w_[j];
      break;
    }
    case Kind::Gaussian: {
      const double v = value(t);
      const double s2 = scale_ * scale_;
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
          h[i * n_ + j] = v * (t[i] * t[j] / (s2 * s2) - (i == j ? 1.0 / s2 : 0.0));
      break;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// CylinderFunction

CylinderFunction::CylinderFunction(std::string name, OuterFunction outer, std::vector<InnerFunction> inner)
    : name_(std::move(name)), outer_(std::move(outer)), inner_(std::move(inner)) {
  if (inner_.size() != outer_.arity())
    throw ValidationError("cylinder function: outer arity does not match the number of inner functions");
}

void CylinderFunction::inner_values(const Vec& x, std::span<double> out) const {
  for (std::size_t k = 0; k < inner_.size(); ++k) out[k] = inner_[k].value(x);
}

std::vector<double> CylinderFunction::sums(std::span<const Vec> points) const {
  std::vector<double> t(inner_.size(), 0.0);
  for (const Vec& x : points)
    for (std::size_t k = 0; k < inner_.size(); ++k) t[k] += inner_[k].value(x);
  return t;
}

std::vector<double> CylinderFunction::sums(const Configuration& gamma) const {
  std::vector<double> t(inner_.size(), 0.0);
  for (const auto& p : gamma.particles())
    for (std::size_t k = 0; k < inner_.size(); ++k) t[k] += inner_[k].value(p.pos);
  return t;
}

double CylinderFunction::evaluate(const Configuration& gamma) const { return outer_.value(sums(gamma)); }

Vec CylinderFunction::grad_with_sums(std::span<const double> t, const Vec& x) const {
  const auto dg = outer_.grad(t);
  Vec g{};
  for (std::size_t k = 0; k < inner_.size(); ++k) {
    if (dg[k] == 0.0) continue;
    g += dg[k] * inner_[k].grad(x);
  }
  return g;
}

Mat CylinderFunction::hess_with_sums(std::span<const double> t, const Vec& x) const {
  const std::size_t n = inner_.size();
  const auto dg = outer_.grad(t);
  const auto d2g = outer_.hess(t);
  std::vector<Vec> grads(n);
  for (std::size_t k = 0; k < n; ++k) grads[k] = inner_[k].grad(x);
  Mat h{};
  for (std::size_t k = 0; k < n; ++k) {
    if (dg[k] != 0.0) add_scaled(h, dg[k], inner_[k].hess(x));
    for (std::size_t l = 0; l < n; ++l)
      if (d2g[k * n + l] != 0.0) add_scaled(h, d2g[k * n + l], kdl::outer(grads[k], grads[l]));
  }
  return h;
}

Vec CylinderFunction::grad_at(const Configuration& gamma, std::size_t index) const {
  return grad_with_sums(sums(gamma), gamma.pos(index));
}

Mat CylinderFunction::hess_at(const Configuration& gamma, std::size_t index) const {
  return hess_with_sums(sums(gamma), gamma.pos(index));
}

double CylinderFunction::laplacian_at(const Configuration& gamma, std::size_t index) const {
  return trace(hess_at(gamma, index));
}

Vec CylinderFunction::grad_added(const Configuration& gamma, const Vec& x) const {
  auto t = sums(gamma);
  for (std::size_t k = 0; k < inner_.size(); ++k) t[k] += inner_[k].value(x);
  return grad_with_sums(t, x);
}

double CylinderFunction::distance_to_support(const Vec& x) const {
  double d = INFINITY;
  for (const auto& f : inner_) d = std::min(d, f.distance_to_support(x));
  return d;
}

// ---------------------------------------------------------------------------
// Catalog

std::vector<std::string> cylinder_catalog_names() {
  return {"linear_bump", "quadratic_pair", "sine_pair", "gauss_triple", "quadratic_window", "constant"};
}

namespace {

Vec centre_plus(const Box& box, double dx, double dy, double dz = 0.0) {
  Vec c{};
  const double off[3] = {dx, dy, dz};
  for (int k = 0; k < box.dim(); ++k) c[k] = 0.5 * box.side() + off[k];
  return box.wrap(c);
}

InnerFunction bump(const Box& box, Vec c, double radius, double constant = 1.0, Vec linear = {}) {
  InnerFunction::Params p;
  p.center = c;
  p.radius = std::min(radius, 0.5 * box.side());
  p.constant = constant;
  p.linear = linear;
  return InnerFunction(box, p);
}

}  // namespace

CylinderFunction make_cylinder(const std::string& name, const Box& box) {
  if (name == "linear_bump") {
    return CylinderFunction(name, OuterFunction::linear({1.0}), {bump(box, centre_plus(box, 0, 0), 1.5)});
  }
  if (name == "quadratic_pair") {
    std::vector<InnerFunction> inner{bump(box, centre_plus(box, -0.4, 0.2), 1.2, 1.0, Vec{0.5, 0.0, 0.0}),
                                     bump(box, centre_plus(box, 0.5, -0.3), 1.0, 1.0, Vec{0.0, -0.3, 0.2})};
    return CylinderFunction(name, OuterFunction::quadratic({1.0, 0.5, 0.5, -0.4}, {0.3, -0.2}, 0.1),
                            std::move(inner));
  }
  if (name == "sine_pair") {
    std::vector<InnerFunction> inner{bump(box, centre_plus(box, -0.5, 0.0), 1.3),
                                     bump(box, centre_plus(box, 0.5, 0.1), 1.3)};
    return CylinderFunction(name, OuterFunction::sine({1.0, -0.6}, 0.3), std::move(inner));
  }
  if (name == "gauss_triple") {
    std::vector<InnerFunction> inner{bump(box, centre_plus(box, 0.0, 0.6), 1.0),
                                     bump(box, centre_plus(box, -0.5, -0.3), 1.0),
                                     bump(box, centre_plus(box, 0.5, -0.3), 1.0)};
    return CylinderFunction(name, OuterFunction::gaussian(3, 1.5), std::move(inner));
  }
  if (name == "quadratic_window") {
    InnerFunction::Params p;
    p.center = centre_plus(box, 0, 0);
    p.radius = std::min(2.0, 0.5 * box.side());
    p.inner_radius = 0.5 * p.radius;
    p.window = InnerFunction::Window::Plateau;
    p.constant = 0.0;
    p.quadratic = identity(box.dim());
    return CylinderFunction(name, OuterFunction::linear({1.0}), {InnerFunction(box, p)});
  }
  if (name == "constant") {
    return CylinderFunction(name, OuterFunction::linear({0.0}, 1.0), {bump(box, centre_plus(box, 0, 0), 1.0)});
  }
  throw ValidationError("unknown cylinder function '" + name + "'");
}

CylinderFunction random_cylinder(const Box& box, Rng& rng, double radius) {
  const std::size_t n = 1 + rng.below(3);
  std::vector<InnerFunction> inner;
  for (std::size_t k = 0; k < n; ++k) {
    InnerFunction::Params p;
    for (int a = 0; a < box.dim(); ++a) p.center[a] = rng.uniform(0.0, box.side());
    p.center = box.wrap(p.center);
    p.radius = std::min(rng.uniform(0.8, radius), 0.5 * box.side());
    p.constant = rng.uniform(0.5, 1.5);
    for (int a = 0; a < box.dim(); ++a) p.linear[a] = rng.uniform(-0.5, 0.5);
    inner.emplace_back(box, p);
  }
  std::vector<double> w(n);
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  switch (rng.below(4)) {
    case 0: return CylinderFunction("random_linear", OuterFunction::linear(w, rng.uniform(-1, 1)), std::move(inner));
    case 1: {
      std::vector<double> a(n * n);
      for (auto& v : a) v = rng.uniform(-0.5, 0.5);
      return CylinderFunction("random_quadratic", OuterFunction::quadratic(a, w, 0.0), std::move(inner));
    }
    case 2: return CylinderFunction("random_sine", OuterFunction::sine(w, rng.uniform(-1, 1)), std::move(inner));
    default: return CylinderFunction("random_gauss", OuterFunction::gaussian(n, rng.uniform(0.8, 2.0)), std::move(inner));
  }
}

}  // namespace kdl
