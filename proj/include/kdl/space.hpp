#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kdl/vec.hpp"

namespace kdl {

// Periodic cube [0, L)^d.
class Box {
 public:
  Box(int dim, double side);

  int dim() const { return dim_; }
  double side() const { return side_; }
  double volume() const;

  // Representative of x - y with every component in [-L/2, L/2).
  Vec min_image_diff(const Vec& x, const Vec& y) const;
  double min_image_dist(const Vec& x, const Vec& y) const { return norm(min_image_diff(x, y)); }

  // Maps every coordinate into [0, L).
  Vec wrap(const Vec& x) const;
  bool contains(const Vec& x) const;

 private:
  int dim_;
  double side_;
};

struct Particle {
  std::uint64_t id;
  Vec pos;
};

// Finite simple point pattern in a Box. Immutable; the modifiers return new
// values. Ids are stable across modifications and never reused.
class Configuration {
 public:
  // Validates coordinates and pairwise distinctness; assigns ids 0..n-1.
  Configuration(const Box& box, std::vector<Vec> points);
  Configuration(const Box& box, std::vector<Particle> particles);
  explicit Configuration(const Box& box) : box_(box) {}

  const Box& box() const { return box_; }
  std::size_t size() const { return particles_.size(); }
  bool empty() const { return particles_.empty(); }
  const std::vector<Particle>& particles() const { return particles_; }
  const Vec& pos(std::size_t i) const { return particles_[i].pos; }
  std::uint64_t id(std::size_t i) const { return particles_[i].id; }
  std::vector<Vec> positions() const;

  // Index of a point with exactly these coordinates, or npos.
  std::size_t find(const Vec& x) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Configuration with_added(const Vec& x) const;
  Configuration without(std::size_t index) const;
  Configuration with_moved(std::size_t index, const Vec& to) const;

  std::uint64_t next_id() const { return next_id_; }

 private:
  struct Unchecked {};
  Configuration(const Box& box, std::vector<Particle> particles, std::uint64_t next_id, Unchecked)
      : box_(box), particles_(std::move(particles)), next_id_(next_id) {}
  void validate() const;

  Box box_;
  std::vector<Particle> particles_;
  std::uint64_t next_id_ = 0;
};

struct Neighbor {
  std::size_t index;
  Vec displacement;  // min_image_diff(x, y): from the neighbor y to the query point x
  double distance;
};

// Uniform cell decomposition of the torus for fixed-radius queries. Falls
// back to a plain scan when fewer than three cells fit per axis or the query
// radius exceeds the cell size, so results never depend on the decomposition.
class CellList {
 public:
  CellList(const Box& box, double cutoff, std::span<const Vec> points);

  // All points within distance r of x, skipping index `exclude`.
  std::vector<Neighbor> query(const Vec& x, double r, std::size_t exclude = static_cast<std::size_t>(-1)) const;

  template <class Fn>
  void for_each_within(const Vec& x, double r, std::size_t exclude, Fn&& fn) const;

  void move(std::size_t index, const Vec& to);
  std::size_t size() const { return points_.size(); }
  const Vec& point(std::size_t i) const { return points_[i]; }
  bool uses_cells() const { return cells_per_axis_ >= 3; }

 private:
  std::size_t cell_of(const Vec& x) const;

  Box box_;
  double cutoff_;
  int cells_per_axis_;
  double cell_size_;
  std::vector<Vec> points_;
  std::vector<std::vector<std::size_t>> cells_;
  std::vector<std::size_t> cell_index_;
};

// Points of `gamma` within distance r of x (minimum image). Requires r <= L/2.
std::vector<Neighbor> neighbors_within(const Configuration& gamma, const Vec& x, double r,
                                       std::size_t exclude = Configuration::npos);

// ---------------------------------------------------------------------------
// Cylinder functions F(gamma) = g(<phi_1, gamma>, ..., <phi_N, gamma>).

// Smooth compactly supported inner function phi(x) = p(u) * w(u) with
// u = min_image_diff(x, center), p a quadratic polynomial and w either a
// C-infinity bump exp(1 - 1/(1 - |u|^2/R^2)) or a plateau cutoff equal to 1 on
// |u| <= inner_radius that falls smoothly to 0 at |u| = radius.
class InnerFunction {
 public:
  enum class Window { Bump, Plateau };

  struct Params {
    Vec center{};
    double radius = 1.0;
    Window window = Window::Bump;
    double inner_radius = 0.0;  // plateau only, 0 < inner_radius < radius
    double constant = 1.0;      // p(u) = constant + <linear, u> + <u, quadratic u>
    Vec linear{};
    Mat quadratic{};
  };

  InnerFunction(const Box& box, Params params);

  double value(const Vec& x) const;
  Vec grad(const Vec& x) const;
  Mat hess(const Vec& x) const;

  const Vec& center() const { return p_.center; }
  double radius() const { return p_.radius; }
  const Params& params() const { return p_; }

  // Signed distance from x to the support boundary (negative inside).
  double distance_to_support(const Vec& x) const;

 private:
  struct Jet {
    double v;
    Vec g;
    Mat h;
  };
  Jet window_jet(const Vec& u) const;

  Box box_;
  Params p_;
};

// Outer function g: R^N -> R with closed-form gradient and Hessian.
class OuterFunction {
 public:
  enum class Kind { Linear, Quadratic, Sine, Gaussian };

  // Linear:    g(t) = <w, t> + b
  // Quadratic: g(t) = 0.5 <t, A t> + <w, t> + b      (A symmetric N x N)
  // Sine:      g(t) = sin(<w, t> + b)
  // Gaussian:  g(t) = exp(-0.5 |t|^2 / scale^2)
  static OuterFunction linear(std::vector<double> w, double b = 0.0);
  static OuterFunction quadratic(std::vector<double> a, std::vector<double> w, double b = 0.0);
  static OuterFunction sine(std::vector<double> w, double b = 0.0);
  static OuterFunction gaussian(std::size_t n, double scale);

  std::size_t arity() const { return n_; }
  Kind kind() const { return kind_; }
  double value(std::span<const double> t) const;
  std::vector<double> grad(std::span<const double> t) const;
  std::vector<double> hess(std::span<const double> t) const;  // row-major N x N
  // Constant functions: Linear with zero weights.
  bool is_constant() const;

 private:
  OuterFunction(Kind kind, std::size_t n) : kind_(kind), n_(n) {}
  Kind kind_;
  std::size_t n_;
  std::vector<double> a_;
  std::vector<double> w_;
  double b_ = 0.0;
  double scale_ = 1.0;
};

class CylinderFunction {
 public:
  CylinderFunction(std::string name, OuterFunction outer, std::vector<InnerFunction> inner);

  const std::string& name() const { return name_; }
  std::size_t arity() const { return inner_.size(); }
  const std::vector<InnerFunction>& inner() const { return inner_; }
  const OuterFunction& outer() const { return outer_; }

  // The vector (<phi_k, gamma>)_k.
  std::vector<double> sums(const Configuration& gamma) const;
  std::vector<double> sums(std::span<const Vec> points) const;
  void inner_values(const Vec& x, std::span<double> out) const;

  double evaluate(const Configuration& gamma) const;
  double evaluate_sums(std::span<const double> t) const { return outer_.value(t); }

  // Derivatives in the position of a point x of gamma (chain rule through the
  // sums of gamma, which must already contain x).
  Vec grad_at(const Configuration& gamma, std::size_t index) const;
  Mat hess_at(const Configuration& gamma, std::size_t index) const;
  double laplacian_at(const Configuration& gamma, std::size_t index) const;

  // Same derivatives given precomputed sums t (x included in t).
  Vec grad_with_sums(std::span<const double> t, const Vec& x) const;
  Mat hess_with_sums(std::span<const double> t, const Vec& x) const;

  // Derivatives of x -> F(gamma + delta_x) for a point x not in gamma.
  Vec grad_added(const Configuration& gamma, const Vec& x) const;

  // Distance from x to the union of inner supports (<= 0 inside).
  double distance_to_support(const Vec& x) const;
  bool is_constant() const { return outer_.is_constant(); }

 private:
  std::string name_;
  OuterFunction outer_;
  std::vector<InnerFunction> inner_;
};

// Named cylinder functions placed relative to the box centre:
//   linear_bump       g = t1,                 one bump
//   quadratic_pair    quadratic g, two bumps with linear polynomial factors
//   sine_pair         g = sin(t1 - 0.6 t2 + 0.3), two bumps
//   gauss_triple      gaussian g, three bumps
//   quadratic_window  g = t1, phi_1 = |u|^2 on a plateau window
//   constant          g = 1
std::vector<std::string> cylinder_catalog_names();
CylinderFunction make_cylinder(const std::string& name, const Box& box);

// Random cylinder function built from catalog pieces (for duality tests).
class Rng;
CylinderFunction random_cylinder(const Box& box, Rng& rng, double radius = 1.2);

}  // namespace kdl

#include "kdl/space_inl.hpp"
