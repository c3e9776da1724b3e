#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "kdl/space.hpp"

namespace kdl {

enum class Regularity {
  C3b,           // three bounded derivatives (smooth repulsive family)
  ExpHalfC1,     // only exp(-phi/2) is C^1_b
  SingularCore,  // phi(0) = +infinity
};

std::string to_string(Regularity r);

// Optional metadata for the decay condition on |grad phi| + |hess phi| + ...:
// alpha is recorded by name only.
struct DecayCondition {
  double c0 = 1.0;
  std::string alpha = "1 + log(1 + lambda)";
};

// Radial pair potential phi(x) = v(|x|), exactly zero for |x| > range.
class PairPotential {
 public:
  using Radial = std::function<double(double)>;

  struct Spec {
    std::string name;
    std::map<std::string, double> params;
    double range = 0.0;
    double lower_bound = 0.0;  // B with phi >= -B
    Regularity regularity = Regularity::C3b;
    bool singular_at_zero = false;
    Radial value;       // v(r), r >= 0; may return +inf
    Radial d1;          // v'(r) (empty if no gradient metadata)
    Radial d2;          // v''(r)
    std::optional<DecayCondition> decay;
  };

  explicit PairPotential(Spec spec);

  const std::string& name() const { return s_.name; }
  const std::map<std::string, double>& params() const { return s_.params; }
  double range() const { return s_.range; }
  double lower_bound() const { return s_.lower_bound; }
  Regularity regularity() const { return s_.regularity; }
  bool singular_at_zero() const { return s_.singular_at_zero; }
  bool has_gradient() const { return static_cast<bool>(s_.d1); }
  bool has_hessian() const { return static_cast<bool>(s_.d2); }
  bool is_zero() const { return s_.range == 0.0; }
  const std::optional<DecayCondition>& decay() const { return s_.decay; }

  double radial(double r) const { return (r > s_.range) ? 0.0 : s_.value(r); }
  double radial_d1(double r) const;
  double radial_d2(double r) const;

  double value(const Vec& x) const { return radial(norm(x)); }
  Vec grad(const Vec& x) const;
  Mat hess(const Vec& x, int dim) const;

 private:
  Spec s_;
};

// Catalog:
//   zero         phi = 0 (ideal gas)
//   bump         beta * exp(1 - 1/(1 - r^2/R^2))      params beta, range
//   softcore     beta * (1 - r^2/R^2)^3_+             params beta, range
//   soft_sphere  beta * (sigma/r)^12 (1 - r^2/R^2)^3_+ params beta, sigma, range (singular)
std::vector<std::string> potential_catalog_names();
PairPotential make_potential(const std::string& name, const std::map<std::string, double>& params = {});

// E(x, gamma) = sum_{y in gamma} phi(x - y), minimum image. Throws if x is a
// point of gamma.
double relative_energy(const Vec& x, const Configuration& gamma, const PairPotential& phi);

// Same, over raw positions; `skip` excludes one index (for E(x, gamma \ x)).
double relative_energy(const Vec& x, std::span<const Vec> points, const PairPotential& phi, const Box& box,
                       std::size_t skip = static_cast<std::size_t>(-1));

// Cell-list accelerated form; the cell list must hold the current points.
double relative_energy(const Vec& x, const CellList& cells, const PairPotential& phi,
                       std::size_t skip = static_cast<std::size_t>(-1));

// Sum over unordered pairs.
double total_energy(const Configuration& gamma, const PairPotential& phi);
double total_energy(std::span<const Vec> points, const PairPotential& phi, const Box& box);

struct QuadratureRecord {
  double value = 0.0;
  double error = 0.0;   // |coarse - fine|
  double domain = 0.0;  // radial domain [0, domain]
  int panels = 0;
  int order = 0;
};

struct ConditionsReport {
  QuadratureRecord integrability;  // \int |e^{-phi} - 1| dx
  double delta = 0.0;
  int ball_samples = 0;            // sample points per delta-ball
  QuadratureRecord gdelta;         // \int g_delta dx
  // Superstability spot check on sampled finite configurations:
  double ss_A = 0.0, ss_B = 0.0;
  double ss_margin = 0.0;  // min over held-out samples of U - sum_r (A n_r^2 - B n_r)
  bool ss_fitted = false;
  int ss_samples = 0;
  // Sup norms over a radial grid.
  double exp_half_sup = 0.0;       // sup e^{-phi/2}
  double exp_half_grad_sup = 0.0;  // sup |grad e^{-phi/2}|
  double grad_sup = 0.0;           // sup |grad phi| (finite for C^1_b)
  double hess_sup = 0.0;           // sup |phi''| and |phi'/r|
  QuadratureRecord weighted_grad_inside;  // \int_{|x|<=R} e^{-phi/2}|grad phi|
  double weighted_grad_outside_sup = 0.0; // sup over |x| > R (exactly 0 for finite range)
  std::string lower_regularity_note;
};

struct ConditionsOptions {
  int ball_samples_per_axis = 0;  // 0: enough for >= 64^{min(d,2)} points per ball
  int spot_points_max = 24;
  std::uint64_t seed = 1;
  std::optional<double> ss_A;  // when both given, no fitting
  std::optional<double> ss_B;
};

ConditionsReport verify_conditions(const PairPotential& phi, int dim, double delta, int n_spot,
                                   const ConditionsOptions& opts = {});

}  // namespace kdl
