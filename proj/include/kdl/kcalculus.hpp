#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kdl/space.hpp"

namespace kdl {

using Mask = std::uint32_t;

// A function on the finite subsets of a base pattern eta0, stored as 2^n
// values indexed by bitmask (bit i set <=> point i of the base belongs).
class SubsetFunction {
 public:
  static constexpr int kDefaultMaxBase = 16;

  SubsetFunction(Configuration base, std::vector<double> values, int n_max = kDefaultMaxBase);

  // Values G(eta_m) computed from a function of the point subset.
  static SubsetFunction from(const Configuration& base, const std::function<double(std::span<const Vec>)>& g,
                             int n_max = kDefaultMaxBase);
  static SubsetFunction indicator_empty(const Configuration& base);
  // G(eta) = prod_{x in eta} (e^{f(x)} - 1).
  static SubsetFunction product(const Configuration& base, const std::function<double(const Vec&)>& f);
  // G({x}) = f(x), zero off singletons.
  static SubsetFunction singleton(const Configuration& base, const std::function<double(const Vec&)>& f);

  const Configuration& base() const { return base_; }
  int n() const { return static_cast<int>(base_.size()); }
  Mask full() const { return static_cast<Mask>((std::uint64_t{1} << n()) - 1); }
  double operator[](Mask m) const { return values_[m]; }
  double& operator[](Mask m) { return values_[m]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<Vec> points(Mask m) const;

 private:
  Configuration base_;
  std::vector<double> values_;
};

// (KG)(gamma) = sum over submasks of gamma.
double k_transform(const SubsetFunction& g, Mask gamma);
SubsetFunction k_transform(const SubsetFunction& g);

// (K^{-1}F)(eta) = sum_{xi subset eta} (-1)^{|eta \ xi|} F(xi).
double k_inverse(const SubsetFunction& f, Mask eta);
SubsetFunction k_inverse(const SubsetFunction& f);

// (G1 * G2)(eta) = sum over ordered partitions (eta1, eta2, eta3) of eta of
// G1(eta1 u eta2) G2(eta2 u eta3).
double star_convolution(const SubsetFunction& g1, const SubsetFunction& g2, Mask eta);
SubsetFunction star_convolution(const SubsetFunction& g1, const SubsetFunction& g2);

// Integrand for the Lebesgue-Poisson measure on finite configurations in the box.
struct LPIntegrand {
  enum class Form { Product, Singleton, PerOrder };
  Form form = Form::Product;
  std::function<double(const Vec&)> one_body;  // f for Product ((e^f - 1)^{(x)n}) and Singleton
  int order_cap = 0;
  double empty_value = 1.0;                    // G(empty); Product forces 1, Singleton forces 0
  // PerOrder: per_order[n - 1] is G^{(n)} for n = 1..order_cap; a missing entry means zero.
  std::vector<std::function<double(std::span<const Vec>)>> per_order;
};

struct LPQuadratureSpec {
  int nodes_per_axis = 8;        // Gauss-Legendre nodes per axis per panel
  int panels_per_axis = 4;       // for one-body integrals
  bool allow_monte_carlo = false;
  std::size_t mc_samples = 200000;
  std::uint64_t seed = 1;
  std::size_t max_grid_points = 50000000;
};

struct LPResult {
  double value = 0.0;
  double stderr_ = 0.0;             // Monte Carlo orders only
  std::vector<double> per_order;    // term n (including the 1/n! factor), n = 0..order_cap
  bool monte_carlo = false;
};

// Integral against lambda = delta_empty + sum_n (1/n!) dx^{(x)n}, truncated at
// order_cap. Non-product orders with n*d > 12 (or grids beyond
// max_grid_points) throw unless allow_monte_carlo is set.
LPResult lp_integral(const LPIntegrand& g, const Box& box, const LPQuadratureSpec& q = {});

struct ProductIdentityReport {
  double dev_g1 = 0.0;  // max |KG1 - e^{<f,gamma>}|
  double dev_g2 = 0.0;  // max |KG2 - e^{<f,gamma>}<g,gamma>|
  double dev_g3 = 0.0;  // max |KG3 - e^{<f,gamma>} sum_{x1 != x2} g1(x1) g2(x2)|
  double tolerance = 0.0;
  bool pass = false;
};

ProductIdentityReport product_identity_check(const std::function<double(const Vec&)>& f, const std::function<double(const Vec&)>& g,
                            const std::function<double(const Vec&)>& g1, const std::function<double(const Vec&)>& g2,
                            const Configuration& base, double tolerance = 1e-10);

// Product, sum-product and pair-product functions on a base.
SubsetFunction sum_product_function(const Configuration& base, const std::function<double(const Vec&)>& f,
                          const std::function<double(const Vec&)>& g);
SubsetFunction pair_product_function(const Configuration& base, const std::function<double(const Vec&)>& f,
                          const std::function<double(const Vec&)>& g1, const std::function<double(const Vec&)>& g2);

// Unit cubes Q_r = r + [-1/2, 1/2)^d, r integer; the cube of x is floor(x + 1/2).
using CubeIndex = std::array<long, kMaxDim>;
CubeIndex cube_of(const Vec& x, int dim);

struct KinvBoundReport {
  double max_ratio = 0.0;        // max over eta in Lambda of |K^{-1}U(eta)| / bound(eta)
  Mask argmax = 0;
  double max_outside = 0.0;      // max |K^{-1}U(eta)| / max(1, max |U|) over eta not inside Lambda
  std::size_t masks_inside = 0;
  bool holds = false;            // max_ratio <= 1 (+ rounding) and max_outside <= 2^n * 1e-12
};

// U(gamma) = zeta^{|gamma_Lambda|} exp[tau (1 + sigma sum_{r in Lambda} |gamma_r|^2)^p]
// on the subsets of eta0, with Lambda a finite union of unit cubes Q_r.
SubsetFunction growth_function(double zeta, double tau, double sigma, double p, const std::vector<CubeIndex>& lambda,
                         const Configuration& base);
KinvBoundReport kinv_bound_check(double zeta, double tau, double sigma, double p,
                                 const std::vector<CubeIndex>& lambda, const Configuration& base);

}  // namespace kdl
