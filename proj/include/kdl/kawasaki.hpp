#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kdl/observe.hpp"
#include "kdl/potential.hpp"
#include "kdl/space.hpp"

namespace kdl {

// Radial jump density a(h) = height * shape(|h| / r_a), supported on |h| <= r_a,
// together with its scale epsilon: a_eps(x) = eps^{-d} a(x / eps).
class JumpProfile {
 public:
  using Shape = std::function<double(double)>;  // on [0, 1], shape(t) = 0 for t > 1

  JumpProfile(std::string name, int dim, double r_a, double height, Shape shape, double eps = 1.0,
              std::map<std::string, double> params = {});

  const std::string& name() const { return name_; }
  const std::map<std::string, double>& params() const { return params_; }
  int dim() const { return dim_; }
  double r_a() const { return r_a_; }
  double eps() const { return eps_; }
  double sup_norm() const { return height_; }
  double mass() const { return m0_; }
  double second_moment() const { return c_; }  // \int a(x) (x^1)^2 dx
  double mass_error() const { return m0_err_; }
  double second_moment_error() const { return c_err_; }

  double radial(double rho) const;               // a at |h| = rho
  double base(const Vec& h) const { return radial(norm(h)); }
  double scaled(const Vec& x) const;             // a_eps(x)
  double reach() const { return eps_ * r_a_; }   // support radius of a_eps

  JumpProfile with_eps(double eps) const;
  // a'(h) = s^{-d} a(h / s), support s r_a, same eps.
  JumpProfile rescaled_base(double s) const;

 private:
  void compute_moments();

  std::string name_;
  std::map<std::string, double> params_;
  int dim_;
  double r_a_;
  double height_;
  Shape shape_;
  double eps_;
  double m0_ = 0.0, c_ = 0.0, m0_err_ = 0.0, c_err_ = 0.0;
};

// Catalog (params radius, height):
//   indicator   a = height on |h| <= r_a
//   bump        a = height * exp(1 - 1/(1 - |h|^2/r_a^2))
//   parabolic   a = height * (1 - |h|^2/r_a^2)_+
std::vector<std::string> jump_catalog_names();
JumpProfile make_jump(const std::string& name, int dim, const std::map<std::string, double>& params = {},
                      double eps = 1.0);

// c(gamma, x, y) = a_eps(x - y) exp[(1 - s) E(x, gamma \ x) - s E(y, gamma \ x)]
// for the point with index `index` of gamma. Throws if y coincides with
// another point or the exponent is +inf.
double jump_rate(const Configuration& gamma, std::size_t index, const Vec& y, const JumpProfile& prof,
                 const PairPotential& phi, double s = 0.5);

// |pi(gamma) c(gamma, x, y) - pi(gamma') c(gamma', y, x)| / max(...), with
// gamma' = gamma \ x u y and pi = z^{|gamma|} e^{-U}.
double detailed_balance_residual(const Configuration& gamma, std::size_t index, const Vec& y,
                                 const JumpProfile& prof, const PairPotential& phi, double z = 1.0,
                                 double s = 0.5);

struct JumpEvent {
  double time;
  std::uint64_t particle;
  Vec from;
  Vec to;
};

struct KawasakiOptions {
  double T = 1.0;
  bool time_scaling = true;     // multiply rates by eps^{-2}
  double time_factor = 1.0;     // extra rate multiplier
  double s = 0.5;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  bool log_events = false;
  std::size_t max_events = 0;   // stop after this many accepted jumps (0: no limit)
  double observe_dt = 0.0;      // 0: observe only at 0 and T
  Window window;
  std::vector<InnerFunction> observables;
};

struct KawasakiResult {
  Configuration final_state{Box(1, 1.0)};
  double end_time = 0.0;
  std::vector<JumpEvent> events;
  std::vector<Observation> observations;
  std::vector<Vec> displacement;  // unwrapped net displacement per particle (index order of the start)
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
};

KawasakiResult simulate(const Configuration& start, const JumpProfile& prof, const PairPotential& phi,
                        const KawasakiOptions& opts);

}  // namespace kdl
