#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kdl/gibbs.hpp"
#include "kdl/observe.hpp"
#include "kdl/potential.hpp"
#include "kdl/space.hpp"
#include "kdl/stats.hpp"

namespace kdl {

struct SDEConfig {
  double c = 1.0;               // diffusion constant
  double dt = 1e-3;
  double T = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  double observe_dt = 0.0;      // 0: observe only at 0 and T
  Window window;
  std::vector<InnerFunction> observables;
  void validate() const;
};

// -(c/2) sum_{j != i} grad phi(x_i - x_j) for every particle, minimum image.
std::vector<Vec> drift(const Configuration& gamma, const PairPotential& phi, double c);

struct DiffusionResult {
  Configuration final_state{Box(1, 1.0)};
  std::vector<Observation> observations;
  std::vector<Vec> displacement;  // unwrapped net displacement per particle
  std::size_t steps = 0;
  double dt_used = 0.0;           // T / steps
  std::vector<std::string> warnings;
};

// Euler-Maruyama: x <- wrap(x + drift dt + sqrt(c dt) xi). Throws
// NumericalGuard if a single step moves a particle farther than L/4.
DiffusionResult em_run(const Configuration& start, const SDEConfig& cfg, const PairPotential& phi);

struct FormEstimate {
  MeanEstimate est;
  std::vector<double> per_sample;
};

// (c/2) E sum_{x in gamma} <grad_x F, grad_x G>.
FormEstimate dirichlet_form_dif(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e, double c,
                                std::size_t batches = 50);

// (c/2) E \int z dx <grad_x F(gamma + x), grad_x G(gamma + x)> e^{-E(x, gamma)},
// x-integral by the periodic trapezoid rule with `nodes_per_axis` nodes.
FormEstimate dirichlet_form_dif_gnz(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e,
                                    double c, double z, const PairPotential& phi, int nodes_per_axis = 100,
                                    std::size_t batches = 50);

// Nodes of the periodic trapezoid rule on the box that lie within `reach` of
// the supports of both functions (elsewhere the integrands vanish).
std::vector<Vec> trapezoid_nodes(const Box& box, int nodes_per_axis, const CylinderFunction& F,
                                 const CylinderFunction& G, double reach = 0.0);

}  // namespace kdl
