#pragma once

#include <string>
#include <vector>

#include "kdl/diffusion.hpp"
#include "kdl/gibbs.hpp"
#include "kdl/kawasaki.hpp"
#include "kdl/potential.hpp"
#include "kdl/space.hpp"
#include "kdl/stats.hpp"

namespace kdl {

struct GeneratorSpec {
  JumpProfile prof = make_jump("bump", 2);
  PairPotential phi = make_potential("zero");
  double z = 1.0;
  double s = 0.5;
  int nodes_per_axis = 32;  // tensor Gauss-Legendre nodes on [-r_a, r_a]^d

  void validate(const Box& box) const;
};

// (H^eps F)(gamma) = -eps^{-2} sum_{x in gamma} \int dh a(h)
//     exp[(1 - s) E(x, gamma \ x) - s E(x + eps h, gamma \ x)] (F(gamma \ x u (x + eps h)) - F(gamma)).
double apply_H_eps(const CylinderFunction& F, const Configuration& gamma, const GeneratorSpec& spec);
// The s = 1/2 kernel exp[E(x)/2 - E(y)/2] written out directly.
double apply_H_eps_symmetric(const CylinderFunction& F, const Configuration& gamma, const GeneratorSpec& spec);

// c sum_x [-(1/2) Lap_x F + s <grad_x F, sum_u grad phi(x - u)>] exp[(1 - 2s) E(x, gamma \ x)].
double apply_H_dif(const CylinderFunction& F, const Configuration& gamma, double c, const PairPotential& phi,
                   double s = 0.5);
// (c/2) sum_x [-Lap_x F + <grad_x F, sum_u grad phi(x - u)>].
double apply_H_dif_symmetric(const CylinderFunction& F, const Configuration& gamma, double c,
                             const PairPotential& phi);

// (z/2) E \int dx \int dy eps^{-d-2} a((x - y)/eps) exp[-E(x, gamma)/2 - E(y, gamma)/2]
//     (F(gamma u y) - F(gamma u x)) (G(gamma u y) - G(gamma u x)),
// x by the periodic trapezoid rule over the box, y by the cube rule of the GeneratorSpec.
FormEstimate dirichlet_form_eps(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e,
                                const GeneratorSpec& spec, int x_nodes_per_axis = 64, std::size_t batches = 50);

// Paired comparison of <H F, G>_mu with a form estimate on the same samples.
struct DualityResult {
  MeanEstimate pairing;
  MeanEstimate form;
  MeanEstimate diff;
  double z_score = 0.0;
};
DualityResult compare_pairing(const std::vector<double>& pairing_samples, const std::vector<double>& form_samples,
                              std::size_t batches = 50);

// Per-sample (H^eps F)(gamma) G(gamma).
std::vector<double> pairing_eps(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e,
                                const GeneratorSpec& spec);
std::vector<double> pairing_dif(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e, double c,
                                const PairPotential& phi);

struct MomentReport {
  int dim = 1;
  std::vector<double> first;      // \int a h^i dh
  std::vector<double> diagonal;   // \int a (h^i)^2 dh
  double max_first = 0.0;
  double max_mixed = 0.0;         // max_{i != j} |\int a h^i h^j dh|
  double max_diagonal_spread = 0.0;  // max_i |diagonal_i - c|
  double c = 0.0;                 // the profile's recorded second moment
  double mass = 0.0;
};

// Moments by direct polar (d = 2) or spherical (d = 3) product quadrature, or
// composite Gauss-Legendre on [-r_a, r_a] in d = 1.
MomentReport moment_check(const JumpProfile& prof);

struct ConvergenceOptions {
  std::size_t quad_check_samples = 20;  // samples used for the quadrature-error column
  std::size_t batches = 50;
  double noise_floor_factor = 10.0;     // at noise floor if every error <= factor * quad_err
};

struct ConvergenceRow {
  double eps = 0.0;
  MeanEstimate mse;       // E[(H^eps F - H^dif F)^2]
  double l2err = 0.0;     // sqrt(mse)
  double l2err_stderr = 0.0;
  MeanEstimate second_moment_eps;  // E[(H^eps F)^2]
  MeanEstimate second_moment_dif;  // E[(H^dif F)^2]
  double quad_err = 0.0;  // RMS change of H^eps F under 1.5x nodes per axis
};

struct ConvergenceReport {
  std::string function;
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  bool strictly_decreasing = false;
  bool at_noise_floor = false;
};

ConvergenceReport convergence_study(const CylinderFunction& F, const Ensemble& e, const GeneratorSpec& base,
                                    const std::vector<double>& eps_grid, const ConvergenceOptions& opts = {});

}  // namespace kdl
