#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kdl/potential.hpp"
#include "kdl/rng.hpp"
#include "kdl/space.hpp"
#include "kdl/stats.hpp"

namespace kdl {

// Grand-canonical Gibbs density z^{|gamma|} e^{-U(gamma)} on the periodic box
// (inverse temperature folded into phi).
struct GibbsParams {
  double z = 1.0;
  PairPotential phi = make_potential("zero");
  Box box{2, 5.0};
  double p_birth = 0.4;
  double p_death = 0.4;           // translate gets the rest
  double translate_step = 0.0;    // half-width of the uniform displacement; 0 means L/20

  void validate() const;
  double step() const { return translate_step > 0.0 ? translate_step : box.side() / 20.0; }
};

enum class Move { Birth = 0, Death = 1, Translate = 2 };
std::string to_string(Move m);

struct AcceptanceStats {
  std::array<std::uint64_t, 3> attempted{};
  std::array<std::uint64_t, 3> accepted{};
  double rate(Move m) const;
  AcceptanceStats& operator+=(const AcceptanceStats& o);
};

struct Ensemble {
  std::vector<Configuration> samples;
  std::vector<std::uint64_t> seeds;  // one per merged chain
  std::size_t burn_in = 0;
  std::size_t thin = 0;
  AcceptanceStats stats;
  std::vector<std::string> warnings;
};

// Concatenation with metadata union.
Ensemble merge(const Ensemble& a, const Ensemble& b);

// Metropolis-Hastings ratios (before min(1, .)).
//   birth of x:        z V e^{-E(x, gamma)} / (|gamma| + 1) * p_death / p_birth
//   death of point i:  |gamma| e^{E(x_i, gamma \ x_i)} / (z V) * p_birth / p_death
double birth_ratio(const Configuration& gamma, const Vec& x, const GibbsParams& p);
double death_ratio(const Configuration& gamma, std::size_t index, const GibbsParams& p);

struct StepResult {
  Configuration state;
  Move move;
  bool accepted;
};

StepResult mcmc_step(const Configuration& gamma, const GibbsParams& p, Rng& rng);

struct SampleOptions {
  std::size_t n = 1000;
  std::size_t burn_in = 1000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
};

Ensemble sample(const GibbsParams& p, const SampleOptions& opts,
                const std::optional<Configuration>& start = std::nullopt);

// Independent chains on streams 0..chains-1, run on up to `threads` workers and
// merged in stream order (results do not depend on the thread count).
Ensemble sample_chains(const GibbsParams& p, const SampleOptions& opts, std::size_t chains, std::size_t threads);

// ---------------------------------------------------------------------------
// GNZ identities. The x-integrals are estimated by uniform Monte Carlo over an
// axis-aligned domain that must contain the x-support of the test function.

struct IntegrationDomain {
  Vec lo{};
  Vec hi{};  // hi <= lo on an axis means the full side [0, L)
  static IntegrationDomain full() { return {}; }
  double volume(const Box& box) const;
  Vec sample(const Box& box, Rng& rng) const;
};

struct GnzOptions {
  IntegrationDomain domain;
  std::size_t points_per_sample = 64;
  std::size_t batches = 50;
  std::uint64_t seed = 7;
};

struct GnzResult {
  MeanEstimate lhs;
  MeanEstimate rhs;
  MeanEstimate diff;  // paired per-sample differences
  double z_score = 0.0;
};

using GnzTest = std::function<double(const Configuration& gamma, const Vec& x)>;
using Gnz2Test = std::function<double(const Configuration& gamma, const Vec& x1, const Vec& x2)>;

GnzResult gnz_residual(const Ensemble& e, const GibbsParams& p, const GnzTest& f, const GnzOptions& opts = {});
GnzResult gnz2_residual(const Ensemble& e, const GibbsParams& p, const Gnz2Test& u, const GnzOptions& opts = {});

// ---------------------------------------------------------------------------
// Correlation functions.

struct Binning {
  double r_max = 1.0;
  std::size_t bins = 10;
};

struct CorrelationEstimate {
  int order = 1;
  std::vector<double> edges;        // bins + 1 edges (order 2)
  std::vector<MeanEstimate> values; // order 1: one value; order 2: per bin
  std::size_t samples = 0;
};

CorrelationEstimate estimate_correlation(const Ensemble& e, int order, const Binning& binning = {},
                                         std::size_t batches = 50);

// Per-sample order-2 histogram (k2 per bin for one configuration).
std::vector<double> pair_density_sample(const Configuration& gamma, const Binning& binning);

struct RuelleReport {
  double xi = 0.0;           // max(k1, sqrt(max_bin k2)) from point estimates
  double xi_upper = 0.0;     // same from point + 3 stderr
  double general_bound = 0.0;  // z e^{B_phi}, reported for comparison
  bool pass = false;           // finite xi
  bool inconclusive = false;   // too few samples for error bars
};

RuelleReport ruelle_check(const CorrelationEstimate& k1, const CorrelationEstimate& k2, const GibbsParams& p);

// Monte Carlo check of  int G d rho = int (KG) d mu  in d = 2, for G the
// indicator of pairs {x, y} inside the square window [c - l/2, c + l/2)^2
// with |x - y| <= r0. The right side uses the K-transform over gamma_window;
// the left side integrates the binned pair density against the window's set
// covariance. Both sides are paired per sample.
struct CorrelationIdentityResult {
  MeanEstimate kg;       // mean (KG)(gamma)
  MeanEstimate rho_int;  // integral of G against the correlation measure
  MeanEstimate diff;
  double z_score = 0.0;
};

CorrelationIdentityResult correlation_identity_check(const Ensemble& e, const Vec& window_center, double side, double r0, std::size_t bins = 20,
                          std::size_t batches = 50);

}  // namespace kdl
