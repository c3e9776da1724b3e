#include "kdl/gibbs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "kdl/errors.hpp"
#include "kdl/kcalculus.hpp"
#include "kdl/quadrature.hpp"

namespace kdl {

void GibbsParams::validate() const {
  if (!(z > 0.0) || !std::isfinite(z)) throw ValidationError("gibbs: activity z must be > 0");
  if (phi.range() > 0.5 * box.side()) throw ValidationError("gibbs: potential range exceeds L/2");
  if (!(p_birth > 0.0) || !(p_death > 0.0) || p_birth + p_death > 1.0)
    throw ValidationError("gibbs: move probabilities must be positive with p_birth + p_death <= 1");
  if (translate_step < 0.0 || translate_step > 0.5 * box.side())
    throw ValidationError("gibbs: translate_step must be in [0, L/2]");
}

std::string to_string(Move m) {
  switch (m) {
    case Move::Birth: return "birth";
    case Move::Death: return "death";
    case Move::Translate: return "translate";
  }
  return "unknown";
}

double AcceptanceStats::rate(Move m) const {
  const auto i = static_cast<std::size_t>(m);
  return attempted[i] == 0 ? 0.0 : static_cast<double>(accepted[i]) / static_cast<double>(attempted[i]);
}

AcceptanceStats& AcceptanceStats::operator+=(const AcceptanceStats& o) {
  for (std::size_t i = 0; i < 3; ++i) {
    attempted[i] += o.attempted[i];
    accepted[i] += o.accepted[i];
  }
  return *this;
}

Ensemble merge(const Ensemble& a, const Ensemble& b) {
  if (!a.samples.empty() && !b.samples.empty() &&
      (a.samples.front().box().dim() != b.samples.front().box().dim() ||
       a.samples.front().box().side() != b.samples.front().box().side()))
    throw ValidationError("merge: ensembles live in different boxes");
  Ensemble out = a;
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  out.seeds.insert(out.seeds.end(), b.seeds.begin(), b.seeds.end());
  out.stats += b.stats;
  out.warnings.insert(out.warnings.end(), b.warnings.begin(), b.warnings.end());
  if (a.samples.empty()) {
    out.burn_in = b.burn_in;
    out.thin = b.thin;
  }
  return out;
}

namespace {

double energy_without(const std::vector<Vec>& pts, std::size_t i, const Vec& x, const GibbsParams& p) {
  return relative_energy(x, pts, p.phi, p.box, i);
}

Vec random_point(const Box& box, Rng& rng) {
  Vec x{};
  for (int k = 0; k < box.dim(); ++k) x[k] = rng.uniform(0.0, box.side());
  return x;
}

}  // namespace

double birth_ratio(const Configuration& gamma, const Vec& x, const GibbsParams& p) {
  const auto pts = gamma.positions();
  const double E = relative_energy(x, pts, p.phi, p.box);
  const double n = static_cast<double>(gamma.size());
  return p.z * p.box.volume() * std::exp(-E) / (n + 1.0) * (p.p_death / p.p_birth);
}

double death_ratio(const Configuration& gamma, std::size_t index, const GibbsParams& p) {
  const auto pts = gamma.positions();
  const double E = energy_without(pts, index, pts[index], p);
  const double n = static_cast<double>(gamma.size());
  return n * std::exp(E) / (p.z * p.box.volume()) * (p.p_birth / p.p_death);
}

StepResult mcmc_step(const Configuration& gamma, const GibbsParams& p, Rng& rng) {
  const double u = rng.uniform();
  if (u < p.p_birth) {
    const Vec x = random_point(p.box, rng);
    if (gamma.find(x) != Configuration::npos) return {gamma, Move::Birth, false};
    const double r = birth_ratio(gamma, x, p);
    if (rng.uniform() < r) return {gamma.with_added(x), Move::Birth, true};
    return {gamma, Move::Birth, false};
  }
  if (u < p.p_birth + p.p_death) {
    if (gamma.empty()) return {gamma, Move::Death, false};
    const auto i = static_cast<std::size_t>(rng.below(gamma.size()));
    const double r = death_ratio(gamma, i, p);
    if (rng.uniform() < r) return {gamma.without(i), Move::Death, true};
    return {gamma, Move::Death, false};
  }
  if (gamma.empty()) return {gamma, Move::Translate, false};
  const auto i = static_cast<std::size_t>(rng.below(gamma.size()));
  const double h = p.step();
  Vec y = gamma.pos(i);
  for (int k = 0; k < p.box.dim(); ++k) y[k] += rng.uniform(-h, h);
  y = p.box.wrap(y);
  const auto pts = gamma.positions();
  for (std::size_t j = 0; j < pts.size(); ++j)
    if (j != i && pts[j] == y) return {gamma, Move::Translate, false};
  if (y == pts[i]) return {gamma, Move::Translate, false};
  const double dU = energy_without(pts, i, y, p) - energy_without(pts, i, pts[i], p);
  if (rng.uniform() < std::exp(-dU)) return {gamma.with_moved(i, y), Move::Translate, true};
  return {gamma, Move::Translate, false};
}

Ensemble sample(const GibbsParams& p, const SampleOptions& opts, const std::optional<Configuration>& start) {
  p.validate();
  if (opts.n < 1) throw ValidationError("sample: n must be >= 1");
  if (opts.thin < 1) throw ValidationError("sample: thin must be >= 1");
  Rng rng(opts.seed, opts.stream);
  Configuration state = start ? *start : Configuration(p.box);
  Ensemble e;
  e.seeds = {opts.seed};
  e.burn_in = opts.burn_in;
  e.thin = opts.thin;
  e.samples.reserve(opts.n);
  auto advance = [&]() {
    auto r = mcmc_step(state, p, rng);
    const auto m = static_cast<std::size_t>(r.move);
    ++e.stats.attempted[m];
    if (r.accepted) {
      ++e.stats.accepted[m];
      state = std::move(r.state);
    }
  };
  for (std::size_t s = 0; s < opts.burn_in; ++s) advance();
  for (std::size_t k = 0; k < opts.n; ++k) {
    for (std::size_t s = 0; s < opts.thin; ++s) advance();
    e.samples.push_back(state);
  }
  for (Move m : {Move::Birth, Move::Death, Move::Translate}) {
    const auto i = static_cast<std::size_t>(m);
    if (e.stats.attempted[i] > 0 && e.stats.rate(m) < 0.01)
      e.warnings.push_back("acceptance rate of " + to_string(m) + " moves is below 1%");
  }
  return e;
}

Ensemble sample_chains(const GibbsParams& p, const SampleOptions& opts, std::size_t chains, std::size_t threads) {
  if (chains < 1) throw ValidationError("sample_chains: need at least one chain");
  std::vector<Ensemble> parts(chains);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t c; (c = next.fetch_add(1)) < chains;) {
      SampleOptions o = opts;
      o.stream = opts.stream + c;
      parts[c] = sample(p, o);
    }
  };
  const std::size_t nt = std::clamp<std::size_t>(threads, 1, chains);
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  Ensemble out = parts[0];
  for (std::size_t c = 1; c < chains; ++c) out = merge(out, parts[c]);
  return out;
}

// ---------------------------------------------------------------------------
// GNZ

double IntegrationDomain::volume(const Box& box) const {
  double v = 1.0;
  for (int k = 0; k < box.dim(); ++k) v *= hi[k] > lo[k] ? hi[k] - lo[k] : box.side();
  return v;
}

Vec IntegrationDomain::sample(const Box& box, Rng& rng) const {
  Vec x{};
  for (int k = 0; k < box.dim(); ++k) x[k] = hi[k] > lo[k] ? rng.uniform(lo[k], hi[k]) : rng.uniform(0.0, box.side());
  return box.wrap(x);
}

namespace {

GnzResult finish(std::vector<double> lhs, std::vector<double> rhs, std::size_t batches) {
  GnzResult r;
  std::vector<double> d(lhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) d[i] = lhs[i] - rhs[i];
  r.lhs = batch_means(lhs, batches);
  r.rhs = batch_means(rhs, batches);
  r.diff = batch_means(d, batches);
  r.z_score = r.diff.stderr_ > 0.0 ? r.diff.mean / r.diff.stderr_ : (r.diff.mean == 0.0 ? 0.0 : INFINITY);
  return r;
}

}  // namespace

GnzResult gnz_residual(const Ensemble& e, const GibbsParams& p, const GnzTest& f, const GnzOptions& opts) {
  if (e.samples.empty()) throw ValidationError("gnz_residual: empty ensemble");
  Rng rng(opts.seed, 1);
  const double vol = opts.domain.volume(p.box);
  std::vector<double> lhs, rhs;
  lhs.reserve(e.samples.size());
  rhs.reserve(e.samples.size());
  for (const auto& g : e.samples) {
    double l = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) l += f(g, g.pos(i));
    double r = 0.0;
    const auto pts = g.positions();
    for (std::size_t j = 0; j < opts.points_per_sample; ++j) {
      const Vec x = opts.domain.sample(p.box, rng);
      if (g.find(x) != Configuration::npos) continue;
      const double E = relative_energy(x, pts, p.phi, p.box);
      const double w = std::exp(-E);
      if (w == 0.0) continue;
      r += w * f(g.with_added(x), x);
    }
    lhs.push_back(l);
    rhs.push_back(p.z * vol * r / static_cast<double>(opts.points_per_sample));
  }
  return finish(std::move(lhs), std::move(rhs), opts.batches);
}

GnzResult gnz2_residual(const Ensemble& e, const GibbsParams& p, const Gnz2Test& u, const GnzOptions& opts) {
  if (e.samples.empty()) throw ValidationError("gnz2_residual: empty ensemble");
  Rng rng(opts.seed, 2);
  const double vol = opts.domain.volume(p.box);
  std::vector<double> lhs, rhs;
  for (const auto& g : e.samples) {
    double l = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j)
        if (i != j) l += u(g, g.pos(i), g.pos(j));
    double r = 0.0;
    const auto pts = g.positions();
    for (std::size_t s = 0; s < opts.points_per_sample; ++s) {
      const Vec x1 = opts.domain.sample(p.box, rng);
      const Vec x2 = opts.domain.sample(p.box, rng);
      if (x1 == x2 || g.find(x1) != Configuration::npos || g.find(x2) != Configuration::npos) continue;
      const double E = relative_energy(x1, pts, p.phi, p.box) + relative_energy(x2, pts, p.phi, p.box) +
                       p.phi.value(p.box.min_image_diff(x1, x2));
      const double w = std::exp(-E);
      if (w == 0.0) continue;
      r += w * u(g.with_added(x1).with_added(x2), x1, x2);
    }
    lhs.push_back(l);
    rhs.push_back(p.z * p.z * vol * vol * r / static_cast<double>(opts.points_per_sample));
  }
  return finish(std::move(lhs), std::move(rhs), opts.batches);
}

// ---------------------------------------------------------------------------
// Correlations

namespace {

void check_binning(const Box& box, const Binning& b) {
  if (!(b.r_max > 0.0) || b.bins < 1) throw ValidationError("binning: need r_max > 0 and at least one bin");
  if (b.r_max > 0.5 * box.side()) throw ValidationError("binning: r_max exceeds L/2");
}

}  // namespace

std::vector<double> pair_density_sample(const Configuration& gamma, const Binning& b) {
  const Box& box = gamma.box();
  check_binning(box, b);
  std::vector<double> counts(b.bins, 0.0);
  const auto pts = gamma.positions();
  const double h = b.r_max / static_cast<double>(b.bins);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double r = box.min_image_dist(pts[i], pts[j]);
      if (r >= b.r_max) continue;
      const auto k = std::min(b.bins - 1, static_cast<std::size_t>(r / h));
      counts[k] += 2.0;  // ordered pairs
    }
  }
  for (std::size_t k = 0; k < b.bins; ++k) {
    const double shell = ball_volume(box.dim(), h * (k + 1)) - ball_volume(box.dim(), h * k);
    counts[k] /= box.volume() * shell;
  }
  return counts;
}

CorrelationEstimate estimate_correlation(const Ensemble& e, int order, const Binning& binning, std::size_t batches) {
  if (order != 1 && order != 2) throw ValidationError("estimate_correlation: order must be 1 or 2");
  if (e.samples.empty()) throw ValidationError("estimate_correlation: empty ensemble");
  const Box& box = e.samples.front().box();
  CorrelationEstimate est;
  est.order = order;
  est.samples = e.samples.size();
  if (order == 1) {
    std::vector<double> dens;
    dens.reserve(e.samples.size());
    for (const auto& g : e.samples) dens.push_back(static_cast<double>(g.size()) / box.volume());
    est.values.push_back(batch_means(dens, batches));
    return est;
  }
  check_binning(box, binning);
  const double h = binning.r_max / static_cast<double>(binning.bins);
  for (std::size_t k = 0; k <= binning.bins; ++k) est.edges.push_back(h * static_cast<double>(k));
  std::vector<std::vector<double>> per_bin(binning.bins);
  for (const auto& g : e.samples) {
    const auto v = pair_density_sample(g, binning);
    for (std::size_t k = 0; k < binning.bins; ++k) per_bin[k].push_back(v[k]);
  }
  for (const auto& series : per_bin) est.values.push_back(batch_means(series, batches));
  return est;
}

RuelleReport ruelle_check(const CorrelationEstimate& k1, const CorrelationEstimate& k2, const GibbsParams& p) {
  if (k1.order != 1 || k2.order != 2 || k1.values.empty())
    throw ValidationError("ruelle_check: needs an order-1 and an order-2 estimate");
  RuelleReport r;
  const auto& v1 = k1.values.front();
  r.xi = v1.mean;
  r.xi_upper = v1.mean + 3.0 * v1.stderr_;
  for (const auto& v : k2.values) {
    r.xi = std::max(r.xi, std::sqrt(std::max(v.mean, 0.0)));
    r.xi_upper = std::max(r.xi_upper, std::sqrt(std::max(v.mean + 3.0 * v.stderr_, 0.0)));
  }
  r.general_bound = p.z * std::exp(p.phi.lower_bound());
  r.inconclusive = k1.samples < 2 || !std::isfinite(r.xi_upper);
  r.pass = std::isfinite(r.xi) && !r.inconclusive;
  return r;
}

CorrelationIdentityResult correlation_identity_check(const Ensemble& e, const Vec& c, double side, double r0, std::size_t bins,
                          std::size_t batches) {
  if (e.samples.empty()) throw ValidationError("correlation_identity_check: empty ensemble");
  const Box& box = e.samples.front().box();
  if (box.dim() != 2) throw ValidationError("correlation_identity_check: implemented for d = 2");
  if (!(side > 0.0) || side > 0.5 * box.side()) throw ValidationError("correlation_identity_check: window side must be in (0, L/2]");
  if (!(r0 > 0.0) || r0 > side) throw ValidationError("correlation_identity_check: need 0 < r0 <= side");
  const Binning binning{r0, bins};
  // Bin weights: (1/2) \int_bin 2 pi r cov(r) dr with the radially averaged
  // set covariance of the square, cov(r) = l^2 - 4 l r / pi + r^2 / pi.
  const double pi = std::numbers::pi;
  const double h = r0 / static_cast<double>(bins);
  std::vector<double> weight(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    auto prim = [&](double r) {
      return pi * side * side * r * r - 8.0 * side * r * r * r / 3.0 + 0.5 * r * r * r * r;
    };
    weight[k] = 0.5 * (prim(h * (k + 1)) - prim(h * k));
  }
  std::vector<double> kg, rho;
  for (const auto& g : e.samples) {
    std::vector<Vec> inside;
    for (const auto& part : g.particles()) {
      const Vec u = box.min_image_diff(part.pos, c);
      if (u[0] >= -0.5 * side && u[0] < 0.5 * side && u[1] >= -0.5 * side && u[1] < 0.5 * side)
        inside.push_back(part.pos);
    }
    double v = 0.0;
    if (inside.size() <= static_cast<std::size_t>(SubsetFunction::kDefaultMaxBase)) {
      const Configuration base(box, inside);
      const auto G = SubsetFunction::from(base, [&](std::span<const Vec> pts) {
        return pts.size() == 2 && box.min_image_dist(pts[0], pts[1]) <= r0 ? 1.0 : 0.0;
      });
      v = k_transform(G, G.full());
    } else {
      for (std::size_t i = 0; i < inside.size(); ++i)
        for (std::size_t j = i + 1; j < inside.size(); ++j) v += box.min_image_dist(inside[i], inside[j]) <= r0;
    }
    kg.push_back(v);
    const auto k2 = pair_density_sample(g, binning);
    double s = 0.0;
    for (std::size_t k = 0; k < bins; ++k) s += k2[k] * weight[k];
    rho.push_back(s);
  }
  CorrelationIdentityResult r;
  std::vector<double> d(kg.size());
  for (std::size_t i = 0; i < kg.size(); ++i) d[i] = kg[i] - rho[i];
  r.kg = batch_means(kg, batches);
  r.rho_int = batch_means(rho, batches);
  r.diff = batch_means(d, batches);
  r.z_score = r.diff.stderr_ > 0.0 ? r.diff.mean / r.diff.stderr_ : 0.0;
  return r;
}

}  // namespace kdl
