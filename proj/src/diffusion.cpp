#include "kdl/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "kdl/errors.hpp"
#include "kdl/rng.hpp"

namespace kdl {

void SDEConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("sde: c must be > 0");
  if (!(dt > 0.0)) throw ValidationError("sde: dt must be > 0");
  if (!(T >= 0.0)) throw ValidationError("sde: T must be >= 0");
  if (observe_dt < 0.0) throw ValidationError("sde: observe_dt must be >= 0");
}

namespace {

void add_drift(std::span<const Vec> pts, const Box& box, const PairPotential& phi, double c, std::vector<Vec>& out) {
  out.assign(pts.size(), Vec{});
  if (phi.is_zero() || pts.empty()) return;
  const double R = phi.range();
  const double half_c = 0.5 * c;
  CellList cells(box, R, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Vec f{};
    cells.for_each_within(pts[i], R, i, [&](std::size_t, const Vec& d, double) { f += phi.grad(d); });
    out[i] = -half_c * f;
  }
}

}  // namespace

std::vector<Vec> drift(const Configuration& gamma, const PairPotential& phi, double c) {
  if (!phi.has_gradient()) throw ValidationError("drift: potential lacks a gradient");
  if (phi.range() > 0.5 * gamma.box().side()) throw ValidationError("drift: potential range exceeds L/2");
  std::vector<Vec> out;
  const auto pts = gamma.positions();
  add_drift(pts, gamma.box(), phi, c, out);
  return out;
}

DiffusionResult em_run(const Configuration& start, const SDEConfig& cfg, const PairPotential& phi) {
  cfg.validate();
  if (!phi.has_gradient()) throw ValidationError("em_run: potential lacks a gradient");
  const Box& box = start.box();
  if (phi.range() > 0.5 * box.side()) throw ValidationError("em_run: potential range exceeds L/2");
  const int dim = box.dim();
  DiffusionResult res;
  res.steps = cfg.T > 0.0 ? static_cast<std::size_t>(std::ceil(cfg.T / cfg.dt - 1e-9)) : 0;
  res.dt_used = res.steps > 0 ? cfg.T / static_cast<double>(res.steps) : cfg.dt;
  const double dt = res.dt_used;

  std::vector<Vec> pts = start.positions();
  const std::size_t n = pts.size();
  res.displacement.assign(n, Vec{});

  // Stability threshold: the largest drift step against the mean spacing.
  if (!phi.is_zero() && n > 0) {
    double gsup = 0.0;
    for (int k = 1; k <= 1000; ++k) gsup = std::max(gsup, std::fabs(phi.radial_d1(phi.range() * k / 1000.0)));
    const double spacing = std::pow(box.volume() / static_cast<double>(n), 1.0 / dim);
    if (dt * 0.5 * cfg.c * gsup > 0.1 * spacing)
      res.warnings.push_back("dt * (c/2) * sup|grad phi| exceeds 10% of the mean interparticle spacing");
  }

  std::size_t obs_every = 0;
  if (cfg.observe_dt > 0.0) obs_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.observe_dt / dt)));
  res.observations.push_back(observe(0.0, pts, box, cfg.window, cfg.observables));

  Rng rng(cfg.seed, cfg.stream);
  const double noise = std::sqrt(cfg.c * dt);
  const double limit = 0.25 * box.side();
  std::vector<Vec> b;
  for (std::size_t step = 1; step <= res.steps; ++step) {
    add_drift(pts, box, phi, cfg.c, b);
    for (std::size_t i = 0; i < n; ++i) {
      Vec dx{};
      for (int k = 0; k < dim; ++k) dx[k] = b[i][k] * dt + noise * rng.normal();
      if (norm(dx) > limit) throw NumericalGuard("em_run: single-step displacement exceeds L/4");
      res.displacement[i] += dx;
      pts[i] = box.wrap(pts[i] + dx);
    }
    const bool last = step == res.steps;
    if ((obs_every > 0 && step % obs_every == 0) || (last && (obs_every == 0 || step % obs_every != 0)))
      res.observations.push_back(observe(static_cast<double>(step) * dt, pts, box, cfg.window, cfg.observables));
  }
  std::vector<Particle> parts(n);
  for (std::size_t i = 0; i < n; ++i) parts[i] = {start.id(i), pts[i]};
  res.final_state = Configuration(box, std::move(parts));
  return res;
}

FormEstimate dirichlet_form_dif(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e, double c,
                                std::size_t batches) {
  if (e.samples.empty()) throw ValidationError("dirichlet_form_dif: empty ensemble");
  FormEstimate out;
  out.per_sample.reserve(e.samples.size());
  for (const auto& g : e.samples) {
    const auto pts = g.positions();
    const auto tF = F.sums(pts);
    const auto tG = G.sums(pts);
    double s = 0.0;
    for (const Vec& x : pts) {
      if (F.distance_to_support(x) > 0.0 || G.distance_to_support(x) > 0.0) continue;
      s += dot(F.grad_with_sums(tF, x), G.grad_with_sums(tG, x));
    }
    out.per_sample.push_back(0.5 * c * s);
  }
  out.est = batch_means(out.per_sample, batches);
  return out;
}

std::vector<Vec> trapezoid_nodes(const Box& box, int m, const CylinderFunction& F, const CylinderFunction& G,
                                 double reach) {
  if (m < 1) throw ValidationError("trapezoid_nodes: need at least one node per axis");
  const int dim = box.dim();
  const double h = box.side() / m;
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(m);
  std::vector<Vec> nodes;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    Vec x{};
    for (int k = 0; k < dim; ++k) {
      x[k] = h * static_cast<double>(rest % static_cast<std::size_t>(m));
      rest /= static_cast<std::size_t>(m);
    }
    if (F.distance_to_support(x) > reach || G.distance_to_support(x) > reach) continue;
    nodes.push_back(x);
  }
  return nodes;
}

FormEstimate dirichlet_form_dif_gnz(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e,
                                    double c, double z, const PairPotential& phi, int nodes_per_axis,
                                    std::size_t batches) {
  if (e.samples.empty()) throw ValidationError("dirichlet_form_dif_gnz: empty ensemble");
  const Box& box = e.samples.front().box();
  const auto nodes = trapezoid_nodes(box, nodes_per_axis, F, G);
  const double w = std::pow(box.side() / nodes_per_axis, box.dim());
  FormEstimate out;
  out.per_sample.reserve(e.samples.size());
  for (const auto& g : e.samples) {
    const auto pts = g.positions();
    const auto tF = F.sums(pts);
    const auto tG = G.sums(pts);
    std::vector<double> sF(tF.size()), sG(tG.size()), vF(tF.size()), vG(tG.size());
    double s = 0.0;
    for (const Vec& x : nodes) {
      if (g.find(x) != Configuration::npos) continue;
      const double weight = std::exp(-relative_energy(x, pts, phi, box));
      if (weight == 0.0) continue;
      F.inner_values(x, vF);
      G.inner_values(x, vG);
      for (std::size_t k = 0; k < tF.size(); ++k) sF[k] = tF[k] + vF[k];
      for (std::size_t k = 0; k < tG.size(); ++k) sG[k] = tG[k] + vG[k];
      s += weight * dot(F.grad_with_sums(sF, x), G.grad_with_sums(sG, x));
    }
    out.per_sample.push_back(0.5 * c * z * w * s);
  }
  out.est = batch_means(out.per_sample, batches);
  return out;
}

}  // namespace kdl
