#include "kdl/genlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kdl/errors.hpp"
#include "kdl/quadrature.hpp"

namespace kdl {

void GeneratorSpec::validate(const Box& box) const {
  if (prof.dim() != box.dim()) throw ValidationError("generator: profile and box dimensions differ");
  if (prof.reach() > 0.5 * box.side()) throw ValidationError("generator: quadrature radius eps * r_a exceeds L/2");
  if (phi.range() > 0.5 * box.side()) throw ValidationError("generator: potential range exceeds L/2");
  if (nodes_per_axis < 8) throw ValidationError("generator: need at least 8 quadrature nodes per axis");
  if (s < 0.0 || s > 1.0) throw ValidationError("generator: s must be in [0, 1]");
  if (!(z > 0.0)) throw ValidationError("generator: z must be > 0");
}

namespace {

struct WeightedNode {
  Vec h;
  double wa;  // quadrature weight times a(h)
};

std::vector<WeightedNode> jump_nodes(const JumpProfile& prof, int n) {
  std::vector<WeightedNode> out;
  for (const auto& node : cube_rule(prof.dim(), prof.r_a(), n)) {
    const double a = prof.base(node.point);
    if (a > 0.0) out.push_back({node.point, node.weight * a});
  }
  return out;
}

// E(y, gamma) over the cell list, skipping index `skip`; reports coincidence.
double local_energy(const CellList* cells, const PairPotential& phi, const Vec& y, std::size_t skip, bool& hit) {
  hit = false;
  if (!cells) return 0.0;
  double e = 0.0;
  cells->for_each_within(y, phi.range(), skip, [&](std::size_t, const Vec&, double r2) {
    if (r2 == 0.0) hit = true;
    else e += phi.radial(std::sqrt(r2));
  });
  return e;
}

bool coincides(std::span<const Vec> pts, const Vec& y, std::size_t skip) {
  for (std::size_t j = 0; j < pts.size(); ++j)
    if (j != skip && pts[j] == y) return true;
  return false;
}

template <class Exponent>
double h_eps_core(const CylinderFunction& F, const Configuration& gamma, const GeneratorSpec& spec, Exponent expo) {
  const Box& box = gamma.box();
  spec.validate(box);
  if (gamma.empty() || F.is_constant()) return 0.0;
  const double eps = spec.prof.eps();
  const double reach = spec.prof.reach();
  const auto nodes = jump_nodes(spec.prof, spec.nodes_per_axis);
  const auto pts = gamma.positions();
  std::unique_ptr<CellList> cells;
  if (!spec.phi.is_zero()) cells = std::make_unique<CellList>(box, spec.phi.range(), pts);
  const auto t = F.sums(pts);
  const double g0 = F.evaluate_sums(t);
  const std::size_t N = t.size();
  std::vector<double> vx(N), vy(N), tt(N);
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec& x = pts[i];
    if (F.distance_to_support(x) > reach) continue;
    bool hit = false;
    const double Ex = local_energy(cells.get(), spec.phi, x, i, hit);
    F.inner_values(x, vx);
    double acc = 0.0;
    for (const auto& nd : nodes) {
      const Vec y = box.wrap(x + eps * nd.h);
      F.inner_values(y, vy);
      for (std::size_t k = 0; k < N; ++k) tt[k] = t[k] - vx[k] + vy[k];
      const double dF = F.evaluate_sums(tt) - g0;
      if (dF == 0.0) continue;
      const double Ey = local_energy(cells.get(), spec.phi, y, i, hit);
      if (hit || (!cells && coincides(pts, y, i))) continue;
      acc += nd.wa * std::exp(expo(Ex, Ey)) * dF;
    }
    total += acc;
  }
  return -total / (eps * eps);
}

template <class Term>
double h_dif_core(const CylinderFunction& F, const Configuration& gamma, const PairPotential& phi, Term term) {
  const Box& box = gamma.box();
  if (!phi.has_gradient()) throw ValidationError("H_dif: potential lacks a gradient");
  if (phi.range() > 0.5 * box.side()) throw ValidationError("H_dif: potential range exceeds L/2");
  if (gamma.empty() || F.is_constant()) return 0.0;
  const auto pts = gamma.positions();
  std::unique_ptr<CellList> cells;
  if (!phi.is_zero()) cells = std::make_unique<CellList>(box, phi.range(), pts);
  const auto t = F.sums(pts);
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec& x = pts[i];
    if (F.distance_to_support(x) > 0.0) continue;
    const Vec grad = F.grad_with_sums(t, x);
    const double lap = trace(F.hess_with_sums(t, x));
    Vec force{};
    double E = 0.0;
    if (cells) {
      cells->for_each_within(x, phi.range(), i, [&](std::size_t, const Vec& d, double r2) {
        force += phi.grad(d);
        E += phi.radial(std::sqrt(r2));
      });
    }
    total += term(lap, dot(grad, force), E);
  }
  return total;
}

}  // namespace

double apply_H_eps(const CylinderFunction& F, const Configuration& gamma, const GeneratorSpec& spec) {
  const double s = spec.s;
  return h_eps_core(F, gamma, spec, [s](double Ex, double Ey) { return (1.0 - s) * Ex - s * Ey; });
}

double apply_H_eps_symmetric(const CylinderFunction& F, const Configuration& gamma, const GeneratorSpec& spec) {
  return h_eps_core(F, gamma, spec, [](double Ex, double Ey) { return 0.5 * Ex - 0.5 * Ey; });
}

double apply_H_dif(const CylinderFunction& F, const Configuration& gamma, double c, const PairPotential& phi,
                   double s) {
  if (s < 0.0 || s > 1.0) throw ValidationError("H_dif: s must be in [0, 1]");
  return h_dif_core(F, gamma, phi, [c, s](double lap, double inter, double E) {
    return c * (-0.5 * lap + s * inter) * std::exp((1.0 - 2.0 * s) * E);
  });
}

double apply_H_dif_symmetric(const CylinderFunction& F, const Configuration& gamma, double c,
                             const PairPotential& phi) {
  return h_dif_core(F, gamma, phi, [c](double lap, double inter, double) { return 0.5 * c * (-lap + inter); });
}

// ---------------------------------------------------------------------------
// Forms and pairings

FormEstimate dirichlet_form_eps(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e,
                                const GeneratorSpec& spec, int x_nodes_per_axis, std::size_t batches) {
  if (e.samples.empty()) throw ValidationError("dirichlet_form_eps: empty ensemble");
  const Box& box = e.samples.front().box();
  spec.validate(box);
  const double eps = spec.prof.eps();
  const auto ynodes = jump_nodes(spec.prof, spec.nodes_per_axis);
  const auto xnodes = trapezoid_nodes(box, x_nodes_per_axis, F, G, spec.prof.reach());
  const double wx = std::pow(box.side() / x_nodes_per_axis, box.dim());
  const double scale = 0.5 * spec.z * wx / (eps * eps);
  const std::size_t nF = F.arity(), nG = G.arity();
  std::vector<double> vF(nF), vG(nG), sF(nF), sG(nG);
  FormEstimate out;
  out.per_sample.reserve(e.samples.size());
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  for (const auto& g : e.samples) {
    const auto pts = g.positions();
    std::unique_ptr<CellList> cells;
    if (!spec.phi.is_zero()) cells = std::make_unique<CellList>(box, spec.phi.range(), pts);
    const auto tF = F.sums(pts);
    const auto tG = G.sums(pts);
    auto eval_added = [&](const Vec& x, double& f, double& gg) {
      F.inner_values(x, vF);
      G.inner_values(x, vG);
      for (std::size_t k = 0; k < nF; ++k) sF[k] = tF[k] + vF[k];
      for (std::size_t k = 0; k < nG; ++k) sG[k] = tG[k] + vG[k];
      f = F.evaluate_sums(sF);
      gg = G.evaluate_sums(sG);
    };
    double total = 0.0;
    for (const Vec& x : xnodes) {
      bool hit = false;
      const double Ex = local_energy(cells.get(), spec.phi, x, none, hit);
      if (hit || (!cells && coincides(pts, x, none))) continue;
      double fx, gx;
      eval_added(x, fx, gx);
      double acc = 0.0;
      for (const auto& nd : ynodes) {
        const Vec y = box.wrap(x + eps * nd.h);
        double fy, gy;
        eval_added(y, fy, gy);
        const double dF = fy - fx, dG = gy - gx;
        if (dF == 0.0 || dG == 0.0) continue;
        const double Ey = local_energy(cells.get(), spec.phi, y, none, hit);
        if (hit || (!cells && coincides(pts, y, none))) continue;
        acc += nd.wa * std::exp(-0.5 * Ex - 0.5 * Ey) * dF * dG;
      }
      total += acc;
    }
    out.per_sample.push_back(scale * total);
  }
  out.est = batch_means(out.per_sample, batches);
  return out;
}

DualityResult compare_pairing(const std::vector<double>& pairing, const std::vector<double>& form,
                              std::size_t batches) {
  if (pairing.size() != form.size()) throw ValidationError("compare_pairing: sample counts differ");
  DualityResult r;
  std::vector<double> d(pairing.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = pairing[i] - form[i];
  r.pairing = batch_means(pairing, batches);
  r.form = batch_means(form, batches);
  r.diff = batch_means(d, batches);
  r.z_score = r.diff.stderr_ > 0.0 ? r.diff.mean / r.diff.stderr_ : (r.diff.mean == 0.0 ? 0.0 : INFINITY);
  return r;
}

std::vector<double> pairing_eps(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e,
                                const GeneratorSpec& spec) {
  std::vector<double> out;
  out.reserve(e.samples.size());
  for (const auto& g : e.samples) out.push_back(apply_H_eps(F, g, spec) * G.evaluate(g));
  return out;
}

std::vector<double> pairing_dif(const CylinderFunction& F, const CylinderFunction& G, const Ensemble& e, double c,
                                const PairPotential& phi) {
  std::vector<double> out;
  out.reserve(e.samples.size());
  for (const auto& g : e.samples) out.push_back(apply_H_dif(F, g, c, phi) * G.evaluate(g));
  return out;
}

// ---------------------------------------------------------------------------
// Moments

MomentReport moment_check(const JumpProfile& prof) {
  const int d = prof.dim();
  const double r_a = prof.r_a();
  MomentReport rep;
  rep.dim = d;
  rep.first.assign(static_cast<std::size_t>(d), 0.0);
  rep.diagonal.assign(static_cast<std::size_t>(d), 0.0);
  std::array<std::array<double, kMaxDim>, kMaxDim> second{};
  auto accumulate = [&](const Vec& h, double w) {
    const double a = prof.base(h) * w;
    if (a == 0.0) return;
    rep.mass += a;
    for (int i = 0; i < d; ++i) {
      rep.first[static_cast<std::size_t>(i)] += a * h[i];
      for (int j = 0; j < d; ++j) second[i][j] += a * h[i] * h[j];
    }
  };
  const auto& gl = gauss_legendre(20);
  const int panels = 64;
  const double dr = r_a / panels;
  if (d == 1) {
    // Panels placed symmetrically so the rule is exactly even.
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * dr;
      for (int k = 0; k < 20; ++k) {
        const double r = mid + 0.5 * dr * gl.nodes[static_cast<std::size_t>(k)];
        const double w = 0.5 * dr * gl.weights[static_cast<std::size_t>(k)];
        accumulate(Vec{r, 0.0, 0.0}, w);
        accumulate(Vec{-r, 0.0, 0.0}, w);
      }
    }
  } else {
    const int n_phi = 64;
    const auto& gu = gauss_legendre(32);
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * dr;
      for (int k = 0; k < 20; ++k) {
        const double r = mid + 0.5 * dr * gl.nodes[static_cast<std::size_t>(k)];
        const double wr = 0.5 * dr * gl.weights[static_cast<std::size_t>(k)];
        for (int m = 0; m < n_phi; ++m) {
          const double ph = 2.0 * std::numbers::pi * m / n_phi;
          const double wphi = 2.0 * std::numbers::pi / n_phi;
          if (d == 2) {
            accumulate(Vec{r * std::cos(ph), r * std::sin(ph), 0.0}, wr * r * wphi);
          } else {
            for (std::size_t q = 0; q < gu.nodes.size(); ++q) {
              const double u = gu.nodes[q];
              const double sn = std::sqrt(1.0 - u * u);
              accumulate(Vec{r * sn * std::cos(ph), r * sn * std::sin(ph), r * u}, wr * r * r * wphi * gu.weights[q]);
            }
          }
        }
      }
    }
  }
  rep.c = prof.second_moment();
  for (int i = 0; i < d; ++i) {
    rep.diagonal[static_cast<std::size_t>(i)] = second[i][i];
    rep.max_first = std::max(rep.max_first, std::fabs(rep.first[static_cast<std::size_t>(i)]));
    rep.max_diagonal_spread = std::max(rep.max_diagonal_spread, std::fabs(second[i][i] - rep.c));
    for (int j = 0; j < d; ++j)
      if (i != j) rep.max_mixed = std::max(rep.max_mixed, std::fabs(second[i][j]));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence study

ConvergenceReport convergence_study(const CylinderFunction& F, const Ensemble& e, const GeneratorSpec& base,
                                    const std::vector<double>& eps_grid, const ConvergenceOptions& opts) {
  if (e.samples.empty()) throw ValidationError("convergence_study: empty ensemble");
  if (eps_grid.size() < 2) throw ValidationError("convergence_study: need at least two eps values");
  const Box& box = e.samples.front().box();
  const double c = base.prof.second_moment();
  std::vector<double> hd;
  hd.reserve(e.samples.size());
  for (const auto& g : e.samples) hd.push_back(apply_H_dif(F, g, c, base.phi, base.s));
  ConvergenceReport rep;
  rep.function = F.name();
  std::vector<double> hd2(hd.size());
  for (std::size_t i = 0; i < hd.size(); ++i) hd2[i] = hd[i] * hd[i];
  const auto hd2_est = batch_means(hd2, opts.batches);
  for (double eps : eps_grid) {
    GeneratorSpec spec = base;
    spec.prof = base.prof.with_eps(eps);
    spec.validate(box);
    GeneratorSpec fine = spec;
    fine.nodes_per_axis = spec.nodes_per_axis + spec.nodes_per_axis / 2;
    std::vector<double> sq, he2;
    sq.reserve(e.samples.size());
    double qsum = 0.0;
    std::size_t qn = 0;
    for (std::size_t i = 0; i < e.samples.size(); ++i) {
      const double he = apply_H_eps(F, e.samples[i], spec);
      sq.push_back((he - hd[i]) * (he - hd[i]));
      he2.push_back(he * he);
      if (i < opts.quad_check_samples) {
        const double hf = apply_H_eps(F, e.samples[i], fine);
        qsum += (hf - he) * (hf - he);
        ++qn;
      }
    }
    ConvergenceRow row;
    row.eps = eps;
    row.mse = batch_means(sq, opts.batches);
    row.l2err = std::sqrt(std::max(row.mse.mean, 0.0));
    row.l2err_stderr = row.l2err > 0.0 ? row.mse.stderr_ / (2.0 * row.l2err) : row.mse.stderr_;
    row.second_moment_eps = batch_means(he2, opts.batches);
    row.second_moment_dif = hd2_est;
    row.quad_err = qn > 0 ? std::sqrt(qsum / static_cast<double>(qn)) : 0.0;
    rep.rows.push_back(row);
  }
  std::vector<double> lx, ly;
  bool positive = true;
  for (const auto& r : rep.rows) {
    if (!(r.l2err > 0.0)) positive = false;
    lx.push_back(std::log(r.eps));
    ly.push_back(std::log(std::max(r.l2err, 1e-300)));
  }
  const auto fit = least_squares(lx, ly);
  rep.slope = positive ? fit.slope : 0.0;
  rep.intercept = fit.intercept;
  // Order rows by decreasing eps for the monotonicity check.
  std::vector<ConvergenceRow> sorted = rep.rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.eps > b.eps; });
  rep.strictly_decreasing = true;
  for (std::size_t k = 1; k < sorted.size(); ++k)
    if (!(sorted[k].l2err < sorted[k - 1].l2err)) rep.strictly_decreasing = false;
  rep.at_noise_floor = true;
  for (const auto& r : rep.rows)
    if (r.l2err > opts.noise_floor_factor * std::max(r.quad_err, 1e-14)) rep.at_noise_floor = false;
  return rep;
}

}  // namespace kdl
