#include "kdl/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kdl/errors.hpp"
#include "kdl/quadrature.hpp"
#include "kdl/rng.hpp"

namespace kdl {

std::string to_string(Regularity r) {
  switch (r) {
    case Regularity::C3b: return "C3b";
    case Regularity::ExpHalfC1: return "exp_half_C1";
    case Regularity::SingularCore: return "singular_core";
  }
  return "unknown";
}

PairPotential::PairPotential(Spec spec) : s_(std::move(spec)) {
  if (!(s_.range >= 0.0) || !std::isfinite(s_.range)) throw ValidationError("potential: range must be finite and >= 0");
  if (!(s_.lower_bound >= 0.0)) throw ValidationError("potential: lower bound B must be >= 0");
  if (!s_.value) throw ValidationError("potential: value function required");
}

double PairPotential::radial_d1(double r) const {
  if (r > s_.range || !s_.d1) return 0.0;
  return s_.d1(r);
}

double PairPotential::radial_d2(double r) const {
  if (r > s_.range || !s_.d2) return 0.0;
  return s_.d2(r);
}

Vec PairPotential::grad(const Vec& x) const {
  const double r = norm(x);
  if (r > s_.range || r == 0.0) {
    if (r == 0.0 && s_.singular_at_zero) throw NumericalGuard("potential: gradient undefined at the singular core");
    return Vec{};
  }
  if (!s_.d1) throw ValidationError("potential '" + s_.name + "' has no gradient metadata");
  return (s_.d1(r) / r) * x;
}

Mat PairPotential::hess(const Vec& x, int dim) const {
  const double r = norm(x);
  if (r > s_.range) return Mat{};
  if (!s_.d2 || !s_.d1) throw ValidationError("potential '" + s_.name + "' has no Hessian metadata");
  if (r == 0.0) {
    if (s_.singular_at_zero) throw NumericalGuard("potential: Hessian undefined at the singular core");
    Mat m = identity(dim);
    for (auto& row : m)
      for (double& v : row) v *= s_.d2(0.0);
    return m;
  }
  const Vec u = (1.0 / r) * x;
  const double d1r = s_.d1(r) / r;
  Mat m = outer(u, u);
  for (auto& row : m)
    for (double& v : row) v *= s_.d2(r) - d1r;
  add_scaled(m, d1r, identity(dim));
  return m;
}

// ---------------------------------------------------------------------------
// Catalog

std::vector<std::string> potential_catalog_names() { return {"zero", "bump", "softcore", "soft_sphere"}; }

namespace {

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void only_keys(const std::string& name, const std::map<std::string, double>& p,
               std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : p) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ValidationError("potential '" + name + "': unknown parameter '" + k + "'");
    if (!std::isfinite(v)) throw ValidationError("potential '" + name + "': parameter '" + k + "' is not finite");
  }
}

}  // namespace

PairPotential make_potential(const std::string& name, const std::map<std::string, double>& params) {
  PairPotential::Spec s;
  s.name = name;
  if (name == "zero" || name == "ideal") {
    only_keys(name, params, {});
    s.name = "zero";
    s.range = 0.0;
    s.value = [](double) { return 0.0; };
    s.d1 = [](double) { return 0.0; };
    s.d2 = [](double) { return 0.0; };
    s.decay = DecayCondition{};
    return PairPotential(std::move(s));
  }
  if (name == "bump") {
    only_keys(name, params, {"beta", "range"});
    const double beta = param(params, "beta", 1.0);
    const double R = param(params, "range", 1.0);
    if (!(R > 0.0)) throw ValidationError("potential 'bump': range must be > 0");
    s.params = {{"beta", beta}, {"range", R}};
    s.range = R;
    s.lower_bound = std::max(0.0, -beta);
    s.regularity = Regularity::C3b;
    s.decay = DecayCondition{};
    s.value = [beta, R](double r) {
      const double u = r / R;
      if (u >= 1.0) return 0.0;
      return beta * std::exp(1.0 - 1.0 / (1.0 - u * u));
    };
    s.d1 = [beta, R](double r) {
      const double u = r / R;
      if (u >= 1.0) return 0.0;
      const double om = 1.0 - u * u;
      const double b = std::exp(1.0 - 1.0 / om);
      return beta * b * (-2.0 * u / (om * om)) / R;
    };
    s.d2 = [beta, R](double r) {
      const double u = r / R;
      if (u >= 1.0) return 0.0;
      const double om = 1.0 - u * u;
      const double b = std::exp(1.0 - 1.0 / om);
      const double g1 = -2.0 * u / (om * om);
      const double g2 = -2.0 / (om * om) - 8.0 * u * u / (om * om * om);
      return beta * b * (g2 + g1 * g1) / (R * R);
    };
    return PairPotential(std::move(s));
  }
  if (name == "softcore") {
    only_keys(name, params, {"beta", "range"});
    const double beta = param(params, "beta", 1.0);
    const double R = param(params, "range", 1.0);
    if (!(R > 0.0)) throw ValidationError("potential 'softcore': range must be > 0");
    s.params = {{"beta", beta}, {"range", R}};
    s.range = R;
    s.lower_bound = std::max(0.0, -beta);
    s.regularity = Regularity::ExpHalfC1;
    const double R2 = R * R;
    s.value = [beta, R2](double r) {
      const double om = 1.0 - r * r / R2;
      return om <= 0.0 ? 0.0 : beta * om * om * om;
    };
    s.d1 = [beta, R2](double r) {
      const double om = 1.0 - r * r / R2;
      return om <= 0.0 ? 0.0 : -6.0 * beta * r * om * om / R2;
    };
    s.d2 = [beta, R2](double r) {
      const double q = r * r / R2;
      const double om = 1.0 - q;
      return om <= 0.0 ? 0.0 : -6.0 * beta * om * (1.0 - 5.0 * q) / R2;
    };
    return PairPotential(std::move(s));
  }
  if (name == "soft_sphere") {
    only_keys(name, params, {"beta", "sigma", "range"});
    const double beta = param(params, "beta", 1.0);
    const double sigma = param(params, "sigma", 0.3);
    const double R = param(params, "range", 1.0);
    if (!(beta > 0.0) || !(sigma > 0.0) || !(R > 0.0))
      throw ValidationError("potential 'soft_sphere': beta, sigma and range must be > 0");
    s.params = {{"beta", beta}, {"sigma", sigma}, {"range", R}};
    s.range = R;
    s.lower_bound = 0.0;
    s.regularity = Regularity::SingularCore;
    s.singular_at_zero = true;
    const double R2 = R * R;
    s.value = [beta, sigma, R2](double r) {
      if (r == 0.0) return std::numeric_limits<double>::infinity();
      const double om = 1.0 - r * r / R2;
      if (om <= 0.0) return 0.0;
      return beta * std::pow(sigma / r, 12) * om * om * om;
    };
    s.d1 = [beta, sigma, R2](double r) {
      if (r == 0.0) return -std::numeric_limits<double>::infinity();
      const double om = 1.0 - r * r / R2;
      if (om <= 0.0) return 0.0;
      const double A = std::pow(sigma / r, 12);
      const double A1 = -12.0 * A / r;
      const double B = om * om * om;
      const double B1 = -6.0 * r * om * om / R2;
      return beta * (A1 * B + A * B1);
    };
    s.d2 = [beta, sigma, R2](double r) {
      if (r == 0.0) return std::numeric_limits<double>::infinity();
      const double q = r * r / R2;
      const double om = 1.0 - q;
      if (om <= 0.0) return 0.0;
      const double A = std::pow(sigma / r, 12);
      const double A1 = -12.0 * A / r;
      const double A2 = 156.0 * A / (r * r);
      const double B = om * om * om;
      const double B1 = -6.0 * r * om * om / R2;
      const double B2 = -6.0 * om * (1.0 - 5.0 * q) / R2;
      return beta * (A2 * B + 2.0 * A1 * B1 + A * B2);
    };
    return PairPotential(std::move(s));
  }
  throw ValidationError("unknown potential '" + name + "'");
}

// ---------------------------------------------------------------------------
// Energies

double relative_energy(const Vec& x, std::span<const Vec> points, const PairPotential& phi, const Box& box,
                       std::size_t skip) {
  if (phi.is_zero()) return 0.0;
  const double R = phi.range();
  const double R2 = R * R;
  double e = 0.0;
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j == skip) continue;
    const Vec d = box.min_image_diff(x, points[j]);
    const double r2 = norm2(d);
    if (r2 == 0.0) throw ValidationError("relative_energy: x coincides with a point of the configuration");
    if (r2 > R2) continue;
    e += phi.radial(std::sqrt(r2));
  }
  return e;
}

double relative_energy(const Vec& x, const CellList& cells, const PairPotential& phi, std::size_t skip) {
  if (phi.is_zero()) return 0.0;
  double e = 0.0;
  cells.for_each_within(x, phi.range(), skip, [&](std::size_t, const Vec&, double r2) {
    if (r2 == 0.0) throw ValidationError("relative_energy: x coincides with a point of the configuration");
    e += phi.radial(std::sqrt(r2));
  });
  return e;
}

double relative_energy(const Vec& x, const Configuration& gamma, const PairPotential& phi) {
  if (phi.range() > 0.5 * gamma.box().side()) throw ValidationError("relative_energy: potential range exceeds L/2");
  const auto pts = gamma.positions();
  return relative_energy(x, pts, phi, gamma.box());
}

double total_energy(std::span<const Vec> points, const PairPotential& phi, const Box& box) {
  if (phi.is_zero()) return 0.0;
  const double R2 = phi.range() * phi.range();
  double e = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double r2 = norm2(box.min_image_diff(points[i], points[j]));
      if (r2 > R2) continue;
      e += phi.radial(std::sqrt(r2));
    }
  }
  return e;
}

double total_energy(const Configuration& gamma, const PairPotential& phi) {
  if (phi.range() > 0.5 * gamma.box().side()) throw ValidationError("total_energy: potential range exceeds L/2");
  const auto pts = gamma.positions();
  return total_energy(pts, phi, gamma.box());
}

// ---------------------------------------------------------------------------
// Condition diagnostics

namespace {

QuadratureRecord radial_integral(const std::function<double(double)>& f, int dim, double domain) {
  QuadratureRecord rec;
  rec.domain = domain;
  rec.order = 16;
  rec.panels = 64;
  if (domain <= 0.0) return rec;
  auto integrand = [&](double r) { return f(r) * std::pow(r, dim - 1); };
  const double coarse = sphere_area(dim) * integrate(integrand, 0.0, domain, rec.panels / 2, rec.order);
  const double fine = sphere_area(dim) * integrate(integrand, 0.0, domain, rec.panels, rec.order);
  rec.value = fine;
  rec.error = std::fabs(fine - coarse);
  return rec;
}

// e^{-phi/2} |grad phi| as a function of r, with the singular limit handled.
double weighted_grad(const PairPotential& phi, double r) {
  if (r > phi.range()) return 0.0;
  const double v = phi.radial(r);
  if (!std::isfinite(v)) return 0.0;
  const double e = std::exp(-0.5 * v);
  if (e == 0.0) return 0.0;
  return e * std::fabs(phi.radial_d1(r));
}

std::vector<Vec> ball_lattice(int dim, double delta, int per_axis) {
  std::vector<Vec> pts;
  const double h = 2.0 * delta / per_axis;
  std::array<int, kMaxDim> idx{};
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(per_axis + 1);
  for (std::size_t m = 0; m < total; ++m) {
    std::size_t rest = m;
    Vec p{};
    for (int k = 0; k < dim; ++k) {
      idx[k] = static_cast<int>(rest % (per_axis + 1));
      rest /= (per_axis + 1);
      p[k] = -delta + h * idx[k];
    }
    if (norm2(p) <= delta * delta * (1.0 + 1e-12)) pts.push_back(p);
  }
  return pts;
}

}  // namespace

ConditionsReport verify_conditions(const PairPotential& phi, int dim, double delta, int n_spot,
                                   const ConditionsOptions& opts) {
  if (!(delta > 0.0)) throw ValidationError("verify_conditions: delta must be > 0");
  if (dim < 1 || dim > kMaxDim) throw ValidationError("verify_conditions: dim must be in 1..3");
  if (!phi.has_gradient()) throw ValidationError("verify_conditions: potential '" + phi.name() + "' lacks gradient metadata");
  ConditionsReport rep;
  rep.delta = delta;
  rep.lower_regularity_note =
      "lower regularity (LR) is not checked numerically: it quantifies over all disjoint unions of unit cubes";

  const double R = phi.range();
  rep.integrability = radial_integral(
      [&](double r) {
        const double v = phi.radial(r);
        return std::fabs((std::isfinite(v) ? std::exp(-v) : 0.0) - 1.0);
      },
      dim, R);

  // g_delta(x) = sup over the closed delta-ball of e^{-phi/2} |grad phi|,
  // approximated by the max over a lattice with >= 64^{min(d,2)} points.
  int per_axis = opts.ball_samples_per_axis;
  if (per_axis <= 0) per_axis = dim == 1 ? 64 : (dim == 2 ? 73 : 20);
  const auto lattice = ball_lattice(dim, delta, per_axis);
  rep.ball_samples = static_cast<int>(lattice.size());
  auto gdelta = [&](double rho) {
    if (rho > R + delta) return 0.0;
    double best = 0.0;
    for (const Vec& p : lattice) {
      Vec y = p;
      y[0] += rho;
      best = std::max(best, weighted_grad(phi, norm(y)));
    }
    return best;
  };
  if (R > 0.0) {
    QuadratureRecord rec;
    rec.domain = R + delta;
    rec.order = 8;
    rec.panels = 32;
    auto integrand = [&](double r) { return gdelta(r) * std::pow(r, dim - 1); };
    const double coarse = sphere_area(dim) * integrate(integrand, 0.0, rec.domain, rec.panels / 2, rec.order);
    const double fine = sphere_area(dim) * integrate(integrand, 0.0, rec.domain, rec.panels, rec.order);
    rec.value = fine;
    rec.error = std::fabs(fine - coarse);
    rep.gdelta = rec;
  } else {
    rep.gdelta.domain = delta;
  }

  // Sup norms on a radial grid (the potential is radial).
  rep.exp_half_sup = 1.0;
  if (R > 0.0) {
    const int n = 8192;
    for (int i = 1; i <= n; ++i) {
      const double r = R * i / n;
      const double v = phi.radial(r);
      const double e = std::isfinite(v) ? std::exp(-0.5 * v) : 0.0;
      rep.exp_half_sup = std::max(rep.exp_half_sup, e);
      rep.exp_half_grad_sup = std::max(rep.exp_half_grad_sup, 0.5 * weighted_grad(phi, r));
      const double d1 = phi.radial_d1(r);
      rep.grad_sup = std::max(rep.grad_sup, std::fabs(d1));
      if (phi.has_hessian()) rep.hess_sup = std::max({rep.hess_sup, std::fabs(phi.radial_d2(r)), std::fabs(d1 / r)});
    }
    if (!phi.singular_at_zero()) {
      const double v0 = phi.radial(0.0);
      rep.exp_half_sup = std::max(rep.exp_half_sup, std::exp(-0.5 * v0));
      if (phi.has_hessian()) rep.hess_sup = std::max(rep.hess_sup, std::fabs(phi.radial_d2(0.0)));
    } else {
      rep.grad_sup = std::numeric_limits<double>::infinity();
      rep.hess_sup = std::numeric_limits<double>::infinity();
    }
  }
  rep.weighted_grad_inside = radial_integral([&](double r) { return weighted_grad(phi, r); }, dim, R);
  rep.weighted_grad_outside_sup = 0.0;

  // Superstability spot check on clustered configurations in R^d.
  Rng rng(opts.seed, 0x55);
  struct Sample {
    double U, S1, S2;
  };
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(std::max(n_spot, 0)));
  const double spreads[3] = {0.1, 0.3, 1.0};
  for (int s = 0; s < n_spot; ++s) {
    const int k = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(opts.spot_points_max - 1, 1))));
    const double spread = spreads[s % 3];
    Vec centre{};
    for (int a = 0; a < dim; ++a) centre[a] = rng.uniform(-2.0, 2.0);
    std::vector<Vec> pts(static_cast<std::size_t>(k));
    for (auto& p : pts)
      for (int a = 0; a < dim; ++a) p[a] = centre[a] + spread * rng.normal();
    double U = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) U += phi.radial(norm(pts[i] - pts[j]));
    std::map<std::array<long, kMaxDim>, int> counts;
    for (const auto& p : pts) {
      std::array<long, kMaxDim> key{};
      for (int a = 0; a < dim; ++a) key[a] = static_cast<long>(std::floor(p[a] + 0.5));
      ++counts[key];
    }
    double S1 = 0.0, S2 = 0.0;
    for (const auto& [key, c] : counts) {
      S1 += c;
      S2 += static_cast<double>(c) * c;
    }
    samples.push_back({U, S1, S2});
  }
  rep.ss_samples = n_spot;
  std::size_t holdout_begin = 0;
  if (opts.ss_A && opts.ss_B) {
    rep.ss_A = *opts.ss_A;
    rep.ss_B = *opts.ss_B;
  } else {
    rep.ss_fitted = true;
    rep.ss_B = 1.0;
    holdout_begin = samples.size() / 2;
    double A = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < holdout_begin; ++i)
      if (samples[i].S2 > 0.0) A = std::min(A, (samples[i].U + rep.ss_B * samples[i].S1) / samples[i].S2);
    rep.ss_A = std::isfinite(A) ? A : 0.0;
  }
  rep.ss_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = holdout_begin; i < samples.size(); ++i) {
    const auto& s = samples[i];
    rep.ss_margin = std::min(rep.ss_margin, s.U - (rep.ss_A * s.S2 - rep.ss_B * s.S1));
  }
  if (samples.empty()) rep.ss_margin = 0.0;
  return rep;
}

}  // namespace kdl
