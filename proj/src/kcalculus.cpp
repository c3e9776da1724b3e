#include "kdl/kcalculus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "kdl/errors.hpp"
#include "kdl/quadrature.hpp"
#include "kdl/rng.hpp"
#include "kdl/stats.hpp"

namespace kdl {

SubsetFunction::SubsetFunction(Configuration base, std::vector<double> values, int n_max)
    : base_(std::move(base)), values_(std::move(values)) {
  if (n_max > kDefaultMaxBase || n_max < 0) throw ValidationError("SubsetFunction: n_max must be in [0, 16]");
  if (static_cast<int>(base_.size()) > n_max)
    throw ValidationError("SubsetFunction: base has " + std::to_string(base_.size()) + " points, limit is " +
                          std::to_string(n_max));
  if (values_.size() != (std::size_t{1} << base_.size()))
    throw ValidationError("SubsetFunction: expected 2^n values");
}

std::vector<Vec> SubsetFunction::points(Mask m) const {
  std::vector<Vec> out;
  for (int i = 0; i < n(); ++i)
    if (m & (Mask{1} << i)) out.push_back(base_.pos(static_cast<std::size_t>(i)));
  return out;
}

SubsetFunction SubsetFunction::from(const Configuration& base, const std::function<double(std::span<const Vec>)>& g,
                                    int n_max) {
  if (static_cast<int>(base.size()) > n_max) throw ValidationError("SubsetFunction: base too large");
  const std::size_t count = std::size_t{1} << base.size();
  std::vector<double> v(count);
  std::vector<Vec> pts;
  for (std::size_t m = 0; m < count; ++m) {
    pts.clear();
    for (std::size_t i = 0; i < base.size(); ++i)
      if (m & (std::size_t{1} << i)) pts.push_back(base.pos(i));
    v[m] = g(pts);
  }
  return SubsetFunction(base, std::move(v), n_max);
}

SubsetFunction SubsetFunction::indicator_empty(const Configuration& base) {
  std::vector<double> v(std::size_t{1} << base.size(), 0.0);
  v[0] = 1.0;
  return SubsetFunction(base, std::move(v));
}

SubsetFunction SubsetFunction::product(const Configuration& base, const std::function<double(const Vec&)>& f) {
  const std::size_t n = base.size();
  std::vector<double> factor(n);
  for (std::size_t i = 0; i < n; ++i) factor[i] = std::expm1(f(base.pos(i)));
  std::vector<double> v(std::size_t{1} << n);
  v[0] = 1.0;
  // Build by lowest set bit so every entry is one multiplication from a smaller one.
  for (std::size_t m = 1; m < v.size(); ++m) {
    const int low = std::countr_zero(m);
    v[m] = v[m & (m - 1)] * factor[static_cast<std::size_t>(low)];
  }
  return SubsetFunction(base, std::move(v));
}

SubsetFunction SubsetFunction::singleton(const Configuration& base, const std::function<double(const Vec&)>& f) {
  std::vector<double> v(std::size_t{1} << base.size(), 0.0);
  for (std::size_t i = 0; i < base.size(); ++i) v[std::size_t{1} << i] = f(base.pos(i));
  return SubsetFunction(base, std::move(v));
}

// ---------------------------------------------------------------------------

double k_transform(const SubsetFunction& g, Mask gamma) {
  double s = g[0];
  for (Mask sub = gamma; sub != 0; sub = (sub - 1) & gamma) s += g[sub];
  return s;
}

SubsetFunction k_transform(const SubsetFunction& g) {
  std::vector<double> v(g.values().size());
  for (Mask m = 0; m < v.size(); ++m) v[m] = k_transform(g, m);
  return SubsetFunction(g.base(), std::move(v));
}

double k_inverse(const SubsetFunction& f, Mask eta) {
  const int size = std::popcount(eta);
  auto sign = [&](Mask xi) { return ((size - std::popcount(xi)) & 1) ? -1.0 : 1.0; };
  double s = sign(0) * f[0];
  for (Mask sub = eta; sub != 0; sub = (sub - 1) & eta) s += sign(sub) * f[sub];
  return s;
}

SubsetFunction k_inverse(const SubsetFunction& f) {
  std::vector<double> v(f.values().size());
  for (Mask m = 0; m < v.size(); ++m) v[m] = k_inverse(f, m);
  return SubsetFunction(f.base(), std::move(v));
}

namespace {

void require_same_base(const SubsetFunction& a, const SubsetFunction& b) {
  if (a.n() != b.n()) throw ValidationError("star_convolution: bases differ in size");
  for (int i = 0; i < a.n(); ++i)
    if (a.base().pos(static_cast<std::size_t>(i)) != b.base().pos(static_cast<std::size_t>(i)))
      throw ValidationError("star_convolution: bases differ");
}

// Runs fn over all submasks of m, including the empty one.
template <class Fn>
void for_submasks(Mask m, Fn&& fn) {
  for (Mask sub = m;; sub = (sub - 1) & m) {
    fn(sub);
    if (sub == 0) break;
  }
}

}  // namespace

double star_convolution(const SubsetFunction& g1, const SubsetFunction& g2, Mask eta) {
  double s = 0.0;
  for_submasks(eta, [&](Mask eta2) {
    const Mask rest = eta & ~eta2;
    for_submasks(rest, [&](Mask eta1) {
      const Mask eta3 = rest & ~eta1;
      s += g1[eta1 | eta2] * g2[eta2 | eta3];
    });
  });
  return s;
}

SubsetFunction star_convolution(const SubsetFunction& g1, const SubsetFunction& g2) {
  require_same_base(g1, g2);
  std::vector<double> v(g1.values().size());
  for (Mask m = 0; m < v.size(); ++m) v[m] = star_convolution(g1, g2, m);
  return SubsetFunction(g1.base(), std::move(v));
}

// ---------------------------------------------------------------------------
// Lebesgue-Poisson integrals

namespace {

double box_integral(const std::function<double(const Vec&)>& f, const Box& box, const LPQuadratureSpec& q) {
  const int dim = box.dim();
  const double h = box.side() / q.panels_per_axis;
  const auto cell = cube_rule(dim, 0.5 * h, q.nodes_per_axis);
  std::size_t panels = 1;
  for (int k = 0; k < dim; ++k) panels *= static_cast<std::size_t>(q.panels_per_axis);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    std::size_t rest = p;
    Vec mid{};
    for (int k = 0; k < dim; ++k) {
      mid[k] = (static_cast<double>(rest % q.panels_per_axis) + 0.5) * h;
      rest /= q.panels_per_axis;
    }
    for (const auto& node : cell) total += node.weight * f(mid + node.point);
  }
  return total;
}

double order_grid_integral(const std::function<double(std::span<const Vec>)>& g, int n, const Box& box,
                           const LPQuadratureSpec& q) {
  const int dim = box.dim();
  const int axes = n * dim;
  const auto& rule = gauss_legendre(q.nodes_per_axis);
  const double half = 0.5 * box.side();
  std::size_t total = 1;
  for (int a = 0; a < axes; ++a) total *= static_cast<std::size_t>(q.nodes_per_axis);
  std::vector<Vec> pts(static_cast<std::size_t>(n));
  double s = 0.0;
  for (std::size_t m = 0; m < total; ++m) {
    std::size_t rest = m;
    double w = 1.0;
    for (int a = 0; a < axes; ++a) {
      const int i = static_cast<int>(rest % q.nodes_per_axis);
      rest /= q.nodes_per_axis;
      pts[static_cast<std::size_t>(a / dim)][a % dim] = half + half * rule.nodes[i];
      w *= half * rule.weights[i];
    }
    s += w * g(pts);
  }
  return s;
}

}  // namespace

LPResult lp_integral(const LPIntegrand& g, const Box& box, const LPQuadratureSpec& q) {
  if (g.order_cap < 0) throw ValidationError("lp_integral: order_cap must be >= 0");
  if (q.nodes_per_axis < 1 || q.panels_per_axis < 1) throw ValidationError("lp_integral: bad quadrature spec");
  LPResult res;
  res.per_order.assign(static_cast<std::size_t>(g.order_cap) + 1, 0.0);
  switch (g.form) {
    case LPIntegrand::Form::Product: {
      if (!g.one_body) throw ValidationError("lp_integral: product form needs one_body");
      const double I = box_integral([&](const Vec& x) { return std::expm1(g.one_body(x)); }, box, q);
      double term = 1.0;
      res.per_order[0] = 1.0;
      for (int n = 1; n <= g.order_cap; ++n) {
        term *= I / n;
        res.per_order[static_cast<std::size_t>(n)] = term;
      }
      break;
    }
    case LPIntegrand::Form::Singleton: {
      if (!g.one_body) throw ValidationError("lp_integral: singleton form needs one_body");
      if (g.order_cap >= 1) res.per_order[1] = box_integral(g.one_body, box, q);
      break;
    }
    case LPIntegrand::Form::PerOrder: {
      res.per_order[0] = g.empty_value;
      double var = 0.0;
      double factorial = 1.0;
      for (int n = 1; n <= g.order_cap; ++n) {
        factorial *= n;
        if (static_cast<std::size_t>(n) > g.per_order.size() || !g.per_order[n - 1]) continue;
        const auto& gn = g.per_order[static_cast<std::size_t>(n - 1)];
        const int axes = n * box.dim();
        const double points = std::pow(static_cast<double>(q.nodes_per_axis), axes);
        if (axes <= 12 && points <= static_cast<double>(q.max_grid_points)) {
          res.per_order[static_cast<std::size_t>(n)] = order_grid_integral(gn, n, box, q) / factorial;
          continue;
        }
        if (!q.allow_monte_carlo)
          throw ValidationError("lp_integral: order " + std::to_string(n) + " needs a " + std::to_string(axes) +
                                "-dimensional grid; enable the Monte Carlo fallback");
        Rng rng(q.seed, static_cast<std::uint64_t>(n));
        const double vol_n = std::pow(box.volume(), n);
        std::vector<double> vals(q.mc_samples);
        std::vector<Vec> pts(static_cast<std::size_t>(n));
        for (auto& v : vals) {
          for (auto& p : pts)
            for (int k = 0; k < box.dim(); ++k) p[k] = rng.uniform(0.0, box.side());
          v = gn(pts);
        }
        const auto est = mean_iid(vals);
        res.per_order[static_cast<std::size_t>(n)] = vol_n * est.mean / factorial;
        const double se = vol_n * est.stderr_ / factorial;
        var += se * se;
        res.monte_carlo = true;
      }
      res.stderr_ = std::sqrt(var);
      break;
    }
  }
  for (double t : res.per_order) res.value += t;
  return res;
}

// ---------------------------------------------------------------------------
// Product identities

namespace {

std::vector<double> eval_on(const Configuration& base, const std::function<double(const Vec&)>& f) {
  std::vector<double> v(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) v[i] = f(base.pos(i));
  return v;
}

}  // namespace

SubsetFunction sum_product_function(const Configuration& base, const std::function<double(const Vec&)>& f,
                          const std::function<double(const Vec&)>& g) {
  const int n = static_cast<int>(base.size());
  const auto fv = eval_on(base, f);
  const auto gv = eval_on(base, g);
  std::vector<double> v(std::size_t{1} << n, 0.0);
  for (Mask m = 1; m < v.size(); ++m) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!(m & (Mask{1} << i))) continue;
      double t = std::exp(fv[i]) * gv[i];
      for (int j = 0; j < n; ++j)
        if (j != i && (m & (Mask{1} << j))) t *= std::expm1(fv[j]);
      s += t;
    }
    v[m] = s;
  }
  return SubsetFunction(base, std::move(v));
}

SubsetFunction pair_product_function(const Configuration& base, const std::function<double(const Vec&)>& f,
                          const std::function<double(const Vec&)>& g1, const std::function<double(const Vec&)>& g2) {
  const int n = static_cast<int>(base.size());
  const auto fv = eval_on(base, f);
  const auto a = eval_on(base, g1);
  const auto b = eval_on(base, g2);
  std::vector<double> v(std::size_t{1} << n, 0.0);
  for (Mask m = 1; m < v.size(); ++m) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!(m & (Mask{1} << i))) continue;
      for (int j = 0; j < n; ++j) {
        if (j == i || !(m & (Mask{1} << j))) continue;
        double t = std::exp(fv[i]) * a[i] * std::exp(fv[j]) * b[j];
        for (int k = 0; k < n; ++k)
          if (k != i && k != j && (m & (Mask{1} << k))) t *= std::expm1(fv[k]);
        s += t;
      }
    }
    v[m] = s;
  }
  return SubsetFunction(base, std::move(v));
}

ProductIdentityReport product_identity_check(const std::function<double(const Vec&)>& f, const std::function<double(const Vec&)>& g,
                            const std::function<double(const Vec&)>& g1, const std::function<double(const Vec&)>& g2,
                            const Configuration& base, double tolerance) {
  if (base.size() > 12) throw ValidationError("product_identity_check: base must have at most 12 points");
  const int n = static_cast<int>(base.size());
  const auto fv = eval_on(base, f);
  const auto gv = eval_on(base, g);
  const auto av = eval_on(base, g1);
  const auto bv = eval_on(base, g2);
  const auto K1 = k_transform(SubsetFunction::product(base, f));
  const auto K2 = k_transform(sum_product_function(base, f, g));
  const auto K3 = k_transform(pair_product_function(base, f, g1, g2));
  ProductIdentityReport rep;
  rep.tolerance = tolerance;
  for (Mask m = 0; m < K1.values().size(); ++m) {
    double sf = 0.0, sg = 0.0, pair = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!(m & (Mask{1} << i))) continue;
      sf += fv[i];
      sg += gv[i];
      for (int j = 0; j < n; ++j)
        if (j != i && (m & (Mask{1} << j))) pair += av[i] * bv[j];
    }
    const double e = std::exp(sf);
    rep.dev_g1 = std::max(rep.dev_g1, std::fabs(K1[m] - e));
    rep.dev_g2 = std::max(rep.dev_g2, std::fabs(K2[m] - e * sg));
    rep.dev_g3 = std::max(rep.dev_g3, std::fabs(K3[m] - e * pair));
  }
  rep.pass = rep.dev_g1 <= tolerance && rep.dev_g2 <= tolerance && rep.dev_g3 <= tolerance;
  return rep;
}

// ---------------------------------------------------------------------------
// Growth-function bound

CubeIndex cube_of(const Vec& x, int dim) {
  CubeIndex r{};
  for (int k = 0; k < dim; ++k) r[k] = static_cast<long>(std::floor(x[k] + 0.5));
  return r;
}

namespace {

double growth_exponent(double tau, double sigma, double p, const std::map<CubeIndex, int>& counts) {
  double s = 0.0;
  for (const auto& [r, c] : counts) s += static_cast<double>(c) * c;
  return tau * std::pow(1.0 + sigma * s, p);
}

}  // namespace

SubsetFunction growth_function(double zeta, double tau, double sigma, double p, const std::vector<CubeIndex>& lambda,
                         const Configuration& base) {
  if (!(zeta > 0.0) || tau < 0.0 || sigma < 0.0 || !(p > 0.0 && p < 1.0))
    throw ValidationError("growth_function: need zeta > 0, tau >= 0, sigma >= 0, 0 < p < 1");
  const int dim = base.box().dim();
  const std::size_t n = base.size();
  std::vector<bool> inside(n);
  std::vector<CubeIndex> cube(n);
  for (std::size_t i = 0; i < n; ++i) {
    cube[i] = cube_of(base.pos(i), dim);
    inside[i] = std::find(lambda.begin(), lambda.end(), cube[i]) != lambda.end();
  }
  std::vector<double> v(std::size_t{1} << n);
  for (std::size_t m = 0; m < v.size(); ++m) {
    std::map<CubeIndex, int> counts;
    int in = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(m & (std::size_t{1} << i)) || !inside[i]) continue;
      ++in;
      ++counts[cube[i]];
    }
    v[m] = std::pow(zeta, in) * std::exp(growth_exponent(tau, sigma, p, counts));
  }
  return SubsetFunction(base, std::move(v));
}

KinvBoundReport kinv_bound_check(double zeta, double tau, double sigma, double p,
                                 const std::vector<CubeIndex>& lambda, const Configuration& base) {
  const auto U = growth_function(zeta, tau, sigma, p, lambda, base);
  const auto Kinv = k_inverse(U);
  const int dim = base.box().dim();
  const std::size_t n = base.size();
  std::vector<CubeIndex> cube(n);
  Mask inside_mask = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cube[i] = cube_of(base.pos(i), dim);
    if (std::find(lambda.begin(), lambda.end(), cube[i]) != lambda.end()) inside_mask |= Mask{1} << i;
  }
  KinvBoundReport rep;
  double scale = 0.0;
  for (double u : U.values()) scale = std::max(scale, std::fabs(u));
  for (Mask m = 0; m < Kinv.values().size(); ++m) {
    const double lhs = std::fabs(Kinv[m]);
    if ((m & ~inside_mask) != 0) {
      rep.max_outside = std::max(rep.max_outside, lhs);
      continue;
    }
    ++rep.masks_inside;
    std::map<CubeIndex, int> counts;
    for (std::size_t i = 0; i < n; ++i)
      if (m & (Mask{1} << i)) ++counts[cube[i]];
    const double bound = std::pow(2.0 * zeta, std::popcount(m)) * std::exp(growth_exponent(tau, sigma, p, counts));
    const double ratio = lhs / bound;
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.argmax = m;
    }
  }
  rep.max_outside /= std::max(scale, 1.0);
  const double rounding = 1e-12 * std::pow(2.0, static_cast<double>(n));
  rep.holds = rep.max_ratio <= 1.0 + rounding && rep.max_outside <= rounding;
  return rep;
}

}  // namespace kdl
