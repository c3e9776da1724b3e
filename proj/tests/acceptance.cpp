// Acceptance suite: one PASS/FAIL line per criterion. Tolerances, sample
// sizes and runtime limits are fixed below; every run uses fixed seeds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "kdl/cli.hpp"
#include "kdl/diffusion.hpp"
#include "kdl/genlab.hpp"
#include "kdl/gibbs.hpp"
#include "kdl/kawasaki.hpp"
#include "kdl/kcalculus.hpp"
#include "oracles.hpp"

using namespace kdl;
namespace fs = std::filesystem;

namespace {

constexpr double kExactTol = 1e-10;       // criteria 1, 2
constexpr double kDiagonalTol = 1e-8;     // criterion 2, diagonal spread and c = 2/3
constexpr double kBalanceTol = 1e-12;     // criterion 3
constexpr double kGnzZ = 4.0;             // criterion 4
constexpr double kSigma = 3.0;            // criteria 4, 5, 6, 8
constexpr double kSlopeP1 = 0.9;          // criterion 7
constexpr double kSlopeLo = 1.8, kSlopeHi = 2.2;
constexpr double kQuadWindowTol = 1e-6;
constexpr double kOracleRelTol = 1e-3;    // library vs oracle single-particle gap
constexpr int kOracleNodes = 160;        // library nodes per axis for that comparison

const Box kBox(2, 5.0);

PairPotential p1() { return make_potential("bump", {{"beta", 1.5}, {"range", 1.0}}); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

Configuration random_configuration(const Box& box, std::size_t n, Rng& rng) {
  std::vector<Vec> pts(n);
  for (auto& p : pts)
    for (int k = 0; k < box.dim(); ++k) p[k] = rng.uniform(0.0, box.side());
  return Configuration(box, pts);
}

Ensemble gibbs_ensemble(const PairPotential& phi, std::size_t n, std::size_t thin, std::uint64_t seed) {
  GibbsParams p;
  p.phi = phi;
  p.box = kBox;
  SampleOptions o;
  o.n = n;
  o.burn_in = 5000;
  o.thin = thin;
  o.seed = seed;
  return sample(p, o);
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome out;
  Rng rng(101);
  const Box box(2, 10.0);
  double dev_k = 0.0, dev_star = 0.0, dev_hom = 0.0, dev_products = 0.0;
  auto random_values = [&](std::size_t n) {
    std::vector<double> v(std::size_t{1} << n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
  };
  for (std::size_t n : {3, 6, 10}) {
    const auto base = random_configuration(box, n, rng);
    const auto v = random_values(n);
    const SubsetFunction G(base, v);
    const auto KG = k_transform(G);
    const auto back = k_inverse(KG), fwd = k_transform(k_inverse(G));
    for (Mask m = 0; m <= G.full(); ++m) {
      dev_k = std::max({dev_k, std::fabs(KG[m] - oracle::k_transform(v, m)), std::fabs(back[m] - v[m]),
                        std::fabs(fwd[m] - v[m])});
    }
  }
  for (std::size_t n : {8, 10}) {
    const auto base = random_configuration(box, n, rng);
    const auto a = random_values(n), b = random_values(n);
    const SubsetFunction A(base, a), B(base, b);
    const auto S = star_convolution(A, B);
    const auto KS = k_transform(S), KA = k_transform(A), KB = k_transform(B);
    for (Mask m = 0; m <= A.full(); ++m) {
      if (n == 8) dev_star = std::max(dev_star, std::fabs(S[m] - oracle::star(a, b, m)));
      const double want = KA[m] * KB[m];
      dev_hom = std::max(dev_hom, std::fabs(KS[m] - want) / std::max(1.0, std::fabs(want)));
    }
  }
  // Product identities against closed forms evaluated here.
  for (std::size_t n : {5, 10}) {
    const auto base = random_configuration(box, n, rng);
    const double w1 = rng.uniform(-1, 1), w2 = rng.uniform(-1, 1);
    auto f = [=](const Vec& x) { return 0.3 * std::sin(w1 * x[0] + w2 * x[1]); };
    auto g = [=](const Vec& x) { return std::cos(0.4 * x[0]) + w2; };
    auto g1 = [=](const Vec& x) { return 1.0 + 0.1 * w1 * x[1]; };
    auto g2 = [=](const Vec& x) { return std::exp(-0.05 * x[0] - 0.02 * x[1]); };
    const auto G1 = SubsetFunction::product(base, f).values();
    const auto G2 = sum_product_function(base, f, g).values();
    const auto G3 = pair_product_function(base, f, g1, g2).values();
    for (Mask m = 0; m < G1.size(); ++m) {
      double sf = 0.0, sg = 0.0, pair = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(m & (Mask{1} << i))) continue;
        sf += f(base.pos(i));
        sg += g(base.pos(i));
        for (std::size_t j = 0; j < n; ++j)
          if (j != i && (m & (Mask{1} << j))) pair += g1(base.pos(i)) * g2(base.pos(j));
      }
      const double e = std::exp(sf);
      dev_products = std::max({dev_products, std::fabs(oracle::k_transform(G1, m) - e),
                            std::fabs(oracle::k_transform(G2, m) - e * sg),
                            std::fabs(oracle::k_transform(G3, m) - e * pair)});
    }
  }
  // Growth bound of the inverse transform for zeta in [1, 3].
  double ratio = 0.0, outside = 0.0;
  const std::vector<CubeIndex> lambda{{1, 1, 0}, {2, 1, 0}, {1, 2, 0}};
  for (int t = 0; t < 30; ++t) {
    std::vector<Vec> pts;
    for (int i = 0; i < 10; ++i) {
      const double cx = 1.0 + static_cast<double>(rng.below(3)), cy = 1.0 + static_cast<double>(rng.below(2));
      pts.push_back(Vec{cx + rng.uniform(-0.49, 0.49), cy + rng.uniform(-0.49, 0.49), 0.0});
    }
    const auto rep = kinv_bound_check(rng.uniform(1.0, 3.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0),
                                      rng.uniform(0.05, 0.95), lambda, Configuration(box, pts));
    ratio = std::max(ratio, rep.max_ratio);
    outside = std::max(outside, rep.max_outside);
  }
  const double worst = std::max({dev_k, dev_star, dev_hom, dev_products, outside, ratio - 1.0});
  out.require(worst <= kExactTol, "max deviation " + sci(worst) + " <= " + sci(kExactTol));
  out.detail += " (K " + sci(dev_k) + ", star " + sci(dev_star) + ", hom " + sci(dev_hom) + ", products " +
                sci(dev_products) + ", bound ratio " + sci(ratio) + ")";
  // Reported only: below zeta = 1/3 the bound fails already at tau = 0.
  const auto counter = kinv_bound_check(0.2, 0.0, 1.0, 0.5, lambda,
                                        Configuration(box, std::vector<Vec>{{1.0, 1.0, 0}, {1.2, 0.9, 0}}));
  out.detail += "; info: zeta=0.2 ratio " + sci(counter.max_ratio);
  return out;
}

Outcome criterion2() {
  Outcome out;
  double first = 0.0, mixed = 0.0, spread = 0.0;
  for (const auto& name : jump_catalog_names())
    for (int d = 1; d <= 3; ++d) {
      const auto a = make_jump(name, d);
      const auto rep = moment_check(a);
      first = std::max(first, rep.max_first);
      mixed = std::max(mixed, rep.max_mixed);
      spread = std::max(spread, rep.max_diagonal_spread);
    }
  out.require(first <= kExactTol, "first moments " + sci(first));
  out.require(mixed <= kExactTol, "mixed moments " + sci(mixed));
  out.require(spread <= kDiagonalTol, "diagonal spread " + sci(spread));
  const auto ind = make_jump("indicator", 1, {{"radius", 1.0}, {"height", 1.0}});
  const double dc = std::fabs(ind.second_moment() - 2.0 / 3.0);
  const double dd = std::fabs(moment_check(ind).diagonal[0] - 2.0 / 3.0);
  out.require(std::max(dc, dd) <= kDiagonalTol, "indicator d=1 |c - 2/3| " + sci(std::max(dc, dd)));
  return out;
}

constexpr double kNoStack = 0.25;

bool separated(const Configuration& g, const Vec& x, double r) {
  for (const auto& q : g.particles())
    if (g.box().min_image_dist(q.pos, x) < r) return false;
  return true;
}

Outcome criterion3() {
  Outcome out;
  Rng rng(303);
  const auto a = make_jump("bump", 2, {}, 0.5);
  std::size_t draws = 0;
  for (const auto& name : potential_catalog_names()) {
    const auto phi = make_potential(name);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      // Points keep a minimum spacing so that exp(-U) stays representable
      // for the singular core; the identity itself is exact for any spacing.
      Configuration g(kBox);
      while (g.size() < 10) {
        const auto x = random_configuration(kBox, 1, rng).pos(0);
        if (separated(g, x, kNoStack)) g = g.with_added(x);
      }
      const std::size_t i = rng.below(g.size());
      Vec y{};
      do {
        Vec h{};
        do {
          h = Vec{rng.uniform(-1, 1), rng.uniform(-1, 1), 0};
        } while (norm(h) >= 0.999);
        y = kBox.wrap(g.pos(i) + a.eps() * h);
      } while (!separated(g.without(i), y, kNoStack));
      const double z = rng.uniform(0.2, 3.0);
      worst = std::max({worst, oracle::balance_defect(g, i, y, a, phi, z),
                        detailed_balance_residual(g, i, y, a, phi, z)});
      ++draws;
    }
    out.require(worst <= kBalanceTol, name + " " + sci(worst));
  }
  out.detail += " over " + std::to_string(draws) + " draws";
  return out;
}

Outcome criterion4() {
  Outcome out;
  const double L = kBox.side();
  for (const auto& phi : {make_potential("zero"), p1()}) {
    const auto e = gibbs_ensemble(phi, 10000, 50, 404);
    GibbsParams p;
    p.phi = phi;
    p.box = kBox;
    GnzTest f = [L](const Configuration& g, const Vec& x) {
      int near = 0;
      for (const auto& q : g.particles()) {
        const double d = g.box().min_image_dist(q.pos, x);
        if (d > 0.0 && d < 1.0) ++near;
      }
      return (1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * x[0] / L)) * std::exp(-0.3 * near);
    };
    Gnz2Test u = [L](const Configuration& g, const Vec& x1, const Vec& x2) {
      if (g.box().min_image_dist(x1, x2) >= 1.5) return 0.0;
      return (1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * x1[1] / L)) * std::exp(-0.05 * g.size());
    };
    GnzOptions o1;
    const auto r1 = gnz_residual(e, p, f, o1);
    GnzOptions o2;
    o2.points_per_sample = 64;
    const auto r2 = gnz2_residual(e, p, u, o2);
    const std::string tag = phi.is_zero() ? "zero" : "P1";
    out.require(std::fabs(r1.z_score) < kGnzZ, tag + " GNZ z " + sci(r1.z_score));
    out.require(std::fabs(r2.z_score) < kGnzZ, tag + " GNZ2 z " + sci(r2.z_score));
    if (phi.is_zero()) {
      std::vector<double> counts;
      for (const auto& g : e.samples) counts.push_back(static_cast<double>(g.size()));
      const auto mc = batch_means(counts);
      const double zv = kBox.volume();
      out.require(std::fabs(mc.mean - zv) < kSigma * mc.stderr_, "count " + sci(mc.mean) + " vs " + sci(zv));
      const auto k1 = estimate_correlation(e, 1).values[0];
      out.require(std::fabs(k1.mean - 1.0) < kSigma * k1.stderr_, "k1 " + sci(k1.mean));
      const auto k2 = estimate_correlation(e, 2, Binning{2.0, 1}).values[0];
      out.require(std::fabs(k2.mean - 1.0) < kSigma * k2.stderr_, "k2 " + sci(k2.mean));
    }
  }
  out.detail += " (z Vol = 25, 10^4 samples)";
  return out;
}

// Paired before/after statistics of one dynamics run per replica.
struct Invariance {
  MeanEstimate window_before, window_after, window_diff;
  MeanEstimate k2_before, k2_after, k2_diff;
  bool count_conserved = true;
};

Invariance measure_invariance(const Ensemble& start, const std::vector<Configuration>& finals) {
  const Binning near{1.0, 1};
  std::vector<double> wb, wa, wd, kb, ka, kd;
  Window quadrant{Vec{0, 0, 0}, Vec{2.5, 2.5, 0}};
  Invariance r;
  for (std::size_t i = 0; i < finals.size(); ++i) {
    const auto& g0 = start.samples[i];
    const auto& g1 = finals[i];
    r.count_conserved = r.count_conserved && g0.size() == g1.size();
    auto window_count = [&](const Configuration& g) {
      double c = 0.0;
      for (const auto& q : g.particles()) c += quadrant.contains(g.box(), q.pos) ? 1.0 : 0.0;
      return c;
    };
    wb.push_back(window_count(g0));
    wa.push_back(window_count(g1));
    wd.push_back(wa.back() - wb.back());
    kb.push_back(pair_density_sample(g0, near)[0]);
    ka.push_back(pair_density_sample(g1, near)[0]);
    kd.push_back(ka.back() - kb.back());
  }
  r.window_before = batch_means(wb);
  r.window_after = batch_means(wa);
  r.window_diff = batch_means(wd);
  r.k2_before = batch_means(kb);
  r.k2_after = batch_means(ka);
  r.k2_diff = batch_means(kd);
  return r;
}

void report_invariance(Outcome& out, const std::string& tag, const Invariance& r) {
  out.require(std::fabs(r.window_diff.mean) < kSigma * r.window_diff.stderr_,
              tag + " window count " + sci(r.window_before.mean) + " -> " + sci(r.window_after.mean) + " (diff " +
                  sci(r.window_diff.mean) + " +- " + sci(r.window_diff.stderr_) + ")");
  out.require(std::fabs(r.k2_diff.mean) < kSigma * r.k2_diff.stderr_,
              tag + " k2(r<=1) " + sci(r.k2_before.mean) + " -> " + sci(r.k2_after.mean) + " (diff " +
                  sci(r.k2_diff.mean) + " +- " + sci(r.k2_diff.stderr_) + ")");
}

constexpr std::size_t kReplicas = 1000;
constexpr double kInvarianceT = 2.0;

Outcome criterion5_kawasaki() {
  Outcome out;
  const auto phi = p1();
  const auto start = gibbs_ensemble(phi, kReplicas, 50, 505);
  const auto prof = make_jump("bump", 2, {}, 0.1);
  std::vector<Configuration> finals;
  for (std::size_t r = 0; r < start.samples.size(); ++r) {
    KawasakiOptions o;
    o.T = kInvarianceT;
    o.seed = 505;
    o.stream = r;
    finals.push_back(simulate(start.samples[r], prof, phi, o).final_state);
  }
  const auto inv = measure_invariance(start, finals);
  out.require(inv.count_conserved, "total count conserved");
  report_invariance(out, "Kawasaki eps=0.1", inv);
  return out;
}

Outcome criterion5_diffusion() {
  Outcome out;
  const auto phi = p1();
  const auto start = gibbs_ensemble(phi, kReplicas, 50, 506);
  SDEConfig s;
  s.c = make_jump("bump", 2).second_moment();
  s.dt = 1e-3;
  s.T = kInvarianceT;
  s.seed = 506;
  std::vector<Configuration> finals;
  for (std::size_t r = 0; r < start.samples.size(); ++r) {
    s.stream = r;
    finals.push_back(em_run(start.samples[r], s, phi).final_state);
  }
  report_invariance(out, "diffusion dt=1e-3", measure_invariance(start, finals));
  return out;
}

Outcome criterion6() {
  Outcome out;
  const Box box(2, 10.0);
  Rng rng(606);
  const auto start = random_configuration(box, 2000, rng);
  const auto prof = make_jump("bump", 2, {}, 0.05);
  const double c = prof.second_moment(), T = 1.0;
  KawasakiOptions o;
  o.T = T;
  o.seed = 606;
  const auto kw = simulate(start, prof, make_potential("zero"), o);
  SDEConfig s;
  s.c = c;
  s.dt = 1e-2;
  s.T = T;
  s.seed = 607;
  const auto df = em_run(start, s, make_potential("zero"));
  auto per_axis = [](const std::vector<Vec>& disp) {
    std::vector<double> v;
    for (const auto& d : disp) {
      v.push_back(d[0]);
      v.push_back(d[1]);
    }
    return variance_with_error(v);
  };
  const auto vk = per_axis(kw.displacement), vd = per_axis(df.displacement);
  out.require(std::fabs(vk.variance - c * T) < kSigma * vk.stderr_,
              "Kawasaki var " + sci(vk.variance) + " +- " + sci(vk.stderr_) + " vs c t = " + sci(c * T));
  out.require(std::fabs(vd.variance - c * T) < kSigma * vd.stderr_,
              "diffusion var " + sci(vd.variance) + " +- " + sci(vd.stderr_));
  out.require(std::fabs(vk.variance - vd.variance) < kSigma * std::hypot(vk.stderr_, vd.stderr_),
              "Kawasaki vs diffusion");
  out.detail += " (" + std::to_string(kw.accepted) + " jumps)";
  return out;
}

// Wide smooth test function for the phi = 0 rate: long length scale compared
// with the jump size keeps the grid in the asymptotic regime.
CylinderFunction wide_function(const Box& box) {
  std::vector<InnerFunction> inner;
  for (auto [cx, cy, lin] : {std::tuple{2.2, 2.5, 0.2}, std::tuple{2.9, 2.3, -0.3}}) {
    InnerFunction::Params p;
    p.center = Vec{cx, cy, 0};
    p.radius = 2.4;
    p.constant = 1.0;
    p.linear = Vec{lin, 0.1, 0};
    inner.emplace_back(box, p);
  }
  return CylinderFunction("wide_sine", OuterFunction::sine({1.0, -0.7}, 0.4), std::move(inner));
}

const std::vector<double> kGrid{0.2, 0.1, 0.05, 0.025};

Outcome criterion7() {
  Outcome out;
  {
    const auto e = gibbs_ensemble(p1(), 400, 50, 707);
    GeneratorSpec spec;
    spec.phi = p1();
    std::string slopes;
    for (const char* name : {"sine_pair", "gauss_triple", "quadratic_pair", "linear_bump"}) {
      const auto rep = convergence_study(make_cylinder(name, kBox), e, spec, kGrid);
      out.require(rep.strictly_decreasing && rep.slope >= kSlopeP1,
                  std::string("P1 ") + name + " slope " + sci(rep.slope) +
                      (rep.strictly_decreasing ? "" : " not decreasing"));
    }
  }
  {
    const auto e = gibbs_ensemble(make_potential("zero"), 400, 50, 708);
    GeneratorSpec spec;
    const auto F = wide_function(kBox);
    const auto rep = convergence_study(F, e, spec, kGrid);
    out.require(rep.strictly_decreasing && rep.slope >= kSlopeLo && rep.slope <= kSlopeHi,
                "zero-potential slope " + sci(rep.slope));
    // Single particle: library gap against the polar oracle.
    std::vector<double> le, lg;
    double worst = 0.0;
    std::string gaps;
    const Vec x{2.0, 2.9, 0};
    for (double eps : kGrid) {
      GeneratorSpec s;
      s.prof = s.prof.with_eps(eps);
      s.nodes_per_axis = kOracleNodes;
      const Configuration g(kBox, std::vector<Vec>{x});
      const double c = s.prof.second_moment();
      const double lib = apply_H_eps(F, g, s) - apply_H_dif(F, g, c, s.phi);
      const double orc = oracle::single_particle_gap(F, kBox, x, s.prof, c);
      worst = std::max(worst, std::fabs(lib - orc) / std::fabs(orc));
      gaps += (gaps.empty() ? "" : ", ") + sci(lib) + "/" + sci(orc);
      le.push_back(std::log(eps));
      lg.push_back(std::log(std::fabs(orc)));
    }
    const double oslope = least_squares(le, lg).slope;
    out.require(worst <= kOracleRelTol, "single-particle library vs oracle rel " + sci(worst) + " (" + gaps + ")");
    out.require(oslope >= kSlopeLo && oslope <= kSlopeHi, "oracle slope " + sci(oslope));
  }
  {
    const Box line(1, 5.0);
    const auto F = make_cylinder("quadratic_window", line);
    const Configuration g(line, std::vector<Vec>{{2.8, 0, 0}, {0.1, 0, 0}});
    double worst = 0.0;
    for (double eps : kGrid) {
      GeneratorSpec s;
      s.prof = make_jump("bump", 1, {}, eps);
      s.nodes_per_axis = 64;
      worst = std::max(worst, std::fabs(apply_H_eps(F, g, s) + s.prof.second_moment()));
    }
    out.require(worst <= kQuadWindowTol, "quadratic window |H F + c| " + sci(worst));
  }
  return out;
}

Outcome criterion8() {
  Outcome out;
  const auto phi = p1();
  const auto e = gibbs_ensemble(phi, 1000, 50, 808);
  Rng rng(808);
  GeneratorSpec spec;
  spec.phi = phi;
  spec.prof = make_jump("bump", 2, {}, 0.2);
  spec.nodes_per_axis = 16;
  const double c = spec.prof.second_moment();
  double worst = 0.0;
  for (int pair = 0; pair < 5; ++pair) {
    const auto F = random_cylinder(kBox, rng), G = random_cylinder(kBox, rng);
    const auto de = compare_pairing(pairing_eps(F, G, e, spec), dirichlet_form_eps(F, G, e, spec, 48).per_sample);
    const auto pd = pairing_dif(F, G, e, c, phi);
    const auto dg = compare_pairing(pd, dirichlet_form_dif(F, G, e, c).per_sample);
    const auto dz = compare_pairing(pd, dirichlet_form_dif_gnz(F, G, e, c, 1.0, phi, 100).per_sample);
    for (double z : {de.z_score, dg.z_score, dz.z_score}) worst = std::max(worst, std::fabs(z));
    out.require(std::fabs(de.z_score) < kSigma && std::fabs(dg.z_score) < kSigma && std::fabs(dz.z_score) < kSigma,
                "pair " + std::to_string(pair) + " z(eps) " + sci(de.z_score) + " z(dif, gamma dx) " +
                    sci(dg.z_score) + " z(dif, z dx) " + sci(dz.z_score));
  }
  out.detail += "; max |z| " + sci(worst);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome criterion9() {
  Outcome out;
  RunConfig cfg;
  cfg.potential = "bump";
  cfg.potential_params = {{"beta", 1.5}};
  cfg.n = 100;
  cfg.burn_in = 200;
  cfg.thin = 10;
  cfg.T = 0.1;
  cfg.replicas = 4;
  cfg.observe_dt = 0.02;
  cfg.log_events = true;
  cfg.eps_grid = {0.2, 0.1};
  cfg.functions = {"sine_pair", "gauss_triple"};
  std::size_t files = 0;
  for (const char* sub : {"gibbs-sample", "kawasaki-run", "diffusion-run", "gen-converge", "verify"}) {
    std::vector<fs::path> dirs;
    int threads = 1;
    for (const char* root : {"acceptance_det_a", "acceptance_det_b", "acceptance_det_c"}) {
      auto c = cfg;
      c.output = root;
      c.threads = static_cast<std::size_t>(threads);
      threads = 2;  // the third run differs only in the thread count
      std::ostringstream sink;
      const int rc = dispatch(sub, {}, c, sink, sink);
      if (rc != 0) out.require(false, std::string(sub) + " exit code " + std::to_string(rc));
      dirs.push_back(fs::path(root) / (std::string(sub) + "-" + run_id(c)));
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto name = entry.path().filename();
      if (name == "manifest.json") continue;
      const auto a = slurp(entry.path());
      for (std::size_t k = 1; k < dirs.size(); ++k) {
        const bool same = a == slurp(dirs[k] / name);
        if (!same) out.require(false, std::string(sub) + "/" + name.string() + " differs");
      }
      ++files;
    }
  }
  out.require(true, std::to_string(files) + " output files byte-identical across 3 runs (1 and 2 threads)");
  return out;
}

struct Criterion {
  int id;
  std::string title;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all{
      {1, "K-calculus exactness", 10.0, criterion1},
      {2, "moment identities", 1.0, criterion2},
      {3, "detailed balance at s = 1/2", 5.0, criterion3},
      {4, "GNZ validation of the sampler", 300.0, criterion4},
      {5, "invariance under Kawasaki dynamics", 600.0, criterion5_kawasaki},
      {5, "invariance under the gradient diffusion", 600.0, criterion5_diffusion},
      {6, "free-particle diffusive limit", 300.0, criterion6},
      {7, "generator convergence", 1800.0, criterion7},
      {8, "generator-form duality", 600.0, criterion8},
      {9, "determinism", 600.0, criterion9},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  bool all_pass = true;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    all_pass = all_pass && pass;
    std::printf("%s criterion %d: %s | %s | %.1f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : " TOO SLOW");
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
