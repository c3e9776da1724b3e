#include <doctest.h>

#include <cmath>
#include <vector>

#include "kdl/errors.hpp"
#include "kdl/gibbs.hpp"

using namespace kdl;

namespace {

double poisson_pmf(double mean, int k) { return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0)); }

bool same(const Ensemble& a, const Ensemble& b) {
  if (a.samples.size() != b.samples.size()) return false;
  for (std::size_t s = 0; s < a.samples.size(); ++s) {
    const auto &x = a.samples[s], &y = b.samples[s];
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x.id(i) != y.id(i) || x.pos(i) != y.pos(i)) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("gibbs") {
  TEST_CASE("birth and death ratios are reciprocal") {
    GibbsParams p;
    p.z = 1.7;
    p.phi = make_potential("bump", {{"beta", 1.5}});
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
      std::vector<Vec> pts(8);
      for (auto& x : pts) x = Vec{rng.uniform(0, 5), rng.uniform(0, 5), 0};
      const Configuration g(p.box, pts);
      const Vec x{rng.uniform(0, 5), rng.uniform(0, 5), 0};
      const auto added = g.with_added(x);
      CHECK(birth_ratio(g, x, p) * death_ratio(added, added.size() - 1, p) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("parameter validation") {
    GibbsParams p;
    p.z = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.z = 1.0;
    p.p_birth = 0.7;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.p_birth = 0.4;
    p.box = Box(2, 1.5);
    p.phi = make_potential("bump", {{"range", 1.0}});
    CHECK_THROWS_AS(p.validate(), ValidationError);  // range > L/2
  }

  TEST_CASE("ideal gas: counts are Poisson and points uniform") {
    GibbsParams p;
    p.z = 0.5;
    SampleOptions o;
    o.n = 3000;
    o.burn_in = 2000;
    o.thin = 100;
    o.seed = 3;
    const auto e = sample(p, o);
    REQUIRE(e.samples.size() == 3000);
    const double mean = p.z * p.box.volume();
    std::vector<int> hist(200, 0);
    for (const auto& g : e.samples) ++hist[g.size()];
    // Bins: k <= lo, lo < k < hi individually, k >= hi; tails hold >= 20 expected counts.
    auto cdf = [&](int k) {
      double c = 0.0;
      for (int j = 0; j <= k; ++j) c += poisson_pmf(mean, j);
      return c;
    };
    int lo = 0, hi = 199;
    while (3000.0 * cdf(lo) < 20.0) ++lo;
    while (3000.0 * (1.0 - cdf(hi - 1)) < 20.0) --hi;
    std::vector<double> observed, expected;
    double olo = 0.0, ohi = 0.0;
    for (int k = 0; k <= lo; ++k) olo += hist[k];
    for (int k = hi; k < 200; ++k) ohi += hist[k];
    observed.push_back(olo);
    expected.push_back(3000.0 * cdf(lo));
    for (int k = lo + 1; k < hi; ++k) {
      observed.push_back(hist[k]);
      expected.push_back(3000.0 * poisson_pmf(mean, k));
    }
    observed.push_back(ohi);
    expected.push_back(3000.0 * (1.0 - cdf(hi - 1)));
    double chi2 = 0.0;
    for (std::size_t b = 0; b < observed.size(); ++b)
      chi2 += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
    CHECK(chi_square_sf(chi2, static_cast<double>(observed.size() - 1)) > 1e-4);

    std::vector<double> xs;
    for (std::size_t s = 0; s < e.samples.size(); s += 10)
      for (const auto& q : e.samples[s].particles()) xs.push_back(q.pos[0]);
    CHECK(ks_test(xs, [](double x) { return std::clamp(x / 5.0, 0.0, 1.0); }).p_value > 1e-4);
  }

  TEST_CASE("sampling is reproducible and independent of the thread count") {
    GibbsParams p;
    p.phi = make_potential("bump", {{"beta", 1.5}});
    SampleOptions o;
    o.n = 50;
    o.burn_in = 100;
    o.thin = 5;
    o.seed = 9;
    CHECK(same(sample(p, o), sample(p, o)));
    const auto a = sample_chains(p, o, 3, 1), b = sample_chains(p, o, 3, 3);
    CHECK(same(a, b));
    CHECK(a.samples.size() == 150);
    CHECK(a.seeds.size() == 3);
    auto other = o;
    other.seed = 10;
    CHECK_FALSE(same(sample(p, o), sample(p, other)));
  }

  TEST_CASE("GNZ identities and correlation functions") {
    GibbsParams p;
    p.phi = make_potential("bump", {{"beta", 1.5}});
    SampleOptions o;
    o.n = 1500;
    o.burn_in = 1000;
    o.thin = 20;
    o.seed = 4;
    const auto e = sample(p, o);
    GnzTest f = [](const Configuration& g, const Vec& x) {
      return std::cos(x[0]) + 0.1 * static_cast<double>(g.size());
    };
    const auto r1 = gnz_residual(e, p, f);
    CHECK(std::fabs(r1.z_score) < 4.0);
    Gnz2Test u = [&p](const Configuration&, const Vec& x, const Vec& y) {
      return p.box.min_image_dist(x, y) < 1.5 ? 1.0 : 0.0;
    };
    GnzOptions go;
    go.points_per_sample = 32;
    const auto r2 = gnz2_residual(e, p, u, go);
    CHECK(std::fabs(r2.z_score) < 4.0);

    const auto k1 = estimate_correlation(e, 1);
    const auto k2 = estimate_correlation(e, 2, Binning{2.0, 8});
    CHECK(k1.values.size() == 1);
    CHECK(k2.values.size() == 8);
    CHECK(k2.edges.back() == doctest::Approx(2.0));
    // Repulsion: the innermost bin lies below the outermost.
    CHECK(k2.values.front().mean < k2.values.back().mean);
    const auto ru = ruelle_check(k1, k2, p);
    CHECK(ru.pass);
    CHECK(ru.xi_upper >= ru.xi);
    CHECK_THROWS_AS(estimate_correlation(e, 2, Binning{2.6, 8}), ValidationError);

    const auto pr = correlation_identity_check(e, Vec{2.5, 2.5, 0}, 2.0, 1.0);
    CHECK(std::fabs(pr.z_score) < 4.0);
    CHECK_THROWS_AS(correlation_identity_check(e, Vec{2.5, 2.5, 0}, 2.0, 2.5), ValidationError);
  }
}
