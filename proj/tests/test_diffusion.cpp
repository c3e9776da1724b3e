#include <doctest.h>

#include <cmath>
#include <vector>

#include "kdl/diffusion.hpp"
#include "kdl/errors.hpp"

using namespace kdl;

namespace {

Configuration random_configuration(const Box& box, std::size_t n, Rng& rng) {
  std::vector<Vec> pts(n);
  for (auto& p : pts)
    for (int k = 0; k < box.dim(); ++k) p[k] = rng.uniform(0.0, box.side());
  return Configuration(box, pts);
}

}  // namespace

TEST_SUITE("diffusion") {
  TEST_CASE("drift is minus c/2 times the energy gradient") {
    Rng rng(1);
    const Box box(2, 5.0);
    const auto phi = make_potential("bump", {{"beta", 1.5}});
    const auto g = random_configuration(box, 25, rng);
    const auto dr = drift(g, phi, 0.8);
    const double h = 1e-6;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (int k = 0; k < 2; ++k) {
        Vec a = g.pos(i), b = g.pos(i);
        a[k] += h;
        b[k] -= h;
        const double dU = (total_energy(g.with_moved(i, box.wrap(a)), phi) -
                           total_energy(g.with_moved(i, box.wrap(b)), phi)) / (2 * h);
        CHECK(dr[i][k] == doctest::Approx(-0.4 * dU).epsilon(1e-6).scale(1));
      }
  }

  TEST_CASE("free particles diffuse with variance c t per axis") {
    Rng rng(2);
    const Box box(2, 10.0);
    const auto g = random_configuration(box, 2000, rng);
    SDEConfig s;
    s.c = 0.3;
    s.T = 0.5;
    s.dt = 0.01;
    s.seed = 4;
    const auto res = em_run(g, s, make_potential("zero"));
    CHECK(res.steps == 50);
    CHECK(res.dt_used == doctest::Approx(0.01));
    std::vector<double> dx;
    for (const auto& d : res.displacement) {
      dx.push_back(d[0]);
      dx.push_back(d[1]);
    }
    const auto v = variance_with_error(dx);
    CHECK(std::fabs(v.variance - 0.15) < 4.0 * v.stderr_);
    CHECK(std::fabs(mean_iid(dx).mean) < 4.0 * mean_iid(dx).stderr_);
  }

  TEST_CASE("determinism, observation grid and step rounding") {
    Rng rng(3);
    const Box box(2, 5.0);
    const auto g = random_configuration(box, 20, rng);
    SDEConfig s;
    s.c = 0.5;
    s.T = 0.25;
    s.dt = 0.003;
    s.observe_dt = 0.05;
    s.observables = make_cylinder("sine_pair", box).inner();
    const auto phi = make_potential("softcore", {{"beta", 2.0}});
    const auto a = em_run(g, s, phi), b = em_run(g, s, phi);
    CHECK(a.steps == 84);
    CHECK(a.dt_used == doctest::Approx(0.25 / 84));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(a.final_state.pos(i) == b.final_state.pos(i));
    REQUIRE(a.observations.size() == 6);
    CHECK(a.observations[0].obs.size() == 2);
    for (std::size_t k = 1; k < 6; ++k) CHECK(a.observations[k].time == doctest::Approx(0.05 * k).epsilon(0.07));
  }

  TEST_CASE("guard and validation") {
    const Box box(2, 5.0);
    const Configuration g(box, std::vector<Vec>{{1, 1, 0}, {3, 3, 0}});
    SDEConfig s;
    s.c = 50.0;
    s.dt = 1.0;
    s.T = 20.0;
    CHECK_THROWS_AS(em_run(g, s, make_potential("zero")), NumericalGuard);
    s.dt = -1.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
  }

  TEST_CASE("both representations of the gradient form agree") {
    GibbsParams p;
    SampleOptions o;
    o.n = 2000;
    o.burn_in = 500;
    o.thin = 40;
    o.seed = 6;
    const auto e = sample(p, o);
    const auto F = make_cylinder("sine_pair", p.box), G = make_cylinder("quadratic_pair", p.box);
    const auto a = dirichlet_form_dif(F, G, e, 0.7);
    const auto b = dirichlet_form_dif_gnz(F, G, e, 0.7, p.z, p.phi, 60);
    const double se = std::hypot(a.est.stderr_, b.est.stderr_);
    CHECK(std::fabs(a.est.mean - b.est.mean) < 4.0 * se);
    CHECK(a.per_sample.size() == e.samples.size());
  }

  TEST_CASE("trapezoid nodes cover the supports") {
    const Box box(2, 5.0);
    const auto F = make_cylinder("linear_bump", box);
    const auto nodes = trapezoid_nodes(box, 50, F, F);
    // Support is the disk of radius 1.5: about pi 1.5^2 / 0.1^2 grid nodes.
    CHECK(static_cast<double>(nodes.size()) == doctest::Approx(3.14159 * 225).epsilon(0.05));
    for (const auto& x : nodes) CHECK(F.distance_to_support(x) <= 1e-12);
    CHECK(trapezoid_nodes(box, 50, F, F, 0.5).size() > nodes.size());
  }
}
