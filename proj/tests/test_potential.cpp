#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "kdl/errors.hpp"
#include "kdl/potential.hpp"
#include "kdl/rng.hpp"

using namespace kdl;

namespace {

double bump_closed(double beta, double R, double r) {
  return r >= R ? 0.0 : beta * std::exp(1.0 - 1.0 / (1.0 - r * r / (R * R)));
}

// Trapezoid rule in r on [0, R], many nodes.
double radial_trapezoid(const std::function<double(double)>& f, int dim, double R, int n = 200000) {
  const double h = R / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    s += w * f(r) * std::pow(r, dim - 1);
  }
  const double area = dim == 1 ? 2.0 : (dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi);
  return area * s * h;
}

}  // namespace

TEST_SUITE("potential") {
  TEST_CASE("catalog values match closed forms") {
    const auto b = make_potential("bump", {{"beta", 1.5}, {"range", 1.2}});
    const auto sc = make_potential("softcore", {{"beta", 2.0}});
    const auto ss = make_potential("soft_sphere", {{"beta", 1.0}, {"sigma", 0.3}});
    for (double r : {0.0, 0.2, 0.7, 1.0, 1.19, 1.3}) {
      CHECK(b.radial(r) == doctest::Approx(bump_closed(1.5, 1.2, r)));
      const double q = 1.0 - r * r;
      CHECK(sc.radial(r) == doctest::Approx(q > 0 ? 2.0 * q * q * q : 0.0));
      if (r > 0) CHECK(ss.radial(r) == doctest::Approx(q > 0 ? std::pow(0.3 / r, 12) * q * q * q : 0.0));
    }
    CHECK(std::isinf(ss.radial(0.0)));
    CHECK(ss.singular_at_zero());
    CHECK(make_potential("zero").is_zero());
    CHECK(make_potential("bump", {{"beta", -0.5}}).lower_bound() == doctest::Approx(0.5));
  }

  TEST_CASE("bad parameters are rejected") {
    CHECK_THROWS_AS(make_potential("bump", {{"betta", 1.0}}), ValidationError);
    CHECK_THROWS_AS(make_potential("bump", {{"range", -1.0}}), ValidationError);
    CHECK_THROWS_AS(make_potential("soft_sphere", {{"sigma", 0.0}}), ValidationError);
    CHECK_THROWS_AS(make_potential("lennard_jones"), ValidationError);
  }

  TEST_CASE("derivatives match finite differences") {
    const double h = 1e-6;
    for (const char* name : {"bump", "softcore", "soft_sphere"}) {
      const auto phi = make_potential(name);
      for (double r = 0.15; r < 0.99; r += 0.0731) {
        CHECK(phi.radial_d1(r) ==
              doctest::Approx((phi.radial(r + h) - phi.radial(r - h)) / (2 * h)).epsilon(1e-6).scale(1));
        CHECK(phi.radial_d2(r) ==
              doctest::Approx((phi.radial_d1(r + h) - phi.radial_d1(r - h)) / (2 * h)).epsilon(1e-5).scale(1));
      }
      Rng rng(2);
      for (int t = 0; t < 30; ++t) {
        Vec x{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
        if (norm(x) < 0.15) continue;
        const auto g = phi.grad(x);
        const auto H = phi.hess(x, 3);
        for (int k = 0; k < 3; ++k) {
          Vec a = x, b = x;
          a[k] += h;
          b[k] -= h;
          CHECK(g[k] == doctest::Approx((phi.value(a) - phi.value(b)) / (2 * h)).epsilon(1e-5).scale(1));
          const auto ga = phi.grad(a), gb = phi.grad(b);
          for (int l = 0; l < 3; ++l)
            CHECK(H[k][l] == doctest::Approx((ga[l] - gb[l]) / (2 * h)).epsilon(1e-4).scale(1));
        }
      }
    }
  }

  TEST_CASE("energies agree with a brute-force pair sum") {
    Rng rng(3);
    const Box box(2, 5.0);
    const auto phi = make_potential("bump", {{"beta", 1.5}});
    for (int t = 0; t < 20; ++t) {
      std::vector<Vec> pts(30);
      for (auto& p : pts) p = Vec{rng.uniform(0, 5), rng.uniform(0, 5), 0};
      const Configuration g(box, pts);
      double U = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
          U += bump_closed(1.5, 1.0, box.min_image_dist(pts[i], pts[j]));
      CHECK(total_energy(g, phi) == doctest::Approx(U).epsilon(1e-12));
      const Vec x{rng.uniform(0, 5), rng.uniform(0, 5), 0};
      double E = 0.0;
      for (const auto& p : pts) E += bump_closed(1.5, 1.0, box.min_image_dist(x, p));
      CHECK(relative_energy(x, g, phi) == doctest::Approx(E).epsilon(1e-12));
      const CellList cells(box, 1.0, pts);
      const std::size_t i = rng.below(pts.size());
      const double Ei = relative_energy(pts[i], std::span<const Vec>(pts), phi, box, i);
      CHECK(relative_energy(pts[i], cells, phi, i) == doctest::Approx(Ei).epsilon(1e-12));
      CHECK(relative_energy(pts[i], g.without(i), phi) == doctest::Approx(Ei).epsilon(1e-12));
      // Energy splits into a relative part and the rest.
      CHECK(total_energy(g, phi) == doctest::Approx(total_energy(g.without(i), phi) + Ei).epsilon(1e-12));
    }
    const Configuration g(box, std::vector<Vec>{{1, 1, 0}});
    CHECK_THROWS_AS(relative_energy(Vec{1, 1, 0}, g, phi), ValidationError);
  }

  TEST_CASE("integrability matches an independent radial integral") {
    for (int d = 1; d <= 3; ++d)
      for (const char* name : {"bump", "softcore", "soft_sphere"}) {
        const auto phi = make_potential(name);
        const auto rep = verify_conditions(phi, d, 0.25, 40);
        const double want = radial_trapezoid(
            [&](double r) {
              const double v = phi.radial(r);
              return std::fabs((std::isfinite(v) ? std::exp(-v) : 0.0) - 1.0);
            },
            d, phi.range());
        CHECK(rep.integrability.value == doctest::Approx(want).epsilon(1e-6));
        CHECK(rep.integrability.error < 1e-8);
        CHECK(rep.ball_samples >= (d == 1 ? 64 : 4096));
        CHECK(rep.gdelta.value >= rep.weighted_grad_inside.value * 0.999);
        CHECK(rep.exp_half_sup >= 1.0);
        CHECK(rep.weighted_grad_outside_sup == 0.0);
      }
  }

  TEST_CASE("superstability spot check for a positive potential") {
    const auto phi = make_potential("softcore", {{"beta", 2.0}});
    const auto fitted = verify_conditions(phi, 2, 0.2, 60);
    CHECK(fitted.ss_fitted);
    CHECK(fitted.ss_A > 0.0);
    ConditionsOptions o;
    o.ss_A = 0.0;
    o.ss_B = 0.0;
    const auto fixed = verify_conditions(phi, 2, 0.2, 60, o);
    CHECK_FALSE(fixed.ss_fitted);
    CHECK(fixed.ss_margin >= 0.0);  // U >= 0 for a positive potential
    const auto zero = verify_conditions(make_potential("zero"), 2, 0.2, 10);
    CHECK(zero.integrability.value == 0.0);
    CHECK(zero.gdelta.value == 0.0);
  }
}
