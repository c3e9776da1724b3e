#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "kdl/errors.hpp"
#include "kdl/kawasaki.hpp"
#include "kdl/rng.hpp"
#include "kdl/stats.hpp"

using namespace kdl;

namespace {

constexpr double pi = std::numbers::pi;

// Radial moment \int a(|h|) |h|^p dh by the trapezoid rule in the radius.
double radial_moment(const JumpProfile& a, int power, int n = 100000) {
  const int d = a.dim();
  const double R = a.r_a(), h = R / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = i * h;
    s += ((i == 0 || i == n) ? 0.5 : 1.0) * a.radial(r) * std::pow(r, d - 1 + power);
  }
  const double area = d == 1 ? 2.0 : (d == 2 ? 2.0 * pi : 4.0 * pi);
  return area * s * h;
}

Configuration random_configuration(const Box& box, std::size_t n, Rng& rng) {
  std::vector<Vec> pts(n);
  for (auto& p : pts)
    for (int k = 0; k < box.dim(); ++k) p[k] = rng.uniform(0.0, box.side());
  return Configuration(box, pts);
}

}  // namespace

TEST_SUITE("kawasaki") {
  TEST_CASE("profile moments against closed forms") {
    CHECK(make_jump("indicator", 1).mass() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(make_jump("indicator", 1).second_moment() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(make_jump("indicator", 2).mass() == doctest::Approx(pi).epsilon(1e-12));
    CHECK(make_jump("indicator", 2).second_moment() == doctest::Approx(pi / 4.0).epsilon(1e-12));
    CHECK(make_jump("indicator", 3).second_moment() == doctest::Approx(4.0 * pi / 15.0).epsilon(1e-12));
    CHECK(make_jump("parabolic", 1).mass() == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(make_jump("parabolic", 1).second_moment() == doctest::Approx(4.0 / 15.0).epsilon(1e-12));
    CHECK(make_jump("parabolic", 2).mass() == doctest::Approx(pi / 2.0).epsilon(1e-12));
    CHECK(make_jump("parabolic", 2).second_moment() == doctest::Approx(pi / 12.0).epsilon(1e-12));
    for (int d = 1; d <= 3; ++d) {
      const auto b = make_jump("bump", d, {{"radius", 1.3}, {"height", 2.0}});
      CHECK(b.mass() == doctest::Approx(radial_moment(b, 0)).epsilon(1e-9));
      CHECK(b.second_moment() == doctest::Approx(radial_moment(b, 2) / d).epsilon(1e-9));
      CHECK(b.second_moment_error() < 1e-12);
    }
  }

  TEST_CASE("scaling keeps the mass and rescaling multiplies c by s^2") {
    for (int d = 1; d <= 3; ++d) {
      const auto a = make_jump("bump", d, {}, 0.25);
      CHECK(a.reach() == doctest::Approx(0.25));
      double m = 0.0;
      const int n = 200000;
      const double h = 0.25 / n;
      const double area = d == 1 ? 2.0 : (d == 2 ? 2.0 * pi : 4.0 * pi);
      for (int i = 0; i < n; ++i) m += (i == 0 ? 0.5 : 1.0) * a.scaled(Vec{i * h, 0, 0}) * std::pow(i * h, d - 1);
      CHECK(area * m * h == doctest::Approx(a.mass()).epsilon(1e-8));
      const auto r = a.rescaled_base(0.4);
      CHECK(r.mass() == doctest::Approx(a.mass()).epsilon(1e-12));
      CHECK(r.second_moment() == doctest::Approx(0.16 * a.second_moment()).epsilon(1e-12));
      CHECK(r.eps() == a.eps());
      CHECK(a.with_eps(0.5).second_moment() == a.second_moment());
    }
    CHECK_THROWS_AS(make_jump("bump", 2, {}, 1.5), ValidationError);
    CHECK_THROWS_AS(make_jump("bump", 2, {{"width", 1.0}}), ValidationError);
    CHECK_THROWS_AS(make_jump("triangle", 2), ValidationError);
  }

  TEST_CASE("detailed balance for every s") {
    Rng rng(1);
    const Box box(2, 5.0);
    const auto prof = make_jump("bump", 2, {}, 0.5);
    const auto phi = make_potential("bump", {{"beta", 1.5}});
    double worst_half = 0.0, worst_other = 0.0;
    for (int t = 0; t < 300; ++t) {
      const auto g = random_configuration(box, 12, rng);
      const std::size_t i = rng.below(g.size());
      const Vec y = box.wrap(g.pos(i) + Vec{rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35), 0});
      worst_half = std::max(worst_half, detailed_balance_residual(g, i, y, prof, phi, 2.0));
      worst_other = std::max(worst_other, detailed_balance_residual(g, i, y, prof, phi, 2.0, 0.3));
    }
    CHECK(worst_half < 1e-12);
    CHECK(worst_other < 1e-12);  // pi c is proportional to exp[-s (E_x + E_y)]
    const Configuration g(box, std::vector<Vec>{{1, 1, 0}, {1.2, 1, 0}});
    CHECK_THROWS_AS(jump_rate(g, 0, Vec{1.2, 1, 0}, prof, phi), ValidationError);
    CHECK(jump_rate(g, 0, Vec{3.0, 3.0, 0}, prof, phi) == 0.0);  // outside the jump support
  }

  TEST_CASE("first jump time of a thinned process is exponential with the exact total rate") {
    const Box box(2, 5.0);
    const auto prof = make_jump("indicator", 2, {}, 0.5);
    const auto phi = make_potential("bump", {{"beta", 1.5}});
    const Vec x0{2.2, 2.5, 0}, x1{2.8, 2.5, 0};
    const Configuration start(box, std::vector<Vec>{x0, x1});
    // Oracle: exact rate of one particle by a fine polar midpoint rule over the jump disk.
    const double Ex = phi.radial(0.6);
    double lam = 0.0;
    const int nr = 600, nt = 600;
    for (int a = 0; a < nr; ++a) {
      const double r = (a + 0.5) * 0.5 / nr;
      for (int b = 0; b < nt; ++b) {
        const double t = (b + 0.5) * 2.0 * pi / nt;
        const double dx = -0.6 + r * std::cos(t), dy = r * std::sin(t);
        lam += r * std::exp(0.5 * Ex - 0.5 * phi.radial(std::hypot(dx, dy)));
      }
    }
    lam *= (0.5 / nr) * (2.0 * pi / nt) / 0.25;  // a_eps = eps^{-2} on the disk of radius eps
    std::vector<double> times;
    for (int run = 0; run < 3000; ++run) {
      KawasakiOptions o;
      o.T = 1e6;
      o.time_scaling = false;
      o.max_events = 1;
      o.seed = 77;
      o.stream = static_cast<std::uint64_t>(run);
      const auto res = simulate(start, prof, phi, o);
      REQUIRE(res.accepted == 1);
      times.push_back(res.end_time);
    }
    const double total = 2.0 * lam;
    const auto ks = ks_test(times, [total](double t) { return t <= 0 ? 0.0 : 1.0 - std::exp(-total * t); });
    CHECK(ks.p_value > 1e-3);
    // A 5% rate error would be visible.
    const auto off = ks_test(times, [total](double t) { return t <= 0 ? 0.0 : 1.0 - std::exp(-1.05 * total * t); });
    CHECK(off.p_value < ks.p_value);
  }

  TEST_CASE("conservation, determinism and the time-factor rescaling") {
    Rng rng(3);
    const Box box(2, 5.0);
    const auto prof = make_jump("bump", 2, {}, 0.2);
    const auto phi = make_potential("softcore", {{"beta", 2.0}});
    const auto start = random_configuration(box, 20, rng);
    KawasakiOptions o;
    o.T = 0.2;
    o.log_events = true;
    o.observe_dt = 0.05;
    o.seed = 5;
    const auto a = simulate(start, prof, phi, o), b = simulate(start, prof, phi, o);
    CHECK(a.final_state.size() == 20);
    CHECK(a.accepted > 50);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t k = 0; k < a.events.size(); ++k) {
      CHECK(a.events[k].time == b.events[k].time);
      CHECK(a.events[k].to == b.events[k].to);
    }
    REQUIRE(a.observations.size() == 5);
    CHECK(a.observations[4].time == doctest::Approx(0.2));
    // T/2 at twice the speed replays the same jumps at half the times.
    auto fast = o;
    fast.time_factor = 2.0;
    fast.T = 0.1;
    fast.observe_dt = 0.025;
    const auto c = simulate(start, prof, phi, fast);
    REQUIRE(c.events.size() == a.events.size());
    for (std::size_t k = 0; k < a.events.size(); ++k) {
      CHECK(c.events[k].time == doctest::Approx(0.5 * a.events[k].time).epsilon(1e-12));
      CHECK(c.events[k].to == a.events[k].to);
    }
    // Unwrapped displacement agrees with the event log.
    Vec net{};
    for (const auto& ev : a.events)
      if (ev.particle == start.id(0)) net += box.min_image_diff(ev.to, ev.from);
    CHECK(norm(net - a.displacement[0]) < 1e-12);
    // Jumps stay within the scaled support.
    for (const auto& ev : a.events) CHECK(box.min_image_dist(ev.to, ev.from) <= prof.reach() * (1 + 1e-12));
  }

  TEST_CASE("input validation") {
    const Box box(2, 1.0);
    const Configuration g(box, std::vector<Vec>{{0.5, 0.5, 0}});
    KawasakiOptions o;
    CHECK_THROWS_AS(simulate(g, make_jump("bump", 2, {}, 0.6), make_potential("zero"), o), ValidationError);
    CHECK_THROWS_AS(simulate(g, make_jump("bump", 3, {}, 0.1), make_potential("zero"), o), ValidationError);
    o.s = 1.5;
    CHECK_THROWS_AS(simulate(g, make_jump("bump", 2, {}, 0.1), make_potential("zero"), o), ValidationError);
  }
}
