#include "kdl/kawasaki.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "kdl/errors.hpp"
#include "kdl/quadrature.hpp"
#include "kdl/rng.hpp"

namespace kdl {

JumpProfile::JumpProfile(std::string name, int dim, double r_a, double height, Shape shape, double eps,
                         std::map<std::string, double> params)
    : name_(std::move(name)),
      params_(std::move(params)),
      dim_(dim),
      r_a_(r_a),
      height_(height),
      shape_(std::move(shape)),
      eps_(eps) {
  if (dim < 1 || dim > kMaxDim) throw ValidationError("jump profile: dim must be in 1..3");
  if (!(r_a > 0.0) || !std::isfinite(r_a)) throw ValidationError("jump profile: radius must be > 0");
  if (!(height > 0.0) || !std::isfinite(height)) throw ValidationError("jump profile: height must be > 0");
  if (!(eps > 0.0) || eps > 1.0) throw ValidationError("jump profile: eps must be in (0, 1]");
  compute_moments();
}

double JumpProfile::radial(double rho) const {
  if (rho > r_a_) return 0.0;
  return height_ * shape_(rho / r_a_);
}

double JumpProfile::scaled(const Vec& x) const {
  return radial(norm(x) / eps_) / std::pow(eps_, dim_);
}

void JumpProfile::compute_moments() {
  const double S = sphere_area(dim_);
  auto moment = [&](int power, int panels) {
    return S * integrate([&](double r) { return radial(r) * std::pow(r, power); }, 0.0, r_a_, panels, 20);
  };
  const double m_fine = moment(dim_ - 1, 64), m_coarse = moment(dim_ - 1, 32);
  const double c_fine = moment(dim_ + 1, 64) / dim_, c_coarse = moment(dim_ + 1, 32) / dim_;
  m0_ = m_fine;
  c_ = c_fine;
  m0_err_ = std::fabs(m_fine - m_coarse);
  c_err_ = std::fabs(c_fine - c_coarse);

  // The scaled density must keep the mass and scale the second moment by eps^2.
  const double e = eps_;
  const double ed = std::pow(e, dim_);
  auto scaled_moment = [&](int power) {
    return S * integrate([&](double r) { return radial(r / e) / ed * std::pow(r, power); }, 0.0, e * r_a_, 64, 20);
  };
  const double ms = scaled_moment(dim_ - 1);
  const double cs = scaled_moment(dim_ + 1) / dim_;
  if (std::fabs(ms - m0_) > 1e-10 * m0_ || std::fabs(cs - e * e * c_) > 1e-10 * e * e * c_)
    throw NumericalGuard("jump profile: scaled moments inconsistent with the base moments");
}

JumpProfile JumpProfile::with_eps(double eps) const {
  return JumpProfile(name_, dim_, r_a_, height_, shape_, eps, params_);
}

JumpProfile JumpProfile::rescaled_base(double s) const {
  if (!(s > 0.0)) throw ValidationError("rescaled_base: factor must be > 0");
  auto params = params_;
  params["radius"] = s * r_a_;
  params["height"] = height_ / std::pow(s, dim_);
  return JumpProfile(name_, dim_, s * r_a_, height_ / std::pow(s, dim_), shape_, eps_, std::move(params));
}

std::vector<std::string> jump_catalog_names() { return {"indicator", "bump", "parabolic"}; }

JumpProfile make_jump(const std::string& name, int dim, const std::map<std::string, double>& params, double eps) {
  for (const auto& [k, v] : params)
    if (k != "radius" && k != "height") throw ValidationError("jump '" + name + "': unknown parameter '" + k + "'");
  const double r_a = params.count("radius") ? params.at("radius") : 1.0;
  const double height = params.count("height") ? params.at("height") : 1.0;
  const std::map<std::string, double> p{{"radius", r_a}, {"height", height}};
  if (name == "indicator") return JumpProfile(name, dim, r_a, height, [](double t) { return t <= 1.0 ? 1.0 : 0.0; }, eps, p);
  if (name == "bump")
    return JumpProfile(name, dim, r_a, height,
                       [](double t) { return t >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - t * t)); }, eps, p);
  if (name == "parabolic")
    return JumpProfile(name, dim, r_a, height, [](double t) { return t >= 1.0 ? 0.0 : 1.0 - t * t; }, eps, p);
  throw ValidationError("unknown jump profile '" + name + "'");
}

// ---------------------------------------------------------------------------

namespace {

double rate_exponent(double Ex, double Ey, double s) {
  if (s == 0.5) return 0.5 * Ex - 0.5 * Ey;
  return (1.0 - s) * Ex - s * Ey;
}

}  // namespace

double jump_rate(const Configuration& gamma, std::size_t index, const Vec& y, const JumpProfile& prof,
                 const PairPotential& phi, double s) {
  if (index >= gamma.size()) throw ValidationError("jump_rate: x must be a point of gamma");
  if (s < 0.0 || s > 1.0) throw ValidationError("jump_rate: s must be in [0, 1]");
  const Box& box = gamma.box();
  const Vec& x = gamma.pos(index);
  const std::size_t hit = gamma.find(y);
  if (hit != Configuration::npos && hit != index) throw ValidationError("jump_rate: y is a point of gamma \\ x");
  const double a = prof.scaled(box.min_image_diff(x, y));
  if (a == 0.0) return 0.0;
  const auto pts = gamma.positions();
  const double Ex = relative_energy(x, pts, phi, box, index);
  const double Ey = hit == index ? Ex : relative_energy(y, pts, phi, box, index);
  const double expo = rate_exponent(Ex, Ey, s);
  if (expo == std::numeric_limits<double>::infinity() || std::isnan(expo))
    throw NumericalGuard("jump_rate: infinite rate exponent");
  return a * std::exp(expo);
}

double detailed_balance_residual(const Configuration& gamma, std::size_t index, const Vec& y,
                                 const JumpProfile& prof, const PairPotential& phi, double z, double s) {
  const Configuration moved = gamma.with_moved(index, y);
  const double n = static_cast<double>(gamma.size());
  const double pi_fwd = std::pow(z, n) * std::exp(-total_energy(gamma, phi));
  const double pi_bwd = std::pow(z, n) * std::exp(-total_energy(moved, phi));
  const double fwd = pi_fwd * jump_rate(gamma, index, y, prof, phi, s);
  const double bwd = pi_bwd * jump_rate(moved, index, gamma.pos(index), prof, phi, s);
  const double scale = std::max({std::fabs(fwd), std::fabs(bwd), std::numeric_limits<double>::min()});
  return std::fabs(fwd - bwd) / scale;
}

// ---------------------------------------------------------------------------
// Thinning simulation

namespace {

struct Clock {
  double time;
  std::size_t index;
  std::uint64_t version;
  bool operator>(const Clock& o) const { return time != o.time ? time > o.time : index > o.index; }
};

}  // namespace

KawasakiResult simulate(const Configuration& start, const JumpProfile& prof, const PairPotential& phi,
                        const KawasakiOptions& opts) {
  const Box& box = start.box();
  if (prof.dim() != box.dim()) throw ValidationError("simulate: profile and box dimensions differ");
  if (prof.reach() > 0.5 * box.side()) throw ValidationError("simulate: eps * r_a exceeds L/2");
  if (phi.range() > 0.5 * box.side()) throw ValidationError("simulate: potential range exceeds L/2");
  if (!(opts.T >= 0.0)) throw ValidationError("simulate: horizon T must be >= 0");
  if (!(opts.time_factor > 0.0)) throw ValidationError("simulate: time_factor must be > 0");
  if (opts.s < 0.0 || opts.s > 1.0) throw ValidationError("simulate: s must be in [0, 1]");

  const double s = opts.s;
  const double eps = prof.eps();
  const double speed = opts.time_factor * (opts.time_scaling ? 1.0 / (eps * eps) : 1.0);
  const double base_rate = prof.mass() * speed;
  const double B = phi.lower_bound();
  const double R = phi.range();
  const double reach = prof.reach();
  const double local = std::min(R + reach, 0.5 * box.side());
  // Radius within which a move can change another particle's rate bound.
  const double touch = B > 0.0 ? local : R;
  const int dim = box.dim();

  std::vector<Vec> pts = start.positions();
  std::vector<std::uint64_t> ids(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) ids[i] = start.id(i);
  const std::size_t n = pts.size();
  CellList cells(box, std::max(local, 1e-12), pts);

  Rng rng(opts.seed, opts.stream);
  KawasakiResult res;
  res.displacement.assign(n, Vec{});

  std::vector<double> energy(n, 0.0), bloc(n, 0.0);
  std::vector<std::uint64_t> version(n, 0);
  std::priority_queue<Clock, std::vector<Clock>, std::greater<Clock>> queue;

  auto refresh = [&](std::size_t i, double now) {
    double E = 0.0;
    std::size_t count = 0;
    if (touch > 0.0) {
      cells.for_each_within(pts[i], touch, i, [&](std::size_t, const Vec&, double r2) {
        ++count;
        if (!phi.is_zero() && r2 <= R * R) E += phi.radial(std::sqrt(r2));
      });
    }
    energy[i] = E;
    bloc[i] = B * static_cast<double>(count + 1);
    const double expo = rate_exponent(E, -bloc[i], s);
    const double bound = base_rate * std::exp(expo);
    if (!std::isfinite(bound)) throw NumericalGuard("simulate: rate bound overflow");
    ++version[i];
    if (bound > 0.0) queue.push({now + rng.exponential(bound), i, version[i]});
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i, 0.0);

  double next_obs = 0.0;
  auto observe_until = [&](double t) {
    while (next_obs <= t && next_obs <= opts.T) {
      res.observations.push_back(observe(next_obs, pts, box, opts.window, opts.observables));
      if (opts.observe_dt > 0.0) {
        next_obs += opts.observe_dt;
      } else {
        next_obs = next_obs < opts.T ? opts.T : std::numeric_limits<double>::infinity();
      }
    }
  };

  const double sup = prof.sup_norm();
  const double r_a = prof.r_a();
  double now = 0.0;
  while (!queue.empty()) {
    const Clock c = queue.top();
    if (c.time > opts.T) break;
    queue.pop();
    if (c.version != version[c.index]) continue;
    observe_until(std::nextafter(c.time, -INFINITY));
    now = c.time;
    const std::size_t i = c.index;
    ++res.proposals;
    // Displacement from a / m0 by rejection from the cube.
    Vec h{};
    for (;;) {
      for (int k = 0; k < dim; ++k) h[k] = rng.uniform(-r_a, r_a);
      if (rng.uniform() * sup < prof.base(h)) break;
    }
    const Vec y = box.wrap(pts[i] + eps * h);
    bool occupied = false;
    double Ey = 0.0;
    cells.for_each_within(y, std::max(R, 0.0), i, [&](std::size_t, const Vec&, double r2) {
      if (r2 == 0.0) occupied = true;
      else if (!phi.is_zero()) Ey += phi.radial(std::sqrt(r2));
    });
    bool accept = false;
    if (!occupied) {
      const double alpha = s == 0.5 ? std::exp(-0.5 * Ey - 0.5 * bloc[i]) : std::exp(-s * Ey - s * bloc[i]);
      if (alpha > 1.0 + 1e-9) throw NumericalGuard("simulate: thinning acceptance exceeds 1");
      accept = rng.uniform() < alpha;
    }
    if (!accept) {
      refresh(i, now);
      continue;
    }
    const Vec from = pts[i];
    res.displacement[i] += box.min_image_diff(y, from);
    pts[i] = y;
    cells.move(i, y);
    ++res.accepted;
    if (opts.log_events) res.events.push_back({now, ids[i], from, y});
    // Clocks of the mover and of every particle whose local energy or bound changed.
    std::vector<std::size_t> touched{i};
    if (touch > 0.0) {
      for (const Vec& centre : {from, y})
        cells.for_each_within(centre, touch, i, [&](std::size_t j, const Vec&, double) { touched.push_back(j); });
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (std::size_t j : touched) refresh(j, now);
    if (opts.max_events > 0 && res.accepted >= opts.max_events) break;
  }
  const bool stopped_early = opts.max_events > 0 && res.accepted >= opts.max_events;
  res.end_time = stopped_early ? now : opts.T;
  if (!stopped_early) observe_until(opts.T);
  std::vector<Particle> parts(n);
  for (std::size_t i = 0; i < n; ++i) parts[i] = {ids[i], pts[i]};
  res.final_state = Configuration(box, std::move(parts));
  return res;
}

}  // namespace kdl
