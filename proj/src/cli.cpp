#include "kdl/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "kdl/diffusion.hpp"
#include "kdl/errors.hpp"
#include "kdl/genlab.hpp"
#include "kdl/gibbs.hpp"
#include "kdl/io.hpp"
#include "kdl/kawasaki.hpp"
#include "kdl/kcalculus.hpp"
#include "kdl/potential.hpp"

namespace kdl {

namespace {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing helpers

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ValidationError("config: unknown key '" + where + it.key() + "'");
  }
}

const json& object_at(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_object()) throw ValidationError("config: '" + where + key + "' must be an object");
  return v;
}

double number(const json& obj, const char* key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError("config: '" + where + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t count(const json& obj, const char* key, const std::string& where, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ValidationError("config: '" + where + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

bool boolean(const json& obj, const char* key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ValidationError("config: '" + where + key + "' must be true or false");
  return v.get<bool>();
}

std::string text(const json& obj, const char* key, const std::string& where, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ValidationError("config: '" + where + key + "' must be a string");
  return v.get<std::string>();
}

std::map<std::string, double> param_map(const json& obj, const char* key, const std::string& where) {
  std::map<std::string, double> out;
  if (!obj.contains(key)) return out;
  const json& v = object_at(obj, key, where);
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (!it.value().is_number())
      throw ValidationError("config: '" + where + key + "." + it.key() + "' must be a number");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  const std::size_t nt = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (nt == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex mu;
  for (std::size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&]() {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  if (dim < 1 || dim > 3) throw ValidationError("config: box.dim must be 1, 2 or 3");
  if (!(side > 0.0) || !std::isfinite(side)) throw ValidationError("config: box.side must be > 0");
  const auto phi = make_potential(potential, potential_params);
  if (phi.range() > 0.5 * side) throw ValidationError("config: potential range exceeds L/2 (box.side / 2)");
  if (!(z > 0.0)) throw ValidationError("config: z must be > 0");
  auto check_eps = [&](double e, const std::string& key) {
    if (!(e > 0.0) || e > 1.0) throw ValidationError("config: " + key + " must be in (0, 1]");
    const auto prof = make_jump(jump, dim, jump_params, e);
    if (prof.reach() > 0.5 * side)
      throw ValidationError("config: " + key + " * r_a exceeds L/2 (eps * r_a <= box.side / 2 required)");
  };
  check_eps(eps, "jump.eps");
  for (double e : eps_grid) check_eps(e, "jump.eps_grid");
  if (!(T >= 0.0)) throw ValidationError("config: dynamics.T must be >= 0");
  if (!(dt > 0.0)) throw ValidationError("config: dynamics.dt must be > 0");
  if (s < 0.0 || s > 1.0) throw ValidationError("config: dynamics.s must be in [0, 1]");
  if (observe_dt < 0.0) throw ValidationError("config: dynamics.observe_dt must be >= 0");
  if (replicas < 1) throw ValidationError("config: dynamics.replicas must be >= 1");
  if (n < 1) throw ValidationError("config: sampler.n must be >= 1");
  if (thin < 1) throw ValidationError("config: sampler.thin must be >= 1");
  if (chains < 1) throw ValidationError("config: sampler.chains must be >= 1");
  if (nodes_per_axis < 8) throw ValidationError("config: generator.nodes_per_axis must be >= 8");
  const auto names = cylinder_catalog_names();
  for (const auto& f : functions)
    if (std::find(names.begin(), names.end(), f) == names.end())
      throw ValidationError("config: generator.functions: unknown cylinder function '" + f + "'");
  if (threads < 1) throw ValidationError("config: threads must be >= 1");
}

RunConfig parse_config_text(const std::string& src) {
  // Duplicate keys are caught while parsing: one key set per open object.
  std::vector<std::set<std::string>> open;
  std::vector<std::string> path;
  json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& parsed) {
    switch (ev) {
      case json::parse_event_t::object_start: open.emplace_back(); break;
      case json::parse_event_t::object_end: open.pop_back(); break;
      case json::parse_event_t::key: {
        const auto key = parsed.get<std::string>();
        if (!open.back().insert(key).second) throw ValidationError("config: duplicate key '" + key + "'");
        break;
      }
      default: break;
    }
    return true;
  };
  json j;
  try {
    j = json::parse(src, cb);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  reject_unknown(j, "", {"box", "potential", "z", "jump", "dynamics", "sampler", "generator", "seed", "output",
                         "threads"});
  RunConfig c;
  if (j.contains("box")) {
    const auto& b = object_at(j, "box", "");
    reject_unknown(b, "box.", {"dim", "side"});
    c.dim = static_cast<int>(count(b, "dim", "box.", static_cast<std::uint64_t>(c.dim)));
    c.side = number(b, "side", "box.", c.side);
  }
  if (j.contains("potential")) {
    const auto& p = object_at(j, "potential", "");
    reject_unknown(p, "potential.", {"name", "params"});
    c.potential = text(p, "name", "potential.", c.potential);
    c.potential_params = param_map(p, "params", "potential.");
  }
  c.z = number(j, "z", "", c.z);
  if (j.contains("jump")) {
    const auto& p = object_at(j, "jump", "");
    reject_unknown(p, "jump.", {"name", "params", "eps", "eps_grid"});
    c.jump = text(p, "name", "jump.", c.jump);
    c.jump_params = param_map(p, "params", "jump.");
    c.eps = number(p, "eps", "jump.", c.eps);
    if (p.contains("eps_grid")) {
      const auto& g = p.at("eps_grid");
      if (!g.is_array() || g.empty()) throw ValidationError("config: 'jump.eps_grid' must be a non-empty array");
      c.eps_grid.clear();
      for (const auto& v : g) {
        if (!v.is_number()) throw ValidationError("config: 'jump.eps_grid' entries must be numbers");
        c.eps_grid.push_back(v.get<double>());
      }
    }
  }
  if (j.contains("dynamics")) {
    const auto& d = object_at(j, "dynamics", "");
    reject_unknown(d, "dynamics.", {"T", "dt", "time_scaling", "s", "observe_dt", "log_events", "replicas"});
    c.T = number(d, "T", "dynamics.", c.T);
    c.dt = number(d, "dt", "dynamics.", c.dt);
    c.time_scaling = boolean(d, "time_scaling", "dynamics.", c.time_scaling);
    c.s = number(d, "s", "dynamics.", c.s);
    c.observe_dt = number(d, "observe_dt", "dynamics.", c.observe_dt);
    c.log_events = boolean(d, "log_events", "dynamics.", c.log_events);
    c.replicas = count(d, "replicas", "dynamics.", c.replicas);
  }
  if (j.contains("sampler")) {
    const auto& s = object_at(j, "sampler", "");
    reject_unknown(s, "sampler.", {"n", "burn_in", "thin", "chains"});
    c.n = count(s, "n", "sampler.", c.n);
    c.burn_in = count(s, "burn_in", "sampler.", c.burn_in);
    c.thin = count(s, "thin", "sampler.", c.thin);
    c.chains = count(s, "chains", "sampler.", c.chains);
  }
  if (j.contains("generator")) {
    const auto& g = object_at(j, "generator", "");
    reject_unknown(g, "generator.", {"nodes_per_axis", "functions"});
    c.nodes_per_axis = static_cast<int>(count(g, "nodes_per_axis", "generator.", 32));
    if (g.contains("functions")) {
      const auto& f = g.at("functions");
      if (!f.is_array() || f.empty())
        throw ValidationError("config: 'generator.functions' must be a non-empty array of names");
      c.functions.clear();
      for (const auto& v : f) {
        if (!v.is_string()) throw ValidationError("config: 'generator.functions' entries must be strings");
        c.functions.push_back(v.get<std::string>());
      }
    }
  }
  c.seed = count(j, "seed", "", c.seed);
  c.output = text(j, "output", "", c.output);
  c.threads = count(j, "threads", "", c.threads);
  c.validate();
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["box"] = {{"dim", c.dim}, {"side", c.side}};
  const auto phi = make_potential(c.potential, c.potential_params);
  j["potential"] = {{"name", phi.name()}, {"params", phi.params()}};
  j["z"] = c.z;
  const auto prof = make_jump(c.jump, c.dim, c.jump_params, c.eps);
  j["jump"] = {{"name", c.jump}, {"params", prof.params()}, {"eps", c.eps}, {"eps_grid", c.eps_grid}};
  j["dynamics"] = {{"T", c.T},
                   {"dt", c.dt},
                   {"time_scaling", c.time_scaling},
                   {"s", c.s},
                   {"observe_dt", c.observe_dt},
                   {"log_events", c.log_events},
                   {"replicas", c.replicas}};
  j["sampler"] = {{"n", c.n}, {"burn_in", c.burn_in}, {"thin", c.thin}, {"chains", c.chains}};
  j["generator"] = {{"nodes_per_axis", c.nodes_per_axis}, {"functions", c.functions}};
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["threads"] = c.threads;
  return j;
}

void apply_env_overrides(RunConfig& cfg) {
  auto env = [](const char* name) -> const char* { return std::getenv(name); };
  auto parse_u64 = [](const char* name, const char* v) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long x = std::strtoull(v, &end, 10);
    if (errno != 0 || end == v || *end != '\0' || v[0] == '-')
      throw ValidationError(std::string("environment: ") + name + " must be an unsigned integer");
    return static_cast<std::uint64_t>(x);
  };
  if (const char* v = env("KDL_SEED")) cfg.seed = parse_u64("KDL_SEED", v);
  if (const char* v = env("KDL_THREADS")) cfg.threads = parse_u64("KDL_THREADS", v);
  if (const char* v = env("KDL_OUT")) cfg.output = v;
}

std::string run_id(const RunConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("output");
  j.erase("threads");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return hex64(h);
}

// ---------------------------------------------------------------------------
// Verification suites

namespace {

Configuration random_configuration(const Box& box, std::size_t n, Rng& rng) {
  std::vector<Vec> pts(n);
  for (auto& p : pts)
    for (int k = 0; k < box.dim(); ++k) p[k] = rng.uniform(0.0, box.side());
  return Configuration(box, pts);
}

Configuration spaced_configuration(const Box& box, std::size_t n, double spacing, Rng& rng) {
  Configuration g(box);
  while (g.size() < n) {
    Vec x{};
    for (int k = 0; k < box.dim(); ++k) x[k] = rng.uniform(0.0, box.side());
    if (neighbors_within(g, x, spacing).empty()) g = g.with_added(x);
  }
  return g;
}

CheckRow row(std::string suite, std::string name, double value, double tol, std::uint64_t seed) {
  return {std::move(suite), std::move(name), value, tol, value <= tol, seed};
}

}  // namespace

std::vector<CheckRow> verify_kcalc(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  Rng rng(seed, 0x6b63);
  const Box box(2, 10.0);
  // K and its inverse on random values.
  {
    const auto base = random_configuration(box, 10, rng);
    std::vector<double> v(std::size_t{1} << 10);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    const SubsetFunction G(base, v);
    const auto KKinv = k_transform(k_inverse(G));
    const auto KinvK = k_inverse(k_transform(G));
    double d1 = 0.0, d2 = 0.0;
    for (Mask m = 0; m < v.size(); ++m) {
      d1 = std::max(d1, std::fabs(KKinv[m] - G[m]));
      d2 = std::max(d2, std::fabs(KinvK[m] - G[m]));
    }
    rows.push_back(row("kcalc", "K o K^-1 = id (n=10)", d1, 1e-10, seed));
    rows.push_back(row("kcalc", "K^-1 o K = id (n=10)", d2, 1e-10, seed));
  }
  // Star product is mapped to the pointwise product.
  {
    const auto base = random_configuration(box, 8, rng);
    std::vector<double> a(256), b(256);
    for (auto& x : a) x = rng.uniform(-1.0, 1.0);
    for (auto& x : b) x = rng.uniform(-1.0, 1.0);
    const SubsetFunction G1(base, a), G2(base, b);
    const auto lhs = k_transform(star_convolution(G1, G2));
    const auto k1 = k_transform(G1), k2 = k_transform(G2);
    double dev = 0.0;
    for (Mask m = 0; m < 256; ++m) {
      const double r = k1[m] * k2[m];
      dev = std::max(dev, std::fabs(lhs[m] - r) / std::max(1.0, std::fabs(r)));
    }
    rows.push_back(row("kcalc", "K(G1*G2) = KG1 KG2 (n=8, rel)", dev, 1e-10, seed));
  }
  // Product identities on random smooth functions.
  for (std::size_t n : {6, 10}) {
    const auto base = random_configuration(box, n, rng);
    const double a1 = rng.uniform(-1, 1), a2 = rng.uniform(-1, 1), b1 = rng.uniform(0, 6);
    auto f = [=](const Vec& x) { return 0.4 * std::sin(a1 * x[0] + a2 * x[1] + b1); };
    auto g = [=](const Vec& x) { return std::cos(0.3 * x[0] - a1 * x[1]); };
    auto g1 = [=](const Vec& x) { return 1.0 + 0.1 * x[0] * a2; };
    auto g2 = [=](const Vec& x) { return std::exp(-0.05 * (x[0] + x[1])); };
    const auto rep = product_identity_check(f, g, g1, g2, base, 1e-10);
    const std::string tag = " (n=" + std::to_string(n) + ")";
    rows.push_back(row("kcalc", "KG1 = e^<f,gamma>" + tag, rep.dev_g1, 1e-10, seed));
    rows.push_back(row("kcalc", "KG2 = e^<f,gamma> <g,gamma>" + tag, rep.dev_g2, 1e-10, seed));
    rows.push_back(row("kcalc", "KG3 = e^<f,gamma> sum g1 g2" + tag, rep.dev_g3, 1e-10, seed));
  }
  // Growth bound for zeta >= 1 on points clustered in a few unit cubes.
  {
    double worst = 0.0, outside = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vec> pts;
      for (int i = 0; i < 8; ++i) {
        const double cx = static_cast<double>(1 + rng.below(3));
        const double cy = static_cast<double>(1 + rng.below(2));
        pts.push_back(Vec{cx + rng.uniform(-0.49, 0.49), cy + rng.uniform(-0.49, 0.49), 0.0});
      }
      const Configuration base(box, pts);
      const std::vector<CubeIndex> lambda{{1, 1, 0}, {2, 1, 0}, {1, 2, 0}};
      const double zeta = rng.uniform(1.0, 3.0), tau = rng.uniform(0.0, 2.0), sigma = rng.uniform(0.0, 2.0);
      const double p = rng.uniform(0.05, 0.95);
      const auto rep = kinv_bound_check(zeta, tau, sigma, p, lambda, base);
      worst = std::max(worst, rep.max_ratio);
      outside = std::max(outside, rep.max_outside);
    }
    rows.push_back(row("kcalc", "K^-1 U bound, max ratio (zeta in [1,3])", worst, 1.0 + 1e-10, seed));
    rows.push_back(row("kcalc", "K^-1 U = 0 off Lambda (rel)", outside, 1e-10, seed));
  }
  return rows;
}

std::vector<CheckRow> verify_balance(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  Rng rng(seed, 0x6462);
  const Box box(2, 5.0);
  const auto prof = make_jump("bump", 2, {}, 0.5);
  for (const char* name : {"zero", "bump", "softcore", "soft_sphere"}) {
    const auto phi = make_potential(name, std::string(name) == "zero" ? std::map<std::string, double>{}
                                                                       : std::map<std::string, double>{{"beta", 1.5}});
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      // Minimum spacing keeps total energies small enough that their
      // difference is not lost to cancellation near the singular core.
      const auto g = spaced_configuration(box, 10, 0.25, rng);
      const auto i = static_cast<std::size_t>(rng.below(g.size()));
      const auto rest = g.without(i);
      Vec y{};
      do {
        Vec h{};
        do {
          for (int k = 0; k < 2; ++k) h[k] = rng.uniform(-1.0, 1.0);
        } while (norm(h) >= 0.999);
        y = box.wrap(g.pos(i) + prof.eps() * h);
      } while (!neighbors_within(rest, y, 0.25).empty());
      worst = std::max(worst, detailed_balance_residual(g, i, y, prof, phi, 1.3));
    }
    rows.push_back(row("balance", std::string("detailed balance s=1/2, ") + name + " (1000 draws)", worst, 1e-12, seed));
  }
  return rows;
}

std::vector<CheckRow> verify_moments() {
  std::vector<CheckRow> rows;
  for (const auto& name : jump_catalog_names()) {
    for (int d = 1; d <= 3; ++d) {
      const auto rep = moment_check(make_jump(name, d));
      const std::string tag = name + " d=" + std::to_string(d);
      rows.push_back(row("moments", "first moments, " + tag, rep.max_first, 1e-10, 0));
      if (d > 1) rows.push_back(row("moments", "mixed second moments, " + tag, rep.max_mixed, 1e-10, 0));
      rows.push_back(row("moments", "diagonal second moments vs c, " + tag, rep.max_diagonal_spread, 1e-8, 0));
    }
  }
  const auto ind = make_jump("indicator", 1);
  rows.push_back(row("moments", "indicator d=1: |c - 2/3|", std::fabs(ind.second_moment() - 2.0 / 3.0), 1e-8, 0));
  return rows;
}

void print_checks(std::ostream& os, const std::vector<CheckRow>& rows) {
  std::size_t width = 10;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  for (const auto& r : rows) {
    os << (r.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(8) << r.suite << std::setw(static_cast<int>(width) + 2)
       << r.name << std::right << " value=" << std::setw(12) << std::setprecision(4) << std::scientific << r.value
       << "  tol=" << r.tolerance << std::defaultfloat << "  seed=" << r.seed << '\n';
  }
}

// ---------------------------------------------------------------------------
// Dispatch

namespace {

struct RunContext {
  const RunConfig& cfg;
  std::filesystem::path dir;
  std::vector<std::string> files;
  std::ostream& out;
  void wrote(const std::string& name) { files.push_back(name); }
};

Binning default_binning(const RunConfig& cfg, const PairPotential& phi) {
  return {std::min(0.5 * cfg.side, std::max(2.0 * phi.range(), 1.0)), 10};
}

std::vector<SummaryRow> ensemble_summary(const Ensemble& e, const Binning& binning, const std::string& prefix) {
  std::vector<SummaryRow> rows;
  const auto k1 = estimate_correlation(e, 1);
  const auto k2 = estimate_correlation(e, 2, binning);
  std::vector<double> counts;
  for (const auto& g : e.samples) counts.push_back(static_cast<double>(g.size()));
  const auto mc = batch_means(counts);
  rows.push_back({prefix + "count", mc.mean, mc.stderr_, e.samples.size()});
  rows.push_back({prefix + "k1", k1.values[0].mean, k1.values[0].stderr_, e.samples.size()});
  for (std::size_t b = 0; b < k2.values.size(); ++b) {
    std::ostringstream q;
    q << prefix << "k2[" << fmt(k2.edges[b]) << ";" << fmt(k2.edges[b + 1]) << ")";
    rows.push_back({q.str(), k2.values[b].mean, k2.values[b].stderr_, e.samples.size()});
  }
  return rows;
}

GibbsParams gibbs_params(const RunConfig& cfg) {
  GibbsParams p;
  p.z = cfg.z;
  p.phi = make_potential(cfg.potential, cfg.potential_params);
  p.box = Box(cfg.dim, cfg.side);
  p.validate();
  return p;
}

Ensemble sample_ensemble(const RunConfig& cfg, const GibbsParams& p, std::size_t n) {
  SampleOptions o;
  o.n = n;
  o.burn_in = cfg.burn_in;
  o.thin = cfg.thin;
  o.seed = cfg.seed;
  return sample_chains(p, o, cfg.chains, cfg.threads);
}

std::vector<Observation> mean_observations(const std::vector<std::vector<Observation>>& runs,
                                           std::vector<double>& mean_counts) {
  std::vector<Observation> out;
  mean_counts.clear();
  if (runs.empty()) return out;
  std::size_t rows = runs[0].size();
  for (const auto& r : runs) rows = std::min(rows, r.size());
  for (std::size_t t = 0; t < rows; ++t) {
    Observation o;
    o.time = runs[0][t].time;
    o.obs.assign(runs[0][t].obs.size(), 0.0);
    double cnt = 0.0;
    for (const auto& r : runs) {
      cnt += static_cast<double>(r[t].count);
      for (std::size_t k = 0; k < o.obs.size(); ++k) o.obs[k] += r[t].obs[k];
    }
    for (double& v : o.obs) v /= static_cast<double>(runs.size());
    mean_counts.push_back(cnt / static_cast<double>(runs.size()));
    out.push_back(o);
  }
  return out;
}

void write_mean_observations(const std::filesystem::path& path, const std::vector<Observation>& rows,
                             const std::vector<double>& counts) {
  std::ostringstream f;
  const std::size_t n_obs = rows.empty() ? 0 : rows[0].obs.size();
  f << "time,count";
  for (std::size_t k = 0; k < n_obs; ++k) f << ",obs_" << k;
  f << '\n';
  for (std::size_t t = 0; t < rows.size(); ++t) {
    f << fmt(rows[t].time) << ',' << fmt(counts[t]);
    for (double v : rows[t].obs) f << ',' << fmt(v);
    f << '\n';
  }
  write_text(path, f.str());
}

void run_gibbs(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto p = gibbs_params(cfg);
  const auto e = sample_ensemble(cfg, p, cfg.n);
  write_ensemble_jsonl(ctx.dir / "ensemble.jsonl", e);
  ctx.wrote("ensemble.jsonl");
  auto rows = ensemble_summary(e, default_binning(cfg, p.phi), "");
  for (Move m : {Move::Birth, Move::Death, Move::Translate})
    rows.push_back({"acceptance_" + to_string(m), e.stats.rate(m), 0.0,
                    static_cast<std::size_t>(e.stats.attempted[static_cast<std::size_t>(m)])});
  const auto rep = ruelle_check(estimate_correlation(e, 1), estimate_correlation(e, 2, default_binning(cfg, p.phi)), p);
  rows.push_back({"ruelle_xi", rep.xi, rep.xi_upper - rep.xi, e.samples.size()});
  write_summary_csv(ctx.dir / "summary.csv", rows);
  ctx.wrote("summary.csv");
  for (const auto& w : e.warnings) ctx.out << "warning: " << w << '\n';
  ctx.out << "sampled " << e.samples.size() << " configurations; mean count " << fmt(rows[0].estimate) << '\n';
}

std::vector<InnerFunction> observable_functions(const RunConfig& cfg, const Box& box) {
  return make_cylinder(cfg.functions.front(), box).inner();
}

template <class Runner>
void run_dynamics(RunContext& ctx, Runner runner, const char* label) {
  const auto& cfg = ctx.cfg;
  const auto p = gibbs_params(cfg);
  const auto start = sample_ensemble(cfg, p, cfg.replicas);
  const std::size_t R = start.samples.size();
  std::vector<std::vector<Observation>> obs(R);
  std::vector<Configuration> finals(R, Configuration(p.box));
  std::vector<JumpEvent> events;
  parallel_for(R, cfg.threads, [&](std::size_t r) { runner(r, start.samples[r], obs[r], finals[r], events); });
  Ensemble fin;
  fin.samples = finals;
  write_ensemble_jsonl(ctx.dir / "final_ensemble.jsonl", fin);
  ctx.wrote("final_ensemble.jsonl");
  std::vector<double> counts;
  const auto mean = mean_observations(obs, counts);
  write_mean_observations(ctx.dir / "observables.csv", mean, counts);
  ctx.wrote("observables.csv");
  if (cfg.log_events) {
    write_event_log_csv(ctx.dir / "events.csv", events, cfg.dim);
    ctx.wrote("events.csv");
  }
  const auto binning = default_binning(cfg, p.phi);
  auto rows = ensemble_summary(start, binning, "initial_");
  const auto after = ensemble_summary(fin, binning, "final_");
  rows.insert(rows.end(), after.begin(), after.end());
  write_summary_csv(ctx.dir / "summary.csv", rows);
  ctx.wrote("summary.csv");
  ctx.out << label << ": " << R << " replicas to T=" << fmt(cfg.T) << '\n';
}

void run_kawasaki(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto phi = make_potential(cfg.potential, cfg.potential_params);
  const auto prof = make_jump(cfg.jump, cfg.dim, cfg.jump_params, cfg.eps);
  const Box box(cfg.dim, cfg.side);
  const auto fns = observable_functions(cfg, box);
  run_dynamics(
      ctx,
      [&](std::size_t r, const Configuration& g, std::vector<Observation>& obs, Configuration& fin,
          std::vector<JumpEvent>& events) {
        KawasakiOptions o;
        o.T = cfg.T;
        o.time_scaling = cfg.time_scaling;
        o.s = cfg.s;
        o.seed = cfg.seed;
        o.stream = 1000 + r;
        o.log_events = cfg.log_events && r == 0;
        o.observe_dt = cfg.observe_dt;
        o.observables = fns;
        auto res = simulate(g, prof, phi, o);
        obs = std::move(res.observations);
        fin = std::move(res.final_state);
        if (r == 0) events = std::move(res.events);
      },
      "kawasaki-run");
}

void run_diffusion(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto phi = make_potential(cfg.potential, cfg.potential_params);
  const auto prof = make_jump(cfg.jump, cfg.dim, cfg.jump_params, cfg.eps);
  const Box box(cfg.dim, cfg.side);
  const auto fns = observable_functions(cfg, box);
  run_dynamics(
      ctx,
      [&](std::size_t r, const Configuration& g, std::vector<Observation>& obs, Configuration& fin,
          std::vector<JumpEvent>&) {
        SDEConfig s;
        s.c = prof.second_moment();
        s.dt = cfg.dt;
        s.T = cfg.T;
        s.seed = cfg.seed;
        s.stream = 1000 + r;
        s.observe_dt = cfg.observe_dt;
        s.observables = fns;
        auto res = em_run(g, s, phi);
        obs = std::move(res.observations);
        fin = std::move(res.final_state);
      },
      "diffusion-run");
}

void run_converge(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto p = gibbs_params(cfg);
  const auto e = sample_ensemble(cfg, p, cfg.n);
  GeneratorSpec spec;
  spec.prof = make_jump(cfg.jump, cfg.dim, cfg.jump_params, cfg.eps);
  spec.phi = p.phi;
  spec.z = cfg.z;
  spec.s = cfg.s;
  spec.nodes_per_axis = cfg.nodes_per_axis;
  std::vector<SummaryRow> rows;
  for (const auto& name : cfg.functions) {
    const auto F = make_cylinder(name, p.box);
    const auto rep = convergence_study(F, e, spec, cfg.eps_grid);
    write_convergence(ctx.dir, "convergence_" + name, rep);
    ctx.wrote("convergence_" + name + ".csv");
    ctx.wrote("convergence_" + name + ".json");
    ctx.wrote("convergence_" + name + ".dat");
    rows.push_back({"slope_" + name, rep.slope, 0.0, rep.rows.size()});
    ctx.out << name << ": slope " << fmt(rep.slope) << (rep.strictly_decreasing ? "" : " (not monotone)")
            << (rep.at_noise_floor ? " (at noise floor)" : "") << '\n';
  }
  write_summary_csv(ctx.dir / "summary.csv", rows);
  ctx.wrote("summary.csv");
}

bool run_verify(RunContext& ctx, const std::vector<std::string>& args) {
  const std::string which = args.empty() ? "all" : args.front();
  if (which != "all" && which != "kcalc" && which != "balance" && which != "moments")
    throw ValidationError("verify: unknown suite '" + which + "' (expected kcalc, balance, moments or all)");
  std::vector<CheckRow> rows;
  auto add = [&](std::vector<CheckRow> r) { rows.insert(rows.end(), r.begin(), r.end()); };
  if (which == "all" || which == "kcalc") add(verify_kcalc(ctx.cfg.seed));
  if (which == "all" || which == "balance") add(verify_balance(ctx.cfg.seed));
  if (which == "all" || which == "moments") add(verify_moments());
  print_checks(ctx.out, rows);
  std::ostringstream csv;
  csv << "suite,check,value,tolerance,pass,seed\n";
  bool ok = true;
  for (const auto& r : rows) {
    csv << r.suite << ",\"" << r.name << "\"," << fmt(r.value) << ',' << fmt(r.tolerance) << ',' << (r.pass ? 1 : 0)
        << ',' << r.seed << '\n';
    ok = ok && r.pass;
  }
  write_text(ctx.dir / "verify.csv", csv.str());
  ctx.wrote("verify.csv");
  ctx.out << (ok ? "all checks passed" : "some checks FAILED") << '\n';
  return ok;
}

}  // namespace

int dispatch(const std::string& sub, const std::vector<std::string>& args, const RunConfig& cfg, std::ostream& out,
             std::ostream& err) {
  try {
    static const std::set<std::string> known{"gibbs-sample", "kawasaki-run", "diffusion-run", "gen-converge", "verify"};
    if (!known.count(sub)) throw ValidationError("unknown subcommand '" + sub + "'");
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::string id = run_id(cfg);
    RunContext ctx{cfg, std::filesystem::path(cfg.output) / (sub + "-" + id), {}, out};
    std::filesystem::create_directories(ctx.dir);
    bool ok = true;
    if (sub == "gibbs-sample") run_gibbs(ctx);
    else if (sub == "kawasaki-run") run_kawasaki(ctx);
    else if (sub == "diffusion-run") run_diffusion(ctx);
    else if (sub == "gen-converge") run_converge(ctx);
    else ok = run_verify(ctx, args);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::ordered_json m;
    m["run_id"] = id;
    m["subcommand"] = sub;
    m["args"] = args;
    m["seed"] = cfg.seed;
    m["config"] = to_json(cfg);
    m["version"] = "kdl 0.1.0";
    m["compiler"] = __VERSION__;
    m["files"] = ctx.files;
    m["wall_time_s"] = wall;
    write_text(ctx.dir / "manifest.json", m.dump(2) + "\n");
    out << "run " << id << " -> " << ctx.dir.string() << '\n';
    return ok ? 0 : 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalGuard& e) {
    err << "numerical guard: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace kdl
