#include "kdl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kdl/errors.hpp"

namespace kdl {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path.string() + "' for writing");
  return f;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
}

void write_ensemble_jsonl(const std::filesystem::path& path, const Ensemble& e) {
  auto f = open_out(path);
  for (const auto& g : e.samples) {
    f << '[';
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i) f << ',';
      f << '[' << g.id(i);
      for (int k = 0; k < g.box().dim(); ++k) f << ',' << fmt(g.pos(i)[k]);
      f << ']';
    }
    f << "]\n";
  }
}

Ensemble read_ensemble_jsonl(const std::filesystem::path& path, const Box& box) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open ensemble '" + path.string() + "'");
  Ensemble e;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError("ensemble line " + std::to_string(lineno) + ": " + ex.what());
    }
    if (!j.is_array()) throw ValidationError("ensemble line " + std::to_string(lineno) + ": expected an array");
    std::vector<Particle> parts;
    for (const auto& p : j) {
      if (!p.is_array() || static_cast<int>(p.size()) != box.dim() + 1)
        throw ValidationError("ensemble line " + std::to_string(lineno) + ": expected [id, x1..xd]");
      Particle q{p[0].get<std::uint64_t>(), Vec{}};
      for (int k = 0; k < box.dim(); ++k) q.pos[k] = p[static_cast<std::size_t>(k) + 1].get<double>();
      parts.push_back(q);
    }
    e.samples.emplace_back(box, std::move(parts));
  }
  if (e.samples.empty()) throw ValidationError("ensemble '" + path.string() + "' is empty");
  return e;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  auto f = open_out(path);
  f << "quantity,estimate,stderr,n\n";
  for (const auto& r : rows) f << r.quantity << ',' << fmt(r.estimate) << ',' << fmt(r.stderr_) << ',' << r.n << '\n';
}

void write_event_log_csv(const std::filesystem::path& path, const std::vector<JumpEvent>& events, int dim) {
  auto f = open_out(path);
  f << "time,particle";
  for (int k = 1; k <= dim; ++k) f << ",from_" << k;
  for (int k = 1; k <= dim; ++k) f << ",to_" << k;
  f << '\n';
  for (const auto& ev : events) {
    f << fmt(ev.time) << ',' << ev.particle;
    for (int k = 0; k < dim; ++k) f << ',' << fmt(ev.from[k]);
    for (int k = 0; k < dim; ++k) f << ',' << fmt(ev.to[k]);
    f << '\n';
  }
}

void write_observations_csv(const std::filesystem::path& path, const std::vector<Observation>& rows,
                            std::size_t n_obs) {
  auto f = open_out(path);
  f << "time,count";
  for (std::size_t k = 0; k < n_obs; ++k) f << ",obs_" << k;
  f << '\n';
  for (const auto& r : rows) {
    f << fmt(r.time) << ',' << r.count;
    for (double v : r.obs) f << ',' << fmt(v);
    f << '\n';
  }
}

void write_convergence(const std::filesystem::path& dir, const std::string& stem, const ConvergenceReport& r) {
  {
    auto f = open_out(dir / (stem + ".csv"));
    f << "epsilon,l2err,stderr,quad_err\n";
    for (const auto& row : r.rows)
      f << fmt(row.eps) << ',' << fmt(row.l2err) << ',' << fmt(row.l2err_stderr) << ',' << fmt(row.quad_err) << '\n';
  }
  {
    nlohmann::ordered_json j;
    j["function"] = r.function;
    j["slope"] = r.slope;
    j["intercept"] = r.intercept;
    j["strictly_decreasing"] = r.strictly_decreasing;
    j["at_noise_floor"] = r.at_noise_floor;
    auto& rows = j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
      nlohmann::ordered_json o;
      o["epsilon"] = row.eps;
      o["l2err"] = row.l2err;
      o["stderr"] = row.l2err_stderr;
      o["quad_err"] = row.quad_err;
      o["second_moment_eps"] = row.second_moment_eps.mean;
      o["second_moment_eps_stderr"] = row.second_moment_eps.stderr_;
      o["second_moment_dif"] = row.second_moment_dif.mean;
      o["second_moment_dif_stderr"] = row.second_moment_dif.stderr_;
      rows.push_back(o);
    }
    auto f = open_out(dir / (stem + ".json"));
    f << j.dump(2) << '\n';
  }
  {
    auto f = open_out(dir / (stem + ".dat"));
    f << "# log(epsilon) log(l2err) l2err_stderr/l2err\n";
    for (const auto& row : r.rows)
      f << fmt(std::log(row.eps)) << ' ' << fmt(std::log(row.l2err)) << ' '
        << fmt(row.l2err > 0 ? row.l2err_stderr / row.l2err : 0.0) << '\n';
  }
}

}  // namespace kdl
