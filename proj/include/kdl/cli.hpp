#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace kdl {

struct RunConfig {
  // box
  int dim = 2;
  double side = 5.0;
  // interaction
  std::string potential = "zero";
  std::map<std::string, double> potential_params;
  double z = 1.0;
  // jump profile
  std::string jump = "bump";
  std::map<std::string, double> jump_params;
  double eps = 0.1;
  std::vector<double> eps_grid{0.2, 0.1, 0.05, 0.025};
  // dynamics
  double T = 1.0;
  double dt = 1e-3;
  bool time_scaling = true;
  double s = 0.5;
  double observe_dt = 0.1;
  bool log_events = false;
  std::size_t replicas = 16;
  // sampler
  std::size_t n = 1000;
  std::size_t burn_in = 1000;
  std::size_t thin = 10;
  std::size_t chains = 1;
  // generator
  int nodes_per_axis = 32;
  std::vector<std::string> functions{"sine_pair"};
  // run
  std::uint64_t seed = 1;
  std::string output = "out";
  std::size_t threads = 1;

  // Re-checks every range constraint of the referenced modules.
  void validate() const;
};

// Parses a JSON document. Unknown or duplicate keys are rejected with the
// offending key named.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

// Effective configuration with every default filled in.
nlohmann::ordered_json to_json(const RunConfig& cfg);

// KDL_SEED, KDL_OUT, KDL_THREADS and KDL_CONFIG are read from the environment.
void apply_env_overrides(RunConfig& cfg);

// 16 hex digits derived from the effective configuration (seed included).
std::string run_id(const RunConfig& cfg);

struct CheckRow {
  std::string suite;
  std::string name;
  double value;
  double tolerance;
  bool pass;
  std::uint64_t seed;
};

std::vector<CheckRow> verify_kcalc(std::uint64_t seed);
std::vector<CheckRow> verify_balance(std::uint64_t seed);
std::vector<CheckRow> verify_moments();

void print_checks(std::ostream& os, const std::vector<CheckRow>& rows);

// Runs a subcommand and writes <output>/<subcommand>-<run_id>/ with a manifest.json.
// Returns 0 on success, 1 on validation errors, 2 on numerical guard trips.
int dispatch(const std::string& subcommand, const std::vector<std::string>& args, const RunConfig& cfg,
             std::ostream& out, std::ostream& err);

}  // namespace kdl
