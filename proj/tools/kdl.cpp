#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kdl/cli.hpp"
#include "kdl/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"kdl: Gibbs sampling, Kawasaki and gradient diffusion dynamics, generator checks", "kdl"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  app.add_option("--config", config_path, "JSON configuration file (or KDL_CONFIG)");
  app.add_option("--seed", seed, "64-bit seed (or KDL_SEED)");
  app.add_option("--out", out, "output directory (or KDL_OUT)");
  app.add_option("--threads", threads, "worker threads (or KDL_THREADS)")->check(CLI::PositiveNumber);

  std::vector<std::string> suite;
  app.add_subcommand("gibbs-sample", "sample the grand canonical Gibbs measure");
  app.add_subcommand("kawasaki-run", "run the Kawasaki jump dynamics from a Gibbs ensemble");
  app.add_subcommand("diffusion-run", "run the gradient diffusion from a Gibbs ensemble");
  app.add_subcommand("gen-converge", "generator convergence study over the eps grid");
  app.add_subcommand("verify", "identity, detailed-balance and moment checks")
      ->add_option("suite", suite, "kcalc | balance | moments | all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  kdl::RunConfig cfg;
  try {
    if (config_path.empty())
      if (const char* env = std::getenv("KDL_CONFIG")) config_path = env;
    if (!config_path.empty()) cfg = kdl::parse_config(config_path);
    kdl::apply_env_overrides(cfg);
    if (seed) cfg.seed = *seed;
    if (out) cfg.output = *out;
    if (threads) cfg.threads = *threads;
  } catch (const kdl::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const kdl::NumericalGuard& e) {
    std::cerr << "numerical guard: " << e.what() << '\n';
    return 2;
  }
  return kdl::dispatch(sub, suite, cfg, std::cout, std::cerr);
}
