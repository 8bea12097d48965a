#include "actinf/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char ** argv)
{
  CLI::App app{"Free-energy control experiments on linear Gaussian systems"};
  app.require_subcommand(1);

  std::string run_config;
  bool noise_off = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  auto * run = app.add_subcommand("run", "simulate every configured controller and write CSV traces");
  run->add_option("config", run_config, "experiment config file")->required();
  run->add_flag("--noise-off", noise_off, "propagate means only");
  run->add_option("--seed", seed, "run this seed only");
  run->add_option("--out", out, "output directory");

  std::string check_config;
  auto * check = app.add_subcommand("check", "validate a config and compare closed forms with message passing");
  check->add_option("config", check_config, "experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) {
      actinf::experiment::Overrides overrides;
      if (noise_off) { overrides.noise_off = true; }
      overrides.seed = seed;
      overrides.out  = out;
      return actinf::experiment::run_command(run_config, overrides, std::cout, std::cerr);
    }
    return actinf::experiment::check_command(check_config, std::cout, std::cerr);
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
