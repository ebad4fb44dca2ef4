#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "oldroyd/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Energy-stable finite element solvers for the Oldroyd-B model"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a simulation from a config file");
  run->add_option("--config", config_path, "Path to the run configuration")
      ->required();

  std::string check_path;
  auto* check = app.add_subcommand(
      "check", "Run a simulation and fail on any certificate violation");
  check->add_option("--config", check_path, "Path to the run configuration")
      ->required();

  int samples = 10000;
  std::uint64_t seed = 20240101;
  auto* lemmas =
      app.add_subcommand("verify-lemmas", "Randomized checks of the matrix "
                                          "inequalities and interpolation properties");
  lemmas->add_option("--samples", samples, "Number of random samples");
  lemmas->add_option("--seed", seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return oldroyd::run_simulation_file(config_path, std::cout);
    if (check->parsed()) return oldroyd::run_simulation_file(check_path, std::cout);
    if (lemmas->parsed()) return oldroyd::verify_lemmas_main(samples, seed, std::cout);
  } catch (const oldroyd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 4;
  } catch (const oldroyd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
