#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "elastobeam/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-beam experiments for quadratic elastic media"};
  std::string experiment, config, out = "out";
  unsigned seed = 0;
  std::string names;
  for (const std::string& n : elastobeam::experiment_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("experiment", experiment, "One of: " + names)->required();
  app.add_option("--config", config, "Experiment config (JSON)")->required();
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.footer("Environment: ELASTOBEAM_THREADS sets the worker count; ELASTOBEAM_SIMD=scalar disables AVX2 kernels.\n"
             "Exit status: 0 ok, 1 check failure, 2 config error, 3 runtime error.");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  bool known = false;
  for (const std::string& n : elastobeam::experiment_names()) known = known || n == experiment;
  if (!known) {
    std::cerr << "elastobeam: unknown experiment '" << experiment << "' (expected one of: " << names << ")\n";
    return 2;
  }
  return elastobeam::run_cli(experiment, config, out, seed);
}
