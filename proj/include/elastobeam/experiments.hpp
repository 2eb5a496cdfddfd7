#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace elastobeam {

/// Invalid configuration: malformed JSON, unknown keys, bad values, unreadable medium (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct ExperimentResult {
  std::vector<Check> checks;
  nlohmann::json results = nlohmann::json::object();
  std::vector<std::string> outputs;  // file names written into the output directory
  bool passed() const;
};

struct ExperimentContext {
  nlohmann::json config;
  std::filesystem::path config_dir;
  std::filesystem::path out_dir;
  unsigned seed = 0;
};

const std::vector<std::string>& experiment_names();

/// Runs one experiment. Throws ConfigError for configuration problems; other exceptions are runtime failures.
ExperimentResult run_experiment(const std::string& name, const ExperimentContext& ctx);

/// Complete CLI run: parses the config, runs the experiment and writes manifest.json.
/// Returns 0 when all checks pass, 1 on a check failure, 2 on a config error and 3 on a runtime error.
int run_cli(const std::string& experiment, const std::filesystem::path& config_path,
            const std::filesystem::path& out_dir, unsigned seed);

}  // namespace elastobeam
