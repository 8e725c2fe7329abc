#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace sle6 {

/// Bad configuration or unknown experiment; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything needed to rerun an experiment. `params` holds per-experiment
/// overrides; unknown keys are rejected. See docs/config.md.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::size_t n = 0;  ///< 0: experiment default
  std::filesystem::path out_dir = "out";
  unsigned threads = 0;
  double gamma = 1.6329931618554521;
  nlohmann::json params = nlohmann::json::object();

  /// Reads a config file. Throws UsageError on malformed content and
  /// IoError when the file cannot be read.
  static ExperimentConfig from_file(const std::filesystem::path& path);
  /// Fields missing from `j` keep their current values.
  void merge(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
};

struct Check {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ExperimentResult {
  std::string experiment;
  nlohmann::json params;  ///< fully resolved, defaults included
  std::vector<Check> checks;
  std::vector<std::filesystem::path> files;

  [[nodiscard]] bool passed() const;
};

/// Names accepted by run_experiment.
const std::vector<std::string>& experiment_names();

/// Runs the named experiment and writes its CSV files, summary.json and
/// plot.svg (where there is a curve) into config.out_dir.
/// Throws UsageError or IoError.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// 0 when every check passed, 1 otherwise.
int exit_code(const ExperimentResult& result);

}  // namespace sle6
