// Command-line front end for the experiment runner.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sle6/experiment.hpp"
#include "sle6/io.hpp"

namespace {

const std::map<std::string, std::string> kSubcommands{
    {"simulate-stable", "simulate-stable"},
    {"simulate-wedge", "simulate-wedge"},
    {"survival-curve", "survival-curve"},
    {"verify-lemma32", "lemma-3-2"},
    {"jump-law", "jump-law"},
    {"scheme-equivalence", "scheme-equivalence"},
    {"disk-field", "disk-field"},
    {"peanosphere", "peanosphere"},
    {"supermartingale", "supermartingale"},
    {"endpoint", "endpoint-diagnostics"},
};

// key=value with value parsed as JSON when possible, else kept as a string.
std::pair<std::string, nlohmann::json> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw sle6::UsageError("--set expects key=value, got '" + s + "'");
  const std::string key = s.substr(0, eq), text = s.substr(eq + 1);
  auto value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  return {key, value};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments on boundary length processes and quantum disks"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::optional<std::string> out, config_file;
  std::optional<double> gamma;
  std::optional<unsigned> threads;
  std::vector<std::string> sets;
  bool quiet = false;

  app.add_option("--seed", seed, "Master seed");
  app.add_option("--n", n, "Number of paths or samples (experiment default when omitted)");
  app.add_option("--out", out, "Output directory");
  app.add_option("--config", config_file, "JSON config file (see docs/config.md)");
  app.add_option("--gamma", gamma, "LQG parameter, default sqrt(8/3)");
  app.add_option("--threads", threads, "Worker threads, 0 for all cores");
  app.add_option("--set", sets, "Experiment parameter override key=value (repeatable)");
  app.add_flag("--quiet", quiet, "Only report failures");

  std::string chosen;
  for (const auto& [name, experiment] : kSubcommands) {
    auto* sub = app.add_subcommand(name, "Run the " + experiment + " experiment");
    sub->fallthrough();
    sub->callback([&chosen, e = experiment] { chosen = e; });
  }
  app.add_subcommand("run", "Run the experiment named in --config")->fallthrough()->callback([&] { chosen = ""; });
  app.add_subcommand("list", "List experiment names")->callback([&] { chosen = "#list"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (chosen == "#list") {
    for (const auto& name : sle6::experiment_names()) std::cout << name << '\n';
    return 0;
  }

  try {
    sle6::ExperimentConfig cfg;
    if (config_file) cfg = sle6::ExperimentConfig::from_file(*config_file);
    if (!chosen.empty()) {
      if (!cfg.experiment.empty() && cfg.experiment != chosen)
        throw sle6::UsageError("config names experiment '" + cfg.experiment + "' but subcommand selects '" + chosen + "'");
      cfg.experiment = chosen;
    }
    if (cfg.experiment.empty()) throw sle6::UsageError("no experiment selected");
    if (seed) cfg.seed = *seed;
    if (n) cfg.n = *n;
    if (out) cfg.out_dir = *out;
    if (gamma) cfg.gamma = *gamma;
    if (threads) cfg.threads = *threads;
    for (const auto& s : sets) {
      auto [key, value] = parse_assignment(s);
      cfg.params[key] = value;
    }

    const sle6::ExperimentResult result = sle6::run_experiment(cfg);
    for (const auto& c : result.checks) {
      if (quiet && c.pass) continue;
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << sle6::format_double(c.value)
                << " target=" << sle6::format_double(c.target) << " tolerance=" << sle6::format_double(c.tolerance)
                << '\n';
    }
    std::cout << result.experiment << ": " << (result.passed() ? "pass" : "FAIL") << " (" << result.checks.size()
              << " checks), output in " << cfg.out_dir.string() << '\n';
    return sle6::exit_code(result);
  } catch (const sle6::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const sle6::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
