#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "sle6/experiment.hpp"
#include "sle6/io.hpp"

using namespace sle6;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sle6-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(const std::string& args) {
  const std::string cmd = std::string(SLE6_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small(const std::string& name, const fs::path& out, unsigned threads) {
  ExperimentConfig c;
  c.experiment = name;
  c.seed = 42;
  c.n = 2000;
  c.out_dir = out;
  c.threads = threads;
  return c;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("unknown experiment is a usage error") {
    ExperimentConfig c;
    c.experiment = "no-such-thing";
    CHECK_THROWS_AS(run_experiment(c), UsageError);
  }

  TEST_CASE("empty u_grid is a usage error") {
    auto c = small("survival-curve", scratch("empty-grid"), 1);
    c.params["u_grid"] = nlohmann::json::array();
    CHECK_THROWS_AS(run_experiment(c), UsageError);
  }

  TEST_CASE("unknown parameter is a usage error") {
    auto c = small("peanosphere", scratch("unknown-param"), 1);
    c.params["horizn"] = 2.0;
    CHECK_THROWS_AS(run_experiment(c), UsageError);
  }

  TEST_CASE("wrongly typed parameter is a usage error") {
    auto c = small("jump-law", scratch("typed"), 1);
    c.params["epsilon"] = "big";
    CHECK_THROWS_AS(run_experiment(c), UsageError);
  }

  TEST_CASE("unwritable output is an I/O error") {
    const fs::path dir = scratch("blocked");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    auto c = small("peanosphere", dir / "file" / "sub", 1);
    CHECK_THROWS_AS(run_experiment(c), IoError);
  }

  TEST_CASE("config round trip") {
    auto c = small("lemma-3-2", "out/x", 3);
    c.params["eps_grid"] = {0.4, 0.2};
    ExperimentConfig d;
    d.merge(c.to_json());
    CHECK(d.to_json() == c.to_json());
    CHECK_THROWS_AS(d.merge(nlohmann::json{{"sede", 1}}), UsageError);
  }

  TEST_CASE("summary lists resolved parameters and checks") {
    const fs::path out = scratch("summary");
    const auto r = run_experiment(small("jump-law", out, 1));
    const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
    CHECK(j["experiment"] == "jump-law");
    CHECK(j["params"]["epsilon"] == 0.1);
    CHECK(j["params"]["seed"] == 42);
    REQUIRE(j["checks"].is_array());
    CHECK(j["checks"].size() == r.checks.size());
    for (const auto& c : j["checks"]) {
      CHECK(c.contains("name"));
      CHECK(c.contains("value"));
      CHECK(c.contains("target"));
      CHECK(c.contains("tolerance"));
      CHECK(c.contains("pass"));
    }
    CHECK(exit_code(r) == (r.passed() ? 0 : 1));
  }

  TEST_CASE("outputs are byte-identical across reruns and thread counts") {
    for (const std::string name : {"survival-curve", "lemma-3-2", "peanosphere", "supermartingale"}) {
      const fs::path a = scratch(name + "-a"), b = scratch(name + "-b"), c = scratch(name + "-c");
      const auto ra = run_experiment(small(name, a, 1));
      run_experiment(small(name, b, 4));
      run_experiment(small(name, c, 1));
      for (const auto& f : ra.files) {
        const auto rel = fs::relative(f, a);
        CHECK_MESSAGE(slurp(f) == slurp(b / rel), std::string(name + "/" + rel.string()));
        CHECK_MESSAGE(slurp(f) == slurp(c / rel), std::string(name + "/" + rel.string()));
      }
    }
  }

  TEST_CASE("CLI exit codes") {
    const fs::path out = scratch("cli");
    CHECK(cli("peanosphere --n 200000 --out " + (out / "ok").string()) == 0);
    CHECK(fs::exists(out / "ok" / "summary.json"));
    CHECK(cli("survival-curve --n 2000 --set 'u_grid=[]' --out " + (out / "bad").string()) == 2);
    CHECK(cli("no-such-command") == 2);
    CHECK(cli("jump-law --set epsilon=0.1 --set bogus=1 --out " + (out / "bad2").string()) == 2);
    fs::create_directories(out);
    std::ofstream(out / "file") << "x";
    CHECK(cli("peanosphere --n 2000 --out " + (out / "file" / "sub").string()) == 3);
    // Ten samples miss the 0.01 correlation tolerance at seed 2.
    CHECK(cli("peanosphere --n 10 --seed 2 --out " + (out / "fail").string()) == 1);
    CHECK(cli("list") == 0);
  }

  TEST_CASE("config file drives the run command") {
    const fs::path out = scratch("config");
    fs::create_directories(out);
    const fs::path cfg = out / "cfg.json";
    std::ofstream(cfg) << R"({"experiment": "jump-law", "seed": 3, "n": 2000, "params": {"epsilon": 0.2}})";
    CHECK(cli("run --config " + cfg.string() + " --out " + (out / "run").string()) <= 1);
    const auto j = nlohmann::json::parse(slurp(out / "run" / "summary.json"));
    CHECK(j["params"]["epsilon"] == 0.2);
    CHECK(j["params"]["seed"] == 3);
    std::ofstream(out / "broken.json") << "{not json";
    CHECK(cli("run --config " + (out / "broken.json").string()) == 2);
    CHECK(cli("run --config " + (out / "missing.json").string()) == 3);
  }
}
