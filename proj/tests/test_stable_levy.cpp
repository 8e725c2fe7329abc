#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "sle6/random.hpp"
#include "sle6/stable_levy.hpp"
#include "sle6/stats.hpp"

using namespace sle6;

namespace {

// E[exp(lambda X_t)] = exp(t c Gamma(-alpha) lambda^alpha) for the centred
// process with only downward jumps: integrate (e^{-lambda y} - 1 + lambda y)
// against c y^(-1-alpha).
double laplace_transform(double c, double alpha, double lambda, double t) {
  return std::exp(t * c * std::tgamma(-alpha) * std::pow(lambda, alpha));
}

Estimate mean_exp(const StableParams& p, double lambda, double t, int n, const char* tag) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    Stream rng(9, hash_tag(tag), i);
    v[i] = std::exp(lambda * sample_increment(p, t, rng));
  }
  return sample_mean(v);
}

}  // namespace

TEST_SUITE("stable_levy") {
  TEST_CASE("tail rate and compensator closed forms") {
    const auto p = StableParams::exact(1.0);
    CHECK(tail_rate(p, 0.1) == doctest::Approx(2.0 / 3.0 * std::pow(0.1, -1.5)));
    CHECK(tail_rate(p, 0.1) == doctest::Approx(21.08185).epsilon(1e-6));
    CHECK(small_jump_variance_rate(p, 1e-3) == doctest::Approx(2.0 * std::sqrt(1e-3)));
    CHECK(large_jump_compensator(p, 1e-2) == doctest::Approx(2.0 / std::sqrt(1e-2)));
    CHECK(tail_rate(StableParams::exact(3.0), 0.5) == doctest::Approx(3.0 * tail_rate(p, 0.5)));
  }

  TEST_CASE("default delta cut") {
    CHECK(default_delta_cut(1.0) == 1e-3);
    CHECK(default_delta_cut(0.05) == doctest::Approx(5e-4));
  }

  TEST_CASE("parameter validation") {
    StableParams p;
    p.alpha = 2.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = StableParams::exact(-1.0);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = StableParams::hybrid(1.0, 0.0);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }

  TEST_CASE("exact increments match the Laplace transform") {
    // The oracle uses only the Levy measure, not the CMS scale formula.
    const int n = 100000;
    for (double c : {1.0, 2.5}) {
      const auto p = StableParams::exact(c);
      const auto e = mean_exp(p, 0.5, 1.0, n, "laplace-exact");
      const double target = laplace_transform(c, 1.5, 0.5, 1.0);
      CHECK(std::abs(e.mean - target) < 4.0 * e.std_err);
    }
  }

  TEST_CASE("hybrid increments match the Laplace transform") {
    const auto p = StableParams::hybrid(1.0, 1e-2);
    const auto e = mean_exp(p, 0.5, 0.5, 20000, "laplace-hybrid");
    CHECK(std::abs(e.mean - laplace_transform(1.0, 1.5, 0.5, 0.5)) < 4.0 * e.std_err);
  }

  TEST_CASE("exact increments are self-similar on the same stream") {
    const auto p = StableParams::exact(1.0);
    for (int i = 0; i < 50; ++i) {
      Stream a(1, 2, i), b(1, 2, i);
      const double x1 = sample_increment(p, 1.0, a);
      const double x8 = sample_increment(p, 8.0, b);
      CHECK(x8 == doctest::Approx(std::pow(8.0, 1.0 / 1.5) * x1).epsilon(1e-12));
    }
    Stream r(1, 2, 3);
    CHECK(sample_increment(p, 0.0, r) == 0.0);
  }

  TEST_CASE("pareto samplers") {
    Stream rng(2, hash_tag("pareto"), 0);
    std::vector<double> xs(20000);
    for (auto& x : xs) {
      x = sample_pareto(0.1, 1.5, rng);
      REQUIRE(x >= 0.1);
    }
    CHECK(median(xs) == doctest::Approx(0.1 * std::pow(2.0, 1.0 / 1.5)).epsilon(0.03));
    for (int i = 0; i < 10000; ++i) {
      const double y = sample_truncated_pareto(0.01, 0.02, 1.5, rng);
      REQUIRE(y >= 0.01);
      REQUIRE(y < 0.02);
    }
  }

  TEST_CASE("hybrid ledger counts are Poisson with the tail rate") {
    const auto p = StableParams::hybrid(1.0, 1e-2);
    const double thr = 0.2;
    std::vector<double> counts(4000);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      Stream rng(4, hash_tag("ledger"), i);
      const auto path = sample_path(p, 1.0, 0.1, thr, rng);
      counts[i] = double(path.jumps.size());
      for (const auto& j : path.jumps) REQUIRE(j.size >= thr);
    }
    const auto e = sample_mean(counts);
    CHECK(std::abs(e.mean - tail_rate(p, thr)) < 4.0 * e.std_err);
  }

  TEST_CASE("path structure") {
    const auto p = StableParams::hybrid(1.0, 1e-3);
    Stream rng(4, hash_tag("structure"), 0);
    const auto path = sample_path(p, 1.0, 0.01, 0.05, rng);
    CHECK(path.values.size() == grid_intervals(1.0, 0.01) + 1);
    CHECK(path.values[0] == 0.0);
    CHECK(path.end_time() == doctest::Approx(1.0));
    for (std::size_t k = 1; k < path.jumps.size(); ++k) CHECK(path.jumps[k - 1].time <= path.jumps[k].time);
    // Right-continuity at a jump.
    for (const auto& j : path.jumps) CHECK(path.value_at(j.time) == doctest::Approx(j.post_value()));
  }

  TEST_CASE("value lookup, running minimum and first passage on a hand-built path") {
    StablePath path;
    path.horizon = 2.0;
    path.grid_step = 1.0;
    path.values = {0.0, -0.1, -0.3};
    path.jumps = {{1.5, 0.5, -0.2}};
    CHECK(path.value_at(0.5) == 0.0);
    CHECK(path.value_at(1.0) == -0.1);
    CHECK(path.value_at(1.5) == doctest::Approx(-0.7));
    CHECK(path.value_at(2.0) == -0.3);
    CHECK(path.running_min(1.4) == -0.1);
    CHECK(path.running_min(1.6) == doctest::Approx(-0.7));
    CHECK(first_passage_below(path, -0.15).value() == doctest::Approx(1.5));
    CHECK(first_passage_below(path, -0.05).value() == doctest::Approx(1.0));
    CHECK_FALSE(first_passage_below(path, -1.0).has_value());
  }

  TEST_CASE("calibration recovers the Levy constant") {
    const auto p = StableParams::hybrid(2.0, 1e-3);
    Stream rng(6, hash_tag("calibrate"), 0);
    CalibrationOptions opt;
    opt.exposure = 200.0;
    const auto res = calibrate_levy_constant(p, rng, opt);
    CHECK(std::abs(res.levy_const.mean - 2.0) < 4.0 * res.levy_const.std_err);

    // Rescaling the path by s multiplies the measured constant by s^alpha.
    Stream rng2(6, hash_tag("calibrate"), 0);
    opt.scale_multiplier = 2.0;
    opt.thresholds = {0.04, 0.1, 0.2};
    const auto scaled = calibrate_levy_constant(p, rng2, opt);
    CHECK(std::abs(scaled.levy_const.mean - 2.0 * std::pow(2.0, 1.5)) < 4.0 * scaled.levy_const.std_err);
  }

  TEST_CASE("calibration throws when the largest threshold is too rare") {
    const auto p = StableParams::hybrid(1.0, 1e-3);
    Stream rng(6, hash_tag("calibrate-rare"), 0);
    CalibrationOptions opt;
    opt.exposure = 1.0;
    opt.thresholds = {0.5, 5.0};
    CHECK_THROWS_AS(calibrate_levy_constant(p, rng, opt), EstimationError);
  }
}
