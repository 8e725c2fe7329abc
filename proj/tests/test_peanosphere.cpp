#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "sle6/peanosphere.hpp"
#include "sle6/stats.hpp"

using namespace sle6;

TEST_SUITE("peanosphere") {
  TEST_CASE("correlation constant") {
    PeanoParams p;
    CHECK(p.correlation() == doctest::Approx(0.5).epsilon(1e-12));
    p.gamma = std::sqrt(2.0);
    CHECK(std::abs(p.correlation()) < 1e-12);
    p.gamma = std::sqrt(3.0);
    CHECK(p.correlation() == doctest::Approx(-std::cos(3.0 * M_PI / 4.0)));
  }

  TEST_CASE("parameter range") {
    PeanoParams p;
    p.gamma = 2.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.gamma = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PeanoParams{};
    p.var_rate = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }

  TEST_CASE("endpoint covariance") {
    PeanoParams p;
    p.var_rate = 2.0;
    const int n = 50000;
    std::vector<double> l(n), r(n), l2(n), lr(n);
    for (int i = 0; i < n; ++i) {
      Stream rng(1, hash_tag("peano"), i);
      std::tie(l[i], r[i]) = sample_peano_endpoint(p, 3.0, rng);
      l2[i] = l[i] * l[i];
      lr[i] = l[i] * r[i];
    }
    const auto v = sample_mean(l2), c = sample_mean(lr);
    CHECK(std::abs(v.mean - 6.0) < 4 * v.std_err);
    CHECK(std::abs(c.mean - 3.0) < 4 * c.std_err);
    CHECK(std::abs(correlation(l, r).mean - 0.5) < 0.02);
  }

  TEST_CASE("path increments have the same law as the endpoint") {
    PeanoParams p;
    const int n = 4000;
    std::vector<double> lr(n);
    for (int i = 0; i < n; ++i) {
      Stream rng(2, hash_tag("peano-path"), i);
      const auto path = sample_peano_bm(p, 1.0, 0.05, rng);
      REQUIRE(path.t.size() == 21);
      CHECK(path.left.front() == 0.0);
      lr[i] = path.left.back() * path.right.back();
    }
    const auto c = sample_mean(lr);
    CHECK(std::abs(c.mean - 0.5) < 4 * c.std_err);
  }

  TEST_CASE("path CSV") {
    Stream rng(3, 4, 5);
    const auto path = sample_peano_bm(PeanoParams{}, 0.1, 0.05, rng);
    std::ostringstream os;
    write_peano_csv(path, os);
    CHECK(os.str().rfind("t,L',R'\n", 0) == 0);
  }
}
