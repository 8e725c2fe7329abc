#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "sle6/disk_process.hpp"
#include "sle6/wedge_process.hpp"

using namespace sle6;

TEST_SUITE("wedge_process") {
  TEST_CASE("floor pair validation and time unit") {
    FloorPair f{0.5, 0.5};
    CHECK(f.time_unit() == doctest::Approx(1.0));
    FloorPair g{1.0, 1.0};
    CHECK(g.time_unit() == doctest::Approx(std::pow(2.0, 1.5)));
    CHECK_THROWS_AS((FloorPair{0.0, 1.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((FloorPair{1.0, -1.0}.validate()), std::invalid_argument);
  }

  TEST_CASE("exit time is the first floor crossing of either coordinate") {
    const auto p = StableParams::exact(1.0);
    const FloorPair f{0.5, 0.5};
    for (int i = 0; i < 200; ++i) {
      Stream rng(1, hash_tag("exit"), i);
      const WedgeZ z = sample_wedge(p, f, 3.0, 0.005, 0.01, rng);
      const auto tl = first_passage_below(z.left, -f.left);
      const auto tr = first_passage_below(z.right, -f.right);
      if (!tl && !tr) {
        CHECK_FALSE(z.exit_time.has_value());
        continue;
      }
      REQUIRE(z.exit_time.has_value());
      const double expect = std::min(tl.value_or(INFINITY), tr.value_or(INFINITY));
      CHECK(*z.exit_time == doctest::Approx(expect));
      CHECK_FALSE(z.alive_at(*z.exit_time));
      CHECK(z.alive_at(*z.exit_time * 0.999));
      // Alive means both coordinates are above their floors.
      for (double u = 0.0; u < *z.exit_time; u += 0.05) {
        CHECK(z.left.value_at(u) > -f.left);
        CHECK(z.right.value_at(u) > -f.right);
      }
    }
  }

  TEST_CASE("stopping at exit keeps the prefix") {
    const auto p = StableParams::exact(1.0);
    const FloorPair f{0.3, 0.4};
    for (int i = 0; i < 50; ++i) {
      Stream a(2, hash_tag("prefix"), i), b(2, hash_tag("prefix"), i);
      const WedgeZ full = sample_wedge(p, f, 2.0, 0.01, 0.01, a, false);
      const WedgeZ cut = sample_wedge(p, f, 2.0, 0.01, 0.01, b, true);
      CHECK(full.exit_time == cut.exit_time);
      for (std::size_t k = 0; k < cut.left.values.size(); ++k) CHECK(cut.left.values[k] == full.left.values[k]);
    }
  }

  TEST_CASE("bubbles are ledgered jumps above the threshold") {
    const auto p = StableParams::hybrid(1.0, 1e-3);
    Stream rng(3, hash_tag("bubbles"), 0);
    const WedgeZ z = sample_wedge(p, FloorPair{5.0, 5.0}, 1.0, 0.01, 0.05, rng);
    const auto all = extract_bubbles(z, 1.0, 0.05);
    CHECK(all.size() == z.left.jumps.size() + z.right.jumps.size());
    const auto big = extract_bubbles(z, 1.0, 0.2);
    for (const auto& b : big) CHECK(b.boundary_length >= 0.2);
    for (std::size_t k = 1; k < all.size(); ++k) CHECK(all[k - 1].time <= all[k].time);
    CHECK_THROWS_AS(extract_bubbles(z, 1.0, 0.01), std::invalid_argument);
    std::ostringstream os;
    write_bubbles_csv(all, os);
    CHECK(os.str().rfind("time,side,boundary_length\n", 0) == 0);
  }

  TEST_CASE("regularity event") {
    const auto p = StableParams::exact(1.0);
    const FloorPair f{0.5, 0.5};
    Stream rng(4, hash_tag("reg"), 0);
    const WedgeZ z = sample_wedge(p, f, 1.0, 0.01, 0.01, rng);
    const double m = std::min(z.left.running_min(0.5) + f.left, z.right.running_min(0.5) + f.right);
    if (m > 0.0 && m * 1.01 < 0.5) {
      CHECK(regularity_event(z, 0.5, m * 0.99));
      CHECK_FALSE(regularity_event(z, 0.5, m * 1.01));
    }
    CHECK_THROWS(regularity_event(z, 0.5, 0.6));
    CHECK_THROWS(regularity_event(z, 2.0, 0.1));
  }

  TEST_CASE("wedge CSV columns") {
    const auto p = StableParams::exact(1.0);
    Stream rng(5, hash_tag("csv"), 0);
    const WedgeZ z = sample_wedge(p, FloorPair{}, 0.1, 0.01, 0.01, rng);
    std::ostringstream os;
    write_wedge_csv(z, os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "u,L,R,alive_flag");
    std::size_t rows = 0;
    for (std::string line; std::getline(is, line);) ++rows;
    CHECK(rows == z.left.values.size());
  }

  TEST_CASE("ensemble results do not depend on the thread count") {
    EnsembleSpec spec;
    spec.params = StableParams::exact(1.0);
    spec.n = 300;
    spec.seed = 17;
    auto run = [&](unsigned threads) {
      EnsembleSpec s = spec;
      s.threads = threads;
      return map_wedges<double>(s, 1.0, [](std::size_t, const WedgeZ& z) { return rn_weight(z, 0.5); });
    };
    const auto a = run(1);
    CHECK(a == run(4));
  }

  TEST_CASE("boundary length scaling maps paths onto paths") {
    // Floors scaled by lambda with time scaled by lambda^(3/2): with the
    // default grid and threshold the paired samples coincide up to rounding.
    EnsembleSpec a;
    a.params = StableParams::exact(1.0);
    a.floors = {0.3, 0.7};
    a.n = 200;
    EnsembleSpec b = a;
    const double lambda = 2.0;
    b.floors = {0.6, 1.4};
    const double s = std::pow(lambda, 1.5);
    const auto wa = map_wedges<double>(a, 1.0, [](std::size_t, const WedgeZ& z) { return rn_weight(z, 0.8); });
    const auto wb = map_wedges<double>(b, s, [&](std::size_t, const WedgeZ& z) { return rn_weight(z, 0.8 * s); });
    for (std::size_t i = 0; i < wa.size(); ++i) CHECK(wb[i] == doctest::Approx(wa[i]).epsilon(1e-9));
  }
}
