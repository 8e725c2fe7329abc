#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "sle6/disk_process.hpp"

using namespace sle6;

TEST_SUITE("disk_process") {
  TEST_CASE("weight at the origin and on the shifted diagonal") {
    const FloorPair f{0.5, 0.5};
    CHECK(rn_weight_value(0.0, f, true) == 1.0);
    const double expect = 1.0 / (4.0 * std::sqrt(2.0));
    CHECK(std::abs(rn_weight_value(1.0, f, true) / expect - 1.0) < 1e-12);
    CHECK(std::abs(rn_weight_value(1.0, f, true) - 0.1767767) < 1e-7);
    CHECK(rn_weight_value(0.3, f, false) == 0.0);
    const FloorPair g{0.2, 1.3};
    CHECK(std::abs(rn_weight_value(1.5, g, true) / expect - 1.0) < 1e-12);
  }

  TEST_CASE("weight of a sampled path") {
    const auto p = StableParams::exact(1.0);
    const FloorPair f{0.5, 0.5};
    for (int i = 0; i < 100; ++i) {
      Stream rng(1, hash_tag("weight"), i);
      const WedgeZ z = sample_wedge(p, f, 2.0, 0.01, 0.01, rng);
      CHECK(rn_weight(z, 0.0) == 1.0);
      for (double u : {0.3, 1.0, 2.0}) {
        const double w = rn_weight(z, u);
        if (z.alive_at(u)) {
          const double s = z.left.value_at(u) + z.right.value_at(u);
          CHECK(w == doctest::Approx(std::pow(s / f.sum() + 1.0, -2.5)));
          CHECK(w > 0.0);
        } else {
          CHECK(w == 0.0);
        }
      }
      CHECK_THROWS(rn_weight(z, 2.5));
    }
  }

  TEST_CASE("survival estimation input checks") {
    EnsembleSpec spec;
    spec.n = 1000;
    const std::vector<double> empty;
    CHECK_THROWS_AS(estimate_survival(spec, empty), std::invalid_argument);
    const std::vector<double> unsorted{0.5, 0.1};
    CHECK_THROWS_AS(estimate_survival(spec, unsorted), std::invalid_argument);
    spec.n = 10;
    const std::vector<double> ok{0.1};
    CHECK_THROWS_AS(estimate_survival(spec, ok), std::invalid_argument);
  }

  TEST_CASE("survival curve starts at one and decreases") {
    EnsembleSpec spec;
    spec.n = 4000;
    spec.seed = 3;
    const std::vector<double> grid{0.0, 0.1, 0.5, 1.0, 3.0};
    const auto c = estimate_survival(spec, grid);
    REQUIRE(c.points.size() == grid.size());
    CHECK(c.points[0].estimate.mean == 1.0);
    CHECK(c.points[0].estimate.std_err == 0.0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
      const double se = std::hypot(c.points[k].estimate.std_err, c.points[k - 1].estimate.std_err);
      CHECK(c.points[k].estimate.mean <= c.points[k - 1].estimate.mean + 3 * se);
    }
    std::ostringstream os;
    write_survival_csv(c, os);
    CHECK(os.str().rfind("u,estimate,stderr,ess\n", 0) == 0);
  }

  TEST_CASE("weighted expectation of one equals survival") {
    EnsembleSpec spec;
    spec.n = 2000;
    spec.seed = 5;
    const std::vector<double> grid{0.4};
    const auto surv = estimate_survival(spec, grid);
    const auto we = weighted_expectation([](const WedgeZ&, double) { return 1.0; }, 0.4, spec);
    CHECK(we.estimate.mean == doctest::Approx(surv.points[0].estimate.mean).epsilon(1e-12));
    CHECK(we.ess == doctest::Approx(surv.points[0].ess));
  }

  TEST_CASE("bin grid indexing") {
    const auto g = BinGrid::around_floors(FloorPair{0.5, 0.5}, 4);
    CHECK(g.size() == 36);
    CHECK(g.index_of(-10.0, -10.0) == 0);
    CHECK(g.index_of(10.0, 10.0) == g.size() - 1);
    CHECK(g.index_of(0.0, 0.0) != g.index_of(0.3, 0.0));
  }

  TEST_CASE("supermartingale report bookkeeping") {
    EnsembleSpec spec;
    spec.n = 2000;
    spec.seed = 9;
    const auto rep = supermartingale_check(0.1, 0.2, spec, BinGrid::around_floors(spec.floors));
    std::size_t occupied = 0, flagged = 0, total = 0;
    for (const auto& b : rep.bins) {
      total += b.count;
      if (b.count >= 2) ++occupied;
      if (b.flagged) ++flagged;
    }
    CHECK(rep.occupied == occupied);
    CHECK(rep.flagged == flagged);
    CHECK(total <= spec.n);
    CHECK(rep.flagged_fraction() <= 0.2);
  }

  TEST_CASE("endpoint slabs respect the deterministic weight bound") {
    EnsembleSpec spec;
    spec.n = 2000;
    spec.seed = 11;
    const std::vector<double> u{0.5, 1.0};
    const std::vector<double> widths{0.1, 0.5, std::numeric_limits<double>::infinity()};
    const auto rep = endpoint_diagnostics(spec, u, widths);
    for (const auto& pt : rep.points) {
      for (const auto& s : pt.slabs) {
        if (s.count) CHECK(s.min_weight >= s.lower_bound);
        CHECK(s.mass.mean <= pt.survival.mean + 1e-15);
      }
      CHECK(pt.slabs.back().mass.mean == doctest::Approx(pt.survival.mean).epsilon(1e-15));
    }
    std::ostringstream os;
    write_endpoint_json(rep, os);
    const auto j = nlohmann::json::parse(os.str());
    CHECK(j.contains("points"));
  }
}
