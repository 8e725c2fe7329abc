#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"
#include "sle6/disk_field.hpp"
#include "sle6/reference.hpp"
#include "sle6/stats.hpp"

using namespace sle6;

namespace {

const double kGamma = std::sqrt(8.0 / 3.0);

// The Bessel bridge of dimension 4 - d from 0 to 0 over [0, T] has
// e_t^2 / (2 s (1 - s) T) ~ Gamma((4 - d) / 2) at s = t / T.
double bridge_cdf(double x, double dim, double s, double T) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p((4.0 - dim) / 2.0, x * x / (2.0 * s * (1.0 - s) * T));
}

double bridge_mean(double dim, double s, double T) {
  const double k = (4.0 - dim) / 2.0;
  return std::sqrt(2.0 * s * (1.0 - s) * T) * std::tgamma(k + 0.5) / std::tgamma(k);
}

}  // namespace

TEST_SUITE("disk_field") {
  TEST_CASE("Bessel dimension and parameter validation") {
    CHECK(bessel_dim_for_gamma(kGamma) == doctest::Approx(1.5));
    DiskFieldParams p;
    CHECK(p.bessel_dim() == doctest::Approx(1.5));
    CHECK(p.q() == doctest::Approx(2.0 / kGamma + kGamma / 2.0));
    p.gamma = 1.1;  // gamma^2 < 4/3 gives a non-positive dimension
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = DiskFieldParams{};
    p.gmc_scale = p.x_step / 10.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }

  TEST_CASE("excursion marginals match the Bessel bridge law") {
    const double dim = 1.5, T = 2.0;
    std::vector<double> a, b;
    for (int i = 0; i < 20000; ++i) {
      Stream rng(1, hash_tag("bridge"), i);
      const auto e = sample_bessel_excursion(dim, T, T / 4.0, rng);
      REQUIRE(e.values.size() == 5);
      CHECK(e.values.front() == 0.0);
      CHECK(e.values.back() == 0.0);
      a.push_back(e.values[1]);
      b.push_back(e.values[2]);
    }
    CHECK(ks_one_sample(a, [&](double x) { return bridge_cdf(x, dim, 0.25, T); }).p_value > 1e-3);
    CHECK(ks_one_sample(b, [&](double x) { return bridge_cdf(x, dim, 0.5, T); }).p_value > 1e-3);
  }

  TEST_CASE("excursion values are positive inside and the grid is consistent") {
    Stream rng(2, hash_tag("grid"), 0);
    const auto e = sample_bessel_excursion(1.5, 1.0, 1e-3, rng);
    CHECK(e.values.size() == 1001);
    for (std::size_t k = 1; k + 1 < e.values.size(); ++k) REQUIRE(e.values[k] > 0.0);
    CHECK(e.time_at(500) == doctest::Approx(0.5));
    CHECK_THROWS(sample_bessel_excursion(2.5, 1.0, 1e-3, rng));
  }

  TEST_CASE("walk oracle reproduces the bridge mean") {
    const double dim = 1.5;
    for (double s : {0.25, 0.5}) {
      const int N = 2000;
      const auto p = conditioned_walk_marginal(dim, N, int(s * N));
      double total = 0.0, mean = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        total += p[k];
        mean += p[k] * double(k) / std::sqrt(double(N));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(mean == doctest::Approx(bridge_mean(dim, s, 1.0)).epsilon(3e-3));
      // Jittered CDF is a CDF.
      CHECK(jittered_walk_cdf(p, N, 1.0, 0.0) == doctest::Approx(0.0).epsilon(1e-3));
      CHECK(jittered_walk_cdf(p, N, 1.0, 10.0) == doctest::Approx(1.0));
    }
    CHECK_THROWS(conditioned_walk_marginal(1.5, 101, 50));
  }

  TEST_CASE("radial profile has quadratic variation 2 per unit x") {
    QvTally pooled;
    for (int i = 0; i < 100; ++i) {
      Stream rng(3, hash_tag("qv"), i);
      const auto e = sample_bessel_excursion(1.5, 1.0, 1e-4, rng);
      pooled += radial_quadratic_variation(e, kGamma, 0.01);
    }
    CHECK(pooled.per_unit_x() == doctest::Approx(2.0).epsilon(0.03));
  }

  TEST_CASE("radial profile is centred at the maximum and increasing in x") {
    Stream rng(4, hash_tag("profile"), 0);
    const auto e = sample_bessel_excursion(1.5, 1.0, 1e-3, rng);
    const auto p = radial_profile(e, kGamma);
    for (std::size_t k = 1; k < p.x.size(); ++k) CHECK(p.x[k] > p.x[k - 1]);
    std::size_t imax = 0;
    for (std::size_t k = 0; k < p.h0.size(); ++k)
      if (p.h0[k] > p.h0[imax]) imax = k;
    CHECK(p.x[imax] == doctest::Approx(0.0));
    const auto r = resample_profile(p, 0.01);
    for (std::size_t k = 1; k < r.x.size(); ++k) CHECK(r.x[k] - r.x[k - 1] == doctest::Approx(0.01));
  }

  TEST_CASE("lateral modes integrate to zero on every vertical segment") {
    std::vector<double> x{0.0, 0.1, 0.2};
    Stream rng(5, hash_tag("modes"), 0);
    const auto modes = sample_lateral_modes(x, 64, rng);
    for (std::size_t j = 0; j < x.size(); ++j) {
      // Simpson's rule on [0, pi]; cos(n y) has zero mean for n >= 1.
      const int m = 4000;
      const double h = std::numbers::pi / m;
      double s = modes.value(j, 0.0) + modes.value(j, std::numbers::pi);
      for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * modes.value(j, k * h);
      CHECK(std::abs(s * h / 3.0) < 1e-6);
    }
    const auto tr = trace_from_modes(modes);
    CHECK(tr.line0[1] == doctest::Approx(modes.value(1, 0.0)));
    CHECK(tr.line_pi[2] == doctest::Approx(modes.value(2, std::numbers::pi)));
  }

  TEST_CASE("mode covariance agrees with the strip covariance from the conformal map") {
    for (double dx : {0.01, 0.05, 0.1, 0.5, 2.0})
      CHECK(lateral_line_covariance(dx, 100000) == doctest::Approx(strip_line_covariance(dx)).epsilon(1e-6));
    CHECK(strip_line_covariance(0.1) == doctest::Approx(-2.0 * std::log(1.0 - std::exp(-0.1))).epsilon(1e-12));
  }

  TEST_CASE("empirical lateral covariance matches the truncated series") {
    std::vector<double> x;
    for (int j = 0; j <= 2000; ++j) x.push_back(j * 0.01);
    const int K = 64;
    double c0 = 0.0, c5 = 0.0;
    std::size_t cnt = 0;
    for (int i = 0; i < 200; ++i) {
      Stream rng(6, hash_tag("lat"), i);
      const auto tr = sample_lateral_trace(x, K, rng);
      for (std::size_t j = 0; j + 5 < x.size(); j += 50) {
        c0 += tr.line0[j] * tr.line0[j];
        c5 += tr.line0[j] * tr.line0[j + 5];
        ++cnt;
      }
    }
    CHECK(c0 / cnt == doctest::Approx(lateral_line_covariance(0.0, K)).epsilon(0.05));
    CHECK(c5 / cnt == doctest::Approx(lateral_line_covariance(0.05, K)).epsilon(0.05));
  }

  TEST_CASE("additive shift multiplies the measure") {
    DiskFieldParams p;
    Stream rng(7, hash_tag("shift"), 0);
    const auto s = sample_disk(p, rng);
    const double C = 0.83;
    const auto m = boundary_gmc(s.radial, s.trace, p.gamma, p.gmc_scale, C);
    const double f = std::exp(p.gamma / 2.0 * C);
    REQUIRE(m.atoms.size() == s.measure.atoms.size());
    for (std::size_t k = 0; k < m.atoms.size(); ++k)
      CHECK(std::abs(m.atoms[k].mass / (f * s.measure.atoms[k].mass) - 1.0) < 1e-12);
  }

  TEST_CASE("measure is in circle order and sums to its total") {
    DiskFieldParams p;
    Stream rng(8, hash_tag("order"), 0);
    const auto s = sample_disk(p, rng);
    const auto& atoms = s.measure.atoms;
    const std::size_t n = s.trace.x.size();
    REQUIRE(atoms.size() == 2 * n);
    double total = 0.0;
    for (const auto& a : atoms) total += a.mass;
    CHECK(total == doctest::Approx(s.measure.total).epsilon(1e-12));
    CHECK(atoms.front().line == 0);
    CHECK(atoms.back().line == 1);
    CHECK(atoms[0].x_lo < atoms[1].x_lo);
    CHECK(atoms[n].x_lo > atoms[n + 1].x_lo);
  }

  TEST_CASE("two marked points split the total length") {
    DiskFieldParams p;
    Stream rng(9, hash_tag("marks"), 0);
    const auto s = sample_disk(p, rng);
    std::vector<double> frac;
    for (int i = 0; i < 2000; ++i) {
      const auto [l, r] = mark_two_points(s.measure, rng);
      CHECK(l + r == doctest::Approx(s.measure.total).epsilon(1e-14));
      CHECK(l >= 0.0);
      frac.push_back(l / s.measure.total);
    }
    CHECK(ks_one_sample(frac, [](double u) { return std::clamp(u, 0.0, 1.0); }).p_value > 1e-3);
    const auto [l, r] = split_at(s.measure, 0.9 * s.measure.total, 0.1 * s.measure.total);
    CHECK(l == doctest::Approx(0.2 * s.measure.total));
    CHECK(r == doctest::Approx(0.8 * s.measure.total));
  }

  TEST_CASE("conditioning on length is exact and idempotent") {
    DiskFieldParams p;
    Stream rng(10, hash_tag("length"), 0);
    auto s = sample_disk(p, rng);
    s.marks = mark_two_points(s.measure, rng);
    const auto c = condition_on_length(s, 3.0);
    CHECK(c.measure.total == 3.0);
    CHECK(c.scale_normalized);
    double total = 0.0;
    for (const auto& a : c.measure.atoms) total += a.mass;
    CHECK(total == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(c.marks->first + c.marks->second == doctest::Approx(3.0));
    CHECK(c.marks->first / 3.0 == doctest::Approx(s.marks->first / s.measure.total));
    // Recomputing the measure from the shifted field reproduces it.
    const auto m = boundary_gmc(c.radial, c.trace, p.gamma, p.gmc_scale);
    CHECK(m.total == doctest::Approx(3.0).epsilon(1e-10));
    const auto again = condition_on_length(c, 3.0);
    CHECK(again.applied_shift == doctest::Approx(c.applied_shift).epsilon(1e-12));
    for (std::size_t k = 0; k < c.radial.h0.size(); ++k) CHECK(again.radial.h0[k] == doctest::Approx(c.radial.h0[k]));
  }

  TEST_CASE("CSV schemas") {
    DiskFieldParams p;
    Stream rng(11, hash_tag("csv"), 0);
    const auto s = sample_disk(p, rng);
    std::ostringstream a, b;
    write_disk_csv(s, a);
    write_measure_csv(s.measure, b);
    CHECK(a.str().rfind("x,h0,trace_line0,trace_line1\n", 0) == 0);
    CHECK(b.str().rfind("x_lo,x_hi,mass\n", 0) == 0);
  }
}
