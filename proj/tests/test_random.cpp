#include <cmath>
#include <vector>

#include "doctest.h"
#include "sle6/random.hpp"
#include "sle6/stats.hpp"

using namespace sle6;

TEST_SUITE("random") {
  TEST_CASE("same key gives the same stream") {
    Stream a(7, hash_tag("x"), 3), b(7, hash_tag("x"), 3);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
  }

  TEST_CASE("different index, tag or seed changes the stream") {
    Stream base(7, hash_tag("x"), 3);
    const auto first = base();
    CHECK(Stream(7, hash_tag("x"), 4)() != first);
    CHECK(Stream(7, hash_tag("y"), 3)() != first);
    CHECK(Stream(8, hash_tag("x"), 3)() != first);
  }

  TEST_CASE("substreams are deterministic and distinct") {
    const Stream s(1, 2, 3);
    Stream c1 = s.substream(5), c2 = s.substream(5), c3 = s.substream(6);
    const auto v = c1();
    CHECK(v == c2());
    CHECK(v != c3());
  }

  TEST_CASE("uniform, exponential and normal moments") {
    Stream rng(11, hash_tag("moments"), 0);
    const int n = 200000;
    std::vector<double> u(n), e(n), z(n), z2(n);
    for (int i = 0; i < n; ++i) {
      u[i] = rng.uniform();
      e[i] = rng.exponential();
      z[i] = rng.normal();
      z2[i] = z[i] * z[i];
    }
    const auto mu = sample_mean(u), me = sample_mean(e), mz = sample_mean(z), mz2 = sample_mean(z2);
    CHECK(std::abs(mu.mean - 0.5) < 4 * mu.std_err);
    CHECK(std::abs(me.mean - 1.0) < 4 * me.std_err);
    CHECK(std::abs(mz.mean) < 4 * mz.std_err);
    CHECK(std::abs(mz2.mean - 1.0) < 4 * mz2.std_err);
    const auto ks = ks_one_sample(u, [](double x) { return x; });
    CHECK(ks.p_value > 1e-3);
  }

  TEST_CASE("parallel_for output does not depend on the thread count") {
    auto run = [](unsigned threads) {
      std::vector<double> out(1000);
      parallel_for(out.size(), threads, [&](std::size_t i) {
        Stream r(3, hash_tag("pf"), i);
        out[i] = r.normal();
      });
      return out;
    };
    const auto one = run(1);
    CHECK(one == run(3));
    CHECK(one == run(8));
  }

  TEST_CASE("parallel_for rethrows worker exceptions") {
    CHECK_THROWS_AS(parallel_for(100, 4, [](std::size_t i) {
                      if (i == 57) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
  }
}
