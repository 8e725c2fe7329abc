#pragma once

#include <ostream>
#include <utility>
#include <vector>

#include "sle6/random.hpp"

namespace sle6 {

/// Correlated planar Brownian motion (L', R') with Var L'_t = Var R'_t =
/// var_rate t and Cov(L'_t, R'_t) = -var_rate cos(pi gamma^2 / 4) t.
struct PeanoParams {
  double gamma = 1.6329931618554521;  ///< sqrt(8/3)
  double var_rate = 1.0;

  /// Requires gamma in [sqrt 2, 2) and var_rate > 0.
  void validate() const;
  /// -cos(pi gamma^2 / 4); 1/2 at gamma^2 = 8/3, 0 at gamma^2 = 2.
  [[nodiscard]] double correlation() const;
};

struct PeanoPath {
  double step = 0.0;
  std::vector<double> t;
  std::vector<double> left;
  std::vector<double> right;
};

PeanoPath sample_peano_bm(const PeanoParams& params, double horizon, double step, Stream& rng);

/// (L'_horizon, R'_horizon) drawn directly from the bivariate normal law.
std::pair<double, double> sample_peano_endpoint(const PeanoParams& params, double horizon, Stream& rng);

/// Columns t, L', R'.
void write_peano_csv(const PeanoPath& path, std::ostream& out);

}  // namespace sle6
