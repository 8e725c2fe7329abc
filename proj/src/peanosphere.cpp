#include "sle6/peanosphere.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sle6/io.hpp"

namespace sle6 {

void PeanoParams::validate() const {
  if (!(gamma >= std::numbers::sqrt2 && gamma < 2.0))
    throw std::invalid_argument("PeanoParams: gamma must lie in [sqrt 2, 2)");
  if (!(var_rate > 0.0) || !std::isfinite(var_rate)) throw std::invalid_argument("PeanoParams: var_rate must be positive");
}

double PeanoParams::correlation() const { return -std::cos(std::numbers::pi * gamma * gamma / 4.0); }

namespace {

std::pair<double, double> correlated_pair(double rho, double sd, Stream& rng) {
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  return {sd * z1, sd * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2)};
}

}  // namespace

PeanoPath sample_peano_bm(const PeanoParams& params, double horizon, double step, Stream& rng) {
  params.validate();
  if (!(step > 0.0)) throw std::invalid_argument("sample_peano_bm: step must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("sample_peano_bm: horizon must be >= 0");
  const auto n = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
  const double rho = params.correlation();
  PeanoPath p;
  p.step = step;
  p.t.push_back(0.0);
  p.left.push_back(0.0);
  p.right.push_back(0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double t = k == n ? horizon : double(k) * step;
    const double dt = t - p.t.back();
    const auto [dl, dr] = correlated_pair(rho, std::sqrt(params.var_rate * dt), rng);
    p.t.push_back(t);
    p.left.push_back(p.left.back() + dl);
    p.right.push_back(p.right.back() + dr);
  }
  return p;
}

std::pair<double, double> sample_peano_endpoint(const PeanoParams& params, double horizon, Stream& rng) {
  params.validate();
  if (!(horizon >= 0.0)) throw std::invalid_argument("sample_peano_endpoint: horizon must be >= 0");
  return correlated_pair(params.correlation(), std::sqrt(params.var_rate * horizon), rng);
}

void write_peano_csv(const PeanoPath& path, std::ostream& out) {
  out << "t,L',R'\n";
  for (std::size_t k = 0; k < path.t.size(); ++k)
    write_row(out, {format_double(path.t[k]), format_double(path.left[k]), format_double(path.right[k])});
}

}  // namespace sle6
