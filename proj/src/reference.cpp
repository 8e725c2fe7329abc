#include "sle6/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sle6 {

std::vector<double> conditioned_walk_marginal(double dim, int steps, int at_step) {
  if (!(dim > 0.0 && dim < 2.0)) throw std::invalid_argument("conditioned_walk_marginal: dim must lie in (0, 2)");
  if (steps < 2 || steps % 2) throw std::invalid_argument("conditioned_walk_marginal: steps must be even and >= 2");
  if (at_step < 1 || at_step >= steps) throw std::invalid_argument("conditioned_walk_marginal: at_step out of range");

  // Heights beyond ~14 sqrt(steps) carry no measurable mass.
  const int top = std::min(steps, static_cast<int>(14.0 * std::sqrt(double(steps))) + 2);
  const double a = 2.0 - dim;
  std::vector<double> up(static_cast<std::size_t>(top + 2), 0.0);
  for (int k = 1; k <= top; ++k)
    up[k] = (std::pow(k, a) - std::pow(k - 1, a)) / (std::pow(k + 1, a) - std::pow(k - 1, a));

  // Forward weights of paths that have stayed >= 1 since step 1.
  std::vector<double> f(up.size(), 0.0), g(up.size(), 0.0);
  f[1] = 1.0;
  for (int s = 1; s < at_step; ++s) {
    std::fill(g.begin(), g.end(), 0.0);
    for (int k = 1; k <= top; ++k) {
      if (f[k] == 0.0) continue;
      if (k + 1 <= top) g[k + 1] += f[k] * up[k];
      if (k > 1) g[k - 1] += f[k] * (1.0 - up[k]);
    }
    double total = 0.0;
    for (double x : g) total += x;
    for (double& x : g) x /= total;
    std::swap(f, g);
  }

  // Probability of first reaching 0 after exactly j more steps.
  std::vector<double> h(up.size(), 0.0), h2(up.size(), 0.0);
  h[0] = 1.0;
  for (int j = 1; j <= steps - at_step; ++j) {
    double peak = 0.0;
    h2[0] = 0.0;
    for (int k = 1; k <= top; ++k) {
      h2[k] = up[k] * (k + 1 <= top ? h[k + 1] : 0.0) + (1.0 - up[k]) * h[k - 1];
      peak = std::max(peak, h2[k]);
    }
    for (int k = 0; k <= top; ++k) h[k] = h2[k] / peak;
  }

  std::vector<double> p(up.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += p[k] = f[k] * h[k];
  for (double& x : p) x /= total;
  return p;
}

double jittered_walk_cdf(const std::vector<double>& probs, int steps, double duration, double x) {
  const double y = x * std::sqrt(double(steps) / duration);
  double c = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k)
    if (probs[k] > 0.0) c += probs[k] * std::clamp((y - double(k) + 1.0) / 2.0, 0.0, 1.0);
  return c;
}

double strip_line_covariance(double dx) {
  if (!(dx > 0.0)) throw std::invalid_argument("strip_line_covariance: dx must be positive");
  // Boundary points x1 < x2 map to e^x1 < e^x2. The half-plane covariance
  // -2 log(e^x2 - e^x1) = -2 x2 - 2 log(1 - e^-dx); the -2 x2 = -(x1 + x2) - dx
  // part is carried by the vertical averages (a two-sided Brownian motion
  // with variance 2 per unit x, plus gauge terms in x1 and x2 alone).
  const double x1 = 0.0, x2 = dx;
  const double half_plane = -2.0 * std::log(std::exp(x2) - std::exp(x1));
  return half_plane + (x1 + x2) + dx;
}

}  // namespace sle6
