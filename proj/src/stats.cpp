#include "sle6/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace sle6 {

Estimate make_estimate(double mean, double std_err, std::size_t n) {
  if (std_err < 0.0) throw std::invalid_argument("make_estimate: negative standard error");
  return {mean, std_err, n, mean - 1.96 * std_err, mean + 1.96 * std_err};
}

Estimate sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("sample_mean: empty sample");
  const auto n = xs.size();
  // Two-pass for numerical stability.
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  return make_estimate(mean, std::sqrt(var / static_cast<double>(n)), n);
}

Interval clopper_pearson(std::size_t successes, std::size_t n, double level) {
  if (n == 0) throw std::invalid_argument("clopper_pearson: n must be positive");
  if (successes > n) throw std::invalid_argument("clopper_pearson: successes > n");
  const double alpha = 1.0 - level;
  const double k = static_cast<double>(successes);
  const double nn = static_cast<double>(n);
  Interval out;
  out.lo = successes == 0 ? 0.0 : boost::math::ibeta_inv(k, nn - k + 1.0, alpha / 2.0);
  out.hi = successes == n ? 1.0 : boost::math::ibeta_inv(k + 1.0, nn - k, 1.0 - alpha / 2.0);
  return out;
}

Estimate binomial_estimate(std::size_t successes, std::size_t n) {
  if (n == 0) throw std::invalid_argument("binomial_estimate: n must be positive");
  const double p = static_cast<double>(successes) / static_cast<double>(n);
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  Estimate e = make_estimate(p, se, n);
  if (successes < 30) {
    const Interval ci = clopper_pearson(successes, n);
    e.ci95_lo = ci.lo;
    e.ci95_hi = ci.hi;
  }
  return e;
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median: empty sample");
  const auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double upper = xs[mid];
  if (xs.size() % 2 == 1) return upper;
  const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    // Theta-function form converges quickly for small lambda.
    const double a = -pi * pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 20; k += 2) s += std::exp(a * k * k);
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {

double ks_pvalue(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_pvalue(d, n)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_pvalue(d, na * nb / (na + nb))};
}

double ks_critical_value(double alpha, double n_eff) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(n_eff);
}

double chi_square_1dof_pvalue(double statistic) {
  return std::erfc(std::sqrt(std::max(statistic, 0.0) / 2.0));
}

Estimate correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("correlation: need matched samples of size >= 3");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return make_estimate(r, (1.0 - r * r) / std::sqrt(n), x.size());
}

PowerLawFit fit_power_law(std::span<const PowerLawPoint> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
  bool weighted = false;
  for (const auto& p : points) {
    if (!(p.x > 0.0) || !(p.y > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y))
      throw std::invalid_argument("fit_power_law: coordinates must be positive and finite");
    if (p.y_stderr < 0.0) throw std::invalid_argument("fit_power_law: negative stderr");
    if (p.y_stderr > 0.0) weighted = true;
  }
  if (weighted) {
    for (const auto& p : points)
      if (p.y_stderr == 0.0)
        throw std::invalid_argument("fit_power_law: mixed zero and non-zero stderr");
  }

  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double lx = std::log(p.x), ly = std::log(p.y);
    const double rel = p.y_stderr / p.y;
    const double w = weighted ? 1.0 / (rel * rel) : 1.0;
    sw += w;
    sx += w * lx;
    sy += w * ly;
    sxx += w * lx * lx;
    sxy += w * lx * ly;
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw std::invalid_argument("fit_power_law: x values are degenerate");
  const double slope = (sw * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / sw;

  double rss = 0.0;
  for (const auto& p : points) {
    const double r = std::log(p.y) - intercept - slope * std::log(p.x);
    const double rel = p.y_stderr / p.y;
    rss += weighted ? r * r / (rel * rel) : r * r;
  }
  // Known measurement errors give the covariance directly; otherwise scale by
  // the residual variance.
  const double scale = weighted ? 1.0 : rss / static_cast<double>(points.size() - 2);
  PowerLawFit fit;
  fit.slope = make_estimate(slope, std::sqrt(scale * sw / det), points.size());
  fit.intercept = make_estimate(intercept, std::sqrt(scale * sxx / det), points.size());
  fit.residual_ss = rss;
  fit.points = points.size();
  return fit;
}

}  // namespace sle6
