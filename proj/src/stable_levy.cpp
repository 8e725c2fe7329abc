#include "sle6/stable_levy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fast_math.hpp"
#include "sle6/io.hpp"

namespace sle6 {

void StableParams::validate() const {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw std::invalid_argument("StableParams: alpha must lie in (1, 2)");
  if (!(levy_const > 0.0) || !std::isfinite(levy_const))
    throw std::invalid_argument("StableParams: levy_const must be positive and finite");
  if (scheme == Scheme::hybrid && (!(delta_cut > 0.0) || !std::isfinite(delta_cut)))
    throw std::invalid_argument("StableParams: delta_cut must be positive for the hybrid scheme");
}

StableParams StableParams::exact(double levy_const) {
  StableParams p;
  p.levy_const = levy_const;
  p.scheme = Scheme::exact_increment;
  return p;
}

StableParams StableParams::hybrid(double levy_const, double delta_cut) {
  StableParams p;
  p.levy_const = levy_const;
  p.scheme = Scheme::hybrid;
  p.delta_cut = delta_cut;
  return p;
}

double default_delta_cut(double smallest_threshold) {
  return std::min(1e-3, smallest_threshold / 100.0);
}

double tail_rate(const StableParams& p, double y) {
  return p.levy_const / p.alpha * std::pow(y, -p.alpha);
}

double small_jump_variance_rate(const StableParams& p, double delta) {
  return p.levy_const * std::pow(delta, 2.0 - p.alpha) / (2.0 - p.alpha);
}

double large_jump_compensator(const StableParams& p, double delta) {
  return p.levy_const * std::pow(delta, 1.0 - p.alpha) / (p.alpha - 1.0);
}

double cms_scale(const StableParams& p) {
  const double a = p.alpha;
  const double sigma_pow = p.levy_const * std::tgamma(2.0 - a) *
                           std::abs(std::cos(std::numbers::pi * a / 2.0)) / (a * (a - 1.0));
  return std::pow(sigma_pow, 1.0 / a);
}

double sample_standard_stable(double alpha, Stream& rng) {
  constexpr double pi = std::numbers::pi;
  constexpr double beta = -1.0;
  const double t = beta * std::tan(pi * alpha / 2.0);
  const double b = std::atan(t) / alpha;
  const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
  const double v = pi * (rng.uniform() - 0.5);
  const double w = rng.exponential();
  const double av = alpha * (v + b);
  return s * std::sin(av) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - av) / w, (1.0 - alpha) / alpha);
}

double sample_pareto(double threshold, double alpha, Stream& rng) {
  if (alpha == 1.5) {
    const double y = detail::inv_cbrt(rng.uniform_pos());
    return threshold * y * y;
  }
  return threshold * std::pow(rng.uniform_pos(), -1.0 / alpha);
}

double sample_truncated_pareto(double lo, double hi, double alpha, Stream& rng) {
  const double tail = std::pow(hi / lo, -alpha);
  const double u = 1.0 - rng.uniform() * (1.0 - tail);
  if (alpha == 1.5) {
    const double y = detail::inv_cbrt(u);
    return lo * y * y;
  }
  return lo * std::pow(u, -1.0 / alpha);
}

namespace {

long sample_poisson(double mean, Stream& rng) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<long> dist(mean);
  return dist(rng);
}

void require_finite_nonneg(double x, const char* what) {
  if (!std::isfinite(x) || x < 0.0) throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
}

}  // namespace

std::size_t grid_intervals(double horizon, double grid_step) {
  if (horizon <= 0.0) return 0;
  const double k = horizon / grid_step;
  const double r = std::round(k);
  // Tolerate horizons that are a multiple of the step up to rounding.
  if (std::abs(k - r) <= 1e-9 * std::max(1.0, k)) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(k));
}

double StablePath::time_at(std::size_t i) const {
  return std::min(static_cast<double>(i) * grid_step, horizon);
}

double StablePath::value_at(double u) const {
  if (u < 0.0) throw std::invalid_argument("value_at: negative time");
  const std::size_t last = values.size() - 1;
  std::size_t i = std::min<std::size_t>(last, static_cast<std::size_t>(std::floor(u / grid_step)));
  // Guard against floor() landing one past a grid point that rounds above u.
  while (i > 0 && time_at(i) > u) --i;
  while (i < last && time_at(i + 1) <= u) ++i;
  const double t_grid = time_at(i);
  auto it = std::upper_bound(jumps.begin(), jumps.end(), u,
                             [](double t, const JumpEvent& j) { return t < j.time; });
  if (it != jumps.begin()) {
    const auto& j = *std::prev(it);
    if (j.time > t_grid) return j.post_value();
  }
  return values[i];
}

double StablePath::running_min(double u) const {
  double m = values[0];
  for (std::size_t i = 1; i < values.size() && time_at(i) <= u; ++i) m = std::min(m, values[i]);
  for (const auto& j : jumps) {
    if (j.time > u) break;
    m = std::min({m, j.pre_value, j.post_value()});
  }
  return m;
}

StableStepper::StableStepper(const StableParams& params, double jump_record_threshold, Stream& rng)
    : params_(params), threshold_(jump_record_threshold), rng_(&rng) {
  params_.validate();
  if (!(threshold_ > 0.0)) throw std::invalid_argument("jump_record_threshold must be positive");
  if (params_.scheme == Scheme::exact_increment) {
    scale_ = cms_scale(params_);
  } else {
    if (threshold_ < params_.delta_cut)
      throw std::invalid_argument(
          "jump_record_threshold below delta_cut: the ledger would miss jumps folded into the Gaussian part");
    drift_rate_ = large_jump_compensator(params_, params_.delta_cut);
    gauss_rate_ = small_jump_variance_rate(params_, params_.delta_cut);
    big_rate_ = tail_rate(params_, threshold_);
    mid_rate_ = tail_rate(params_, params_.delta_cut) - big_rate_;
  }
}

double StableStepper::advance(double dt, std::vector<JumpEvent>& ledger) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("advance: dt must be finite and >= 0");
  if (dt == 0.0) return value_;
  return params_.scheme == Scheme::exact_increment ? advance_exact(dt, ledger) : advance_hybrid(dt, ledger);
}

double StableStepper::advance_exact(double dt, std::vector<JumpEvent>& ledger) {
  const double x = scale_ * std::pow(dt, 1.0 / params_.alpha) * sample_standard_stable(params_.alpha, *rng_);
  const double pre = value_;
  time_ += dt;
  value_ += x;
  if (-x >= threshold_) ledger.push_back({time_, -x, pre});
  return value_;
}

double StableStepper::advance_hybrid(double dt, std::vector<JumpEvent>& ledger) {
  const double t0 = time_;
  const long n_big = sample_poisson(big_rate_ * dt, *rng_);
  const long n_mid = sample_poisson(mid_rate_ * dt, *rng_);
  const double alpha = params_.alpha;
  const double delta = params_.delta_cut;

  if (n_big == 0) {
    double mid_sum = 0.0;
    for (long k = 0; k < n_mid; ++k) mid_sum += sample_truncated_pareto(delta, threshold_, alpha, *rng_);
    value_ += drift_rate_ * dt + std::sqrt(gauss_rate_ * dt) * rng_->normal() - mid_sum;
    time_ = t0 + dt;
    return value_;
  }

  // Ledgered jumps split the step into sub-intervals; the continuous part and
  // the unrecorded jumps are distributed over them so left limits are exact.
  struct Big {
    double offset;
    double size;
  };
  std::vector<Big> big(static_cast<std::size_t>(n_big));
  for (auto& b : big) {
    b.offset = rng_->uniform() * dt;
    b.size = sample_pareto(threshold_, alpha, *rng_);
  }
  std::sort(big.begin(), big.end(), [](const Big& a, const Big& b) { return a.offset < b.offset; });

  std::vector<double> bucket_mid(big.size() + 1, 0.0);
  for (long k = 0; k < n_mid; ++k) {
    const double off = rng_->uniform() * dt;
    const double size = sample_truncated_pareto(delta, threshold_, alpha, *rng_);
    const auto pos = std::upper_bound(big.begin(), big.end(), off,
                                      [](double o, const Big& b) { return o < b.offset; });
    bucket_mid[static_cast<std::size_t>(pos - big.begin())] += size;
  }

  double v = value_;
  double prev = 0.0;
  for (std::size_t j = 0; j <= big.size(); ++j) {
    const double end = j < big.size() ? big[j].offset : dt;
    const double len = end - prev;
    v += drift_rate_ * len + std::sqrt(gauss_rate_ * len) * rng_->normal() - bucket_mid[j];
    if (j < big.size()) {
      ledger.push_back({t0 + big[j].offset, big[j].size, v});
      v -= big[j].size;
    }
    prev = end;
  }
  value_ = v;
  time_ = t0 + dt;
  return value_;
}

double sample_increment(const StableParams& params, double dt, Stream& rng) {
  params.validate();
  if (!std::isfinite(dt) || dt < 0.0) throw std::invalid_argument("sample_increment: dt must be finite and >= 0");
  if (dt == 0.0) return 0.0;
  if (params.scheme == Scheme::exact_increment)
    return cms_scale(params) * std::pow(dt, 1.0 / params.alpha) * sample_standard_stable(params.alpha, rng);
  const double delta = params.delta_cut;
  const long n = sample_poisson(tail_rate(params, delta) * dt, rng);
  double jumps = 0.0;
  for (long k = 0; k < n; ++k) jumps += sample_pareto(delta, params.alpha, rng);
  return large_jump_compensator(params, delta) * dt +
         std::sqrt(small_jump_variance_rate(params, delta) * dt) * rng.normal() - jumps;
}

StablePath sample_path(const StableParams& params, double horizon, double grid_step,
                       double jump_record_threshold, Stream& rng) {
  params.validate();
  require_finite_nonneg(horizon, "horizon");
  if (!(grid_step > 0.0) || !std::isfinite(grid_step)) throw std::invalid_argument("grid_step must be positive");
  if (!(jump_record_threshold > 0.0)) throw std::invalid_argument("jump_record_threshold must be positive");

  StablePath path;
  path.params = params;
  path.horizon = horizon;
  path.grid_step = grid_step;
  path.jump_record_threshold = jump_record_threshold;

  StableStepper stepper(params, jump_record_threshold, rng);
  const std::size_t n = grid_intervals(horizon, grid_step);
  path.values.reserve(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    const double dt = path.time_at(i) - path.time_at(i - 1);
    path.values.push_back(stepper.advance(dt, path.jumps));
  }
  return path;
}

std::optional<double> first_passage_below(const StablePath& path, double level) {
  if (!(level < 0.0)) throw std::invalid_argument("first_passage_below: level must be negative");
  std::size_t j = 0;
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    const double t = path.time_at(i);
    for (; j < path.jumps.size() && path.jumps[j].time <= t; ++j) {
      const auto& jump = path.jumps[j];
      if (jump.pre_value <= level || jump.post_value() <= level) return jump.time;
    }
    if (path.values[i] <= level) return t;
  }
  return std::nullopt;
}

CalibrationResult calibrate_levy_constant(const StableParams& params, Stream& rng,
                                          const CalibrationOptions& options) {
  params.validate();
  if (!(options.scale_multiplier > 0.0)) throw std::invalid_argument("scale_multiplier must be positive");
  const bool hybrid = params.scheme == Scheme::hybrid;
  std::vector<double> eps = options.thresholds;
  if (eps.empty()) {
    eps = hybrid ? std::vector<double>{0.02, 0.05, 0.1}
                 : std::vector<double>{0.5, 1.0, 2.0};
  }
  std::sort(eps.begin(), eps.end());
  if (eps.front() <= 0.0) throw std::invalid_argument("calibration thresholds must be positive");
  const double sigma = options.scale_multiplier;

  // Jump magnitudes, already multiplied by sigma, that exceed the smallest
  // threshold.
  std::vector<double> sizes;
  double time_exposure = 0.0;
  if (hybrid) {
    const double record = eps.front() / sigma;
    if (record < params.delta_cut)
      throw std::invalid_argument("calibration threshold / scale below delta_cut");
    const StablePath path = sample_path(params, options.exposure, options.exposure, record, rng);
    for (const auto& j : path.jumps) sizes.push_back(sigma * j.size);
    time_exposure = options.exposure;
  } else {
    const double scale = cms_scale(params) * std::pow(options.dt, 1.0 / params.alpha);
    for (std::size_t k = 0; k < options.increments; ++k) {
      const double x = sigma * scale * sample_standard_stable(params.alpha, rng);
      if (-x >= eps.front()) sizes.push_back(-x);
    }
    time_exposure = static_cast<double>(options.increments) * options.dt;
  }

  CalibrationResult result;
  const StableParams unit = [&] {
    StableParams u = params;
    u.levy_const = 1.0;
    return u;
  }();
  double total_count = 0.0, total_rate = 0.0, var = 0.0;
  std::vector<std::size_t> nested(eps.size(), 0);
  for (double s : sizes) {
    // Number of thresholds this jump clears; it is counted once per threshold.
    const auto w = static_cast<std::size_t>(std::upper_bound(eps.begin(), eps.end(), s) - eps.begin());
    for (std::size_t k = 0; k < w; ++k) ++nested[k];
    var += static_cast<double>(w * w);
  }
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const double rate = tail_rate(unit, eps[k]) * time_exposure;
    result.per_threshold.push_back({eps[k], nested[k], rate, static_cast<double>(nested[k]) / rate});
    total_count += static_cast<double>(nested[k]);
    total_rate += rate;
  }
  if (nested.back() < options.min_count) {
    std::ostringstream msg;
    msg << "calibrate_levy_constant: only " << nested.back() << " jumps >= " << format_double(eps.back())
        << " (need " << options.min_count << "); counts per threshold:";
    for (std::size_t k = 0; k < eps.size(); ++k) msg << ' ' << format_double(eps[k]) << ':' << nested[k];
    throw EstimationError(msg.str());
  }
  result.levy_const = make_estimate(total_count / total_rate, std::sqrt(var) / total_rate, sizes.size());
  return result;
}

void write_path_csv(const StablePath& path, std::ostream& out) {
  out << "time,value\n";
  for (std::size_t i = 0; i < path.values.size(); ++i)
    write_row(out, {format_double(path.time_at(i)), format_double(path.values[i])});
}

void write_jumps_csv(const StablePath& path, std::ostream& out) {
  out << "time,size\n";
  for (const auto& j : path.jumps) write_row(out, {format_double(j.time), format_double(j.size)});
}

}  // namespace sle6
