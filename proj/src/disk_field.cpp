#include "sle6/disk_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "sle6/io.hpp"

namespace sle6 {

double bessel_dim_for_gamma(double gamma) { return 3.0 - 4.0 / (gamma * gamma); }

void DiskFieldParams::validate() const {
  if (!(gamma > 0.0 && gamma < 2.0)) throw std::invalid_argument("DiskFieldParams: gamma must lie in (0, 2)");
  const double d = bessel_dim();
  if (!(d > 0.0 && d < 2.0))
    throw std::invalid_argument("DiskFieldParams: Bessel dimension 3 - 4/gamma^2 must lie in (0, 2)");
  if (!(excursion_duration > 0.0)) throw std::invalid_argument("DiskFieldParams: excursion_duration must be positive");
  if (!(time_step > 0.0) || time_step >= excursion_duration)
    throw std::invalid_argument("DiskFieldParams: time_step must lie in (0, excursion_duration)");
  if (!(x_step > 0.0)) throw std::invalid_argument("DiskFieldParams: x_step must be positive");
  if (mode_cutoff < 1) throw std::invalid_argument("DiskFieldParams: mode_cutoff must be >= 1");
  if (!(gmc_scale >= x_step)) throw std::invalid_argument("DiskFieldParams: gmc_scale must be >= x_step");
}

double DiskFieldParams::bessel_dim() const { return bessel_dim_for_gamma(gamma); }

double DiskFieldParams::q() const { return 2.0 / gamma + gamma / 2.0; }

double ExcursionPath::time_at(std::size_t k) const {
  return k + 1 == values.size() ? duration : std::min(double(k) * step, duration);
}

ExcursionPath sample_bessel_excursion(double dim, double duration, double step, Stream& rng) {
  if (!(dim > 0.0 && dim < 2.0)) throw std::invalid_argument("sample_bessel_excursion: dim must lie in (0, 2)");
  if (!(duration > 0.0) || !(step > 0.0))
    throw std::invalid_argument("sample_bessel_excursion: duration and step must be positive");
  const double bridge_dim = 4.0 - dim;
  const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(duration / step - 1e-9)));

  ExcursionPath e;
  e.duration = duration;
  e.step = step;
  e.values.assign(n + 1, 0.0);
  double z = 0.0;
  double tau_prev = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double s = std::min(double(k) * step, duration) / duration;
    if (s >= 1.0) break;
    const double tau = s / (1.0 - s);
    const double h = tau - tau_prev;
    std::poisson_distribution<long> poisson(z / (2.0 * h));
    const long extra = z > 0.0 ? poisson(rng) : 0;
    std::gamma_distribution<double> gam(bridge_dim / 2.0 + double(extra), 1.0);
    z = 2.0 * h * gam(rng);
    tau_prev = tau;
    e.values[k] = std::sqrt(duration * (1.0 - s) * (1.0 - s) * z);
  }
  return e;
}

namespace {

// x increments between consecutive interior points, before centring.
std::vector<double> x_increments(const ExcursionPath& e, double gamma) {
  const std::size_t n = e.values.size();
  std::vector<double> dx;
  for (std::size_t k = 1; k + 2 < n; ++k) {
    const double dt = e.time_at(k + 1) - e.time_at(k);
    dx.push_back(2.0 / (gamma * gamma) * dt / (e.values[k] * e.values[k + 1]));
  }
  return dx;
}

void check_interior(const ExcursionPath& e) {
  if (e.values.size() < 3) throw std::invalid_argument("excursion has no interior points");
  for (std::size_t k = 1; k + 1 < e.values.size(); ++k)
    if (!(e.values[k] > 0.0)) throw std::invalid_argument("excursion touches 0 in its interior");
}

}  // namespace

RadialProfile radial_profile(const ExcursionPath& e, double gamma) {
  check_interior(e);
  const auto dx = x_increments(e, gamma);
  RadialProfile p;
  const std::size_t m = e.values.size() - 2;
  p.x.resize(m);
  p.h0.resize(m);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < m; ++i) {
    p.x[i] = i == 0 ? 0.0 : p.x[i - 1] + dx[i - 1];
    p.h0[i] = 2.0 / gamma * std::log(e.values[i + 1]);
    if (e.values[i + 1] > e.values[peak + 1]) peak = i;
  }
  const double x0 = p.x[peak];
  for (double& x : p.x) x -= x0;
  return p;
}

QvTally radial_quadratic_variation(const ExcursionPath& e, double gamma, double max_dx) {
  check_interior(e);
  if (!(max_dx > 0.0)) throw std::invalid_argument("radial_quadratic_variation: max_dx must be positive");
  const auto dx = x_increments(e, gamma);
  const double c = 2.0 / (gamma * gamma);
  QvTally t;
  for (std::size_t k = 1; k + 2 < e.values.size(); ++k) {
    const double dt = e.time_at(k + 1) - e.time_at(k);
    if (c * dt / (e.values[k] * e.values[k]) > max_dx) continue;
    const double dh = 2.0 / gamma * std::log(e.values[k + 1] / e.values[k]);
    t.sum_sq += dh * dh;
    t.span += dx[k - 1];
  }
  if (!(t.span > 0.0)) throw std::invalid_argument("radial_quadratic_variation: empty window");
  return t;
}

RadialProfile resample_profile(const RadialProfile& p, double x_step) {
  if (p.x.size() < 2) throw std::invalid_argument("resample_profile: need at least two points");
  RadialProfile out;
  const auto j0 = static_cast<long>(std::ceil(p.x.front() / x_step));
  const auto j1 = static_cast<long>(std::floor(p.x.back() / x_step));
  std::size_t i = 0;
  for (long j = j0; j <= j1; ++j) {
    const double x = double(j) * x_step;
    while (i + 2 < p.x.size() && p.x[i + 1] < x) ++i;
    const double w = (x - p.x[i]) / (p.x[i + 1] - p.x[i]);
    out.x.push_back(x);
    out.h0.push_back(p.h0[i] + std::clamp(w, 0.0, 1.0) * (p.h0[i + 1] - p.h0[i]));
  }
  return out;
}

double LateralModes::value(std::size_t j, double y) const {
  double v = 0.0;
  for (std::size_t n = 1; n <= coeff.size(); ++n) v += coeff[n - 1][j] * std::cos(double(n) * y);
  return v;
}

LateralModes sample_lateral_modes(const std::vector<double>& x_grid, int mode_cutoff, Stream& rng) {
  if (mode_cutoff < 1) throw std::invalid_argument("sample_lateral_modes: mode_cutoff must be >= 1");
  LateralModes m;
  m.x = x_grid;
  m.coeff.assign(static_cast<std::size_t>(mode_cutoff), std::vector<double>(x_grid.size()));
  const Stream base = rng.substream(rng());
  for (int n = 1; n <= mode_cutoff; ++n) {
    Stream s = base.substream(static_cast<std::uint64_t>(n));
    auto& a = m.coeff[static_cast<std::size_t>(n - 1)];
    if (a.empty()) continue;
    const double var = 2.0 / n;
    a[0] = std::sqrt(var) * s.normal();
    for (std::size_t j = 1; j < a.size(); ++j) {
      const double rho = std::exp(-n * (x_grid[j] - x_grid[j - 1]));
      a[j] = rho * a[j - 1] + std::sqrt(var * (1.0 - rho * rho)) * s.normal();
    }
  }
  return m;
}

BoundaryTrace trace_from_modes(const LateralModes& modes) {
  BoundaryTrace t;
  t.x = modes.x;
  t.line0.assign(modes.x.size(), 0.0);
  t.line_pi.assign(modes.x.size(), 0.0);
  for (std::size_t n = 1; n <= modes.coeff.size(); ++n) {
    const double sign = n % 2 ? -1.0 : 1.0;
    const auto& a = modes.coeff[n - 1];
    for (std::size_t j = 0; j < a.size(); ++j) {
      t.line0[j] += a[j];
      t.line_pi[j] += sign * a[j];
    }
  }
  return t;
}

BoundaryTrace sample_lateral_trace(const std::vector<double>& x_grid, int mode_cutoff, Stream& rng) {
  return trace_from_modes(sample_lateral_modes(x_grid, mode_cutoff, rng));
}

double lateral_line_covariance(double dx, int mode_cutoff) {
  const double d = std::abs(dx);
  double c = 0.0;
  for (int n = 1; n <= mode_cutoff; ++n) c += 2.0 / n * std::exp(-n * d);
  return c;
}

namespace {

std::size_t window_points(double x_step, double gmc_scale) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(gmc_scale / x_step)));
}

// Centred moving average over w points, truncated at the ends.
std::vector<double> box_average(const std::vector<double>& v, std::size_t w) {
  std::vector<double> prefix(v.size() + 1, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) prefix[i + 1] = prefix[i] + v[i];
  std::vector<double> out(v.size());
  const std::size_t left = (w - 1) / 2, right = w - 1 - left;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(v.size(), i + right + 1);
    out[i] = (prefix[hi] - prefix[lo]) / double(hi - lo);
  }
  return out;
}

}  // namespace

BoundaryMeasure boundary_gmc(const RadialProfile& radial, const BoundaryTrace& trace, double gamma,
                             double gmc_scale, double shift) {
  const std::size_t n = trace.x.size();
  if (radial.x.size() != n || radial.h0.size() != n || trace.line0.size() != n || trace.line_pi.size() != n)
    throw std::invalid_argument("boundary_gmc: radial profile and trace grids differ");
  if (n < 2) throw std::invalid_argument("boundary_gmc: need at least two grid points");
  const double x_step = trace.x[1] - trace.x[0];
  for (std::size_t j = 0; j < n; ++j)
    if (std::abs(radial.x[j] - trace.x[j]) > 1e-9 * x_step)
      throw std::invalid_argument("boundary_gmc: radial profile and trace grids differ");
  if (!(gmc_scale > 0.0)) throw std::invalid_argument("boundary_gmc: gmc_scale must be positive");

  const std::size_t w = window_points(x_step, gmc_scale);
  const double norm = std::pow(gmc_scale, gamma * gamma / 4.0);
  BoundaryMeasure m;
  auto emit = [&](int line, const std::vector<double>& smooth, std::size_t j) {
    const double mass = norm * std::exp(gamma / 2.0 * (radial.h0[j] + shift + smooth[j])) * x_step;
    m.atoms.push_back({line, trace.x[j] - x_step / 2.0, trace.x[j] + x_step / 2.0, mass});
    m.total += mass;
  };
  const auto s0 = box_average(trace.line0, w);
  const auto s1 = box_average(trace.line_pi, w);
  for (std::size_t j = 0; j < n; ++j) emit(0, s0, j);
  for (std::size_t j = n; j-- > 0;) emit(1, s1, j);
  return m;
}

double mollified_trace_variance(double x_step, double gmc_scale, int mode_cutoff) {
  const std::size_t w = window_points(x_step, gmc_scale);
  double v = 0.0;
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < w; ++j)
      v += lateral_line_covariance(double(i > j ? i - j : j - i) * x_step, mode_cutoff);
  return v / double(w * w);
}

std::pair<double, double> split_at(const BoundaryMeasure& m, double p1, double p2) {
  if (!(m.total > 0.0)) throw std::invalid_argument("split_at: measure has zero total");
  const double left = p2 >= p1 ? p2 - p1 : m.total - (p1 - p2);
  return {left, m.total - left};
}

std::pair<double, double> mark_two_points(const BoundaryMeasure& m, Stream& rng) {
  if (!(m.total > 0.0)) throw std::invalid_argument("mark_two_points: measure has zero total");
  const double p1 = rng.uniform() * m.total;
  const double p2 = rng.uniform() * m.total;
  return split_at(m, p1, p2);
}

DiskSample sample_disk(const DiskFieldParams& params, Stream& rng) {
  params.validate();
  DiskSample s;
  s.gamma = params.gamma;
  Stream exc_rng = rng.substream(rng());
  Stream lat_rng = rng.substream(rng());
  s.excursion = sample_bessel_excursion(params.bessel_dim(), params.excursion_duration, params.time_step, exc_rng);
  s.radial = resample_profile(radial_profile(s.excursion, params.gamma), params.x_step);
  s.trace = sample_lateral_trace(s.radial.x, params.mode_cutoff, lat_rng);
  s.measure = boundary_gmc(s.radial, s.trace, params.gamma, params.gmc_scale);
  return s;
}

DiskSample condition_on_length(const DiskSample& s, double target_length) {
  if (!(s.measure.total > 0.0)) throw std::invalid_argument("condition_on_length: sample has zero total length");
  if (!(target_length > 0.0)) throw std::invalid_argument("condition_on_length: target must be positive");
  DiskSample out = s;
  const double factor = target_length / s.measure.total;
  const double shift = 2.0 / s.gamma * std::log(factor);
  for (double& h : out.radial.h0) h += shift;
  for (auto& a : out.measure.atoms) a.mass *= factor;
  out.measure.total = target_length;
  if (out.marks) {
    const double left = out.marks->first * factor;
    out.marks = std::pair{left, target_length - left};
  }
  out.applied_shift = s.applied_shift + shift;
  out.scale_normalized = true;
  return out;
}

void write_disk_csv(const DiskSample& s, std::ostream& out) {
  out << "x,h0,trace_line0,trace_line1\n";
  for (std::size_t j = 0; j < s.trace.x.size(); ++j)
    write_row(out, {format_double(s.trace.x[j]), format_double(s.radial.h0[j]), format_double(s.trace.line0[j]),
                    format_double(s.trace.line_pi[j])});
}

void write_measure_csv(const BoundaryMeasure& m, std::ostream& out) {
  out << "x_lo,x_hi,mass\n";
  for (const auto& a : m.atoms) write_row(out, {format_double(a.x_lo), format_double(a.x_hi), format_double(a.mass)});
}

}  // namespace sle6
