#pragma once

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "sle6/random.hpp"

namespace sle6 {

/// Boundary-level quantum disk on the strip R x (0, pi).
struct DiskFieldParams {
  double gamma = 1.6329931618554521;  ///< sqrt(8/3)
  double excursion_duration = 1.0;
  double time_step = 1e-4;   ///< excursion grid
  double x_step = 0.01;      ///< horizontal grid of the strip
  int mode_cutoff = 512;     ///< lateral cosine modes 1..K
  double gmc_scale = 0.05;   ///< box-mollifier width for the boundary measure

  void validate() const;
  /// 3 - 4 / gamma^2; 3/2 at gamma^2 = 8/3.
  [[nodiscard]] double bessel_dim() const;
  /// 2 / gamma + gamma / 2. Kept for reference; no coordinate change uses it.
  [[nodiscard]] double q() const;
};

double bessel_dim_for_gamma(double gamma);

struct ExcursionPath {
  double duration = 0.0;
  double step = 0.0;
  std::vector<double> values;  ///< at k * step (last point at duration); both ends 0

  [[nodiscard]] double time_at(std::size_t k) const;
};

/// Bessel excursion of dimension dim in (0, 2) conditioned on its length,
/// realized as the Bessel bridge of dimension 4 - dim from 0 to 0. The
/// squared bridge is (1 - s)^2 Z(s / (1 - s)) in unit time for a squared
/// Bessel process Z from 0, sampled with exact noncentral chi-square
/// transitions, so grid values are exact in law at any step.
ExcursionPath sample_bessel_excursion(double dim, double duration, double step, Stream& rng);

/// Constant-on-vertical-segments part h0 of the field.
struct RadialProfile {
  std::vector<double> x;   ///< increasing; x = 0 at the excursion maximum
  std::vector<double> h0;  ///< (2 / gamma) log e
};

/// Interior points of the excursion, with x(t) = (2 / gamma^2) int e^-2 ds
/// so that h0 has quadratic variation 2 dx. Between grid points the
/// integrand uses 1 / (e_k e_{k+1}). Throws if an interior value is <= 0.
RadialProfile radial_profile(const ExcursionPath& e, double gamma);

/// Squared h0 increments and x span accumulated over the steps that start
/// where the grid resolves x finely, (2 / gamma^2) dt / e_k^2 <= max_dx.
/// Near the ends of the excursion a fixed time step cannot resolve the
/// log, so refinement extends the window instead of sharpening a fixed one.
/// The selection looks only at the left endpoint, so it does not bias the
/// increments. Tallies from several excursions can be pooled.
struct QvTally {
  double sum_sq = 0.0;
  double span = 0.0;

  QvTally& operator+=(const QvTally& o) {
    sum_sq += o.sum_sq;
    span += o.span;
    return *this;
  }
  /// Quadratic variation per unit x; 2 in the continuum.
  [[nodiscard]] double per_unit_x() const { return sum_sq / span; }
};

QvTally radial_quadratic_variation(const ExcursionPath& e, double gamma, double max_dx);

/// Linear interpolation of h0 onto the multiples of x_step inside the
/// profile's range.
RadialProfile resample_profile(const RadialProfile& p, double x_step);

/// Lateral (mean zero on vertical segments) part of a free-boundary field,
/// restricted to the two boundary lines y = 0 and y = pi.
struct BoundaryTrace {
  std::vector<double> x;
  std::vector<double> line0;   ///< y = 0
  std::vector<double> line_pi; ///< y = pi
};

/// Coefficients of the lateral field sum_n a_n(x) cos(n y), n = 1..K.
struct LateralModes {
  std::vector<double> x;
  std::vector<std::vector<double>> coeff;  ///< coeff[n - 1][j] = a_n(x_j)

  /// Field value at grid point j and height y in [0, pi].
  [[nodiscard]] double value(std::size_t j, double y) const;
};

/// Each a_n is a stationary Ornstein-Uhlenbeck process of variance 2 / n and
/// rate n, sampled exactly on the grid from its own substream.
LateralModes sample_lateral_modes(const std::vector<double>& x_grid, int mode_cutoff, Stream& rng);

/// The two boundary lines of the synthesized field; modes are summed in
/// increasing n.
BoundaryTrace trace_from_modes(const LateralModes& modes);

BoundaryTrace sample_lateral_trace(const std::vector<double>& x_grid, int mode_cutoff, Stream& rng);

/// Covariance of the truncated lateral field between two points on the
/// same boundary line at distance dx: sum_{n <= K} (2 / n) exp(-n dx).
double lateral_line_covariance(double dx, int mode_cutoff);

struct BoundaryAtom {
  int line = 0;  ///< 0 for y = 0, 1 for y = pi
  double x_lo = 0.0;
  double x_hi = 0.0;
  double mass = 0.0;
};

struct BoundaryMeasure {
  std::vector<BoundaryAtom> atoms;  ///< circle order: line 0 left to right, then line pi right to left
  double total = 0.0;
};

/// Boundary length measure gmc_scale^(gamma^2 / 4) exp((gamma / 2)(h0 + shift
/// + trace_eps)) dx on both lines, trace_eps the box average of the trace
/// over a window of width gmc_scale. Throws on grid mismatch.
BoundaryMeasure boundary_gmc(const RadialProfile& radial, const BoundaryTrace& trace, double gamma,
                             double gmc_scale, double shift = 0.0);

/// Variance of the box-mollified trace at one point, summed directly from
/// the truncated mode covariance on the grid.
double mollified_trace_variance(double x_step, double gmc_scale, int mode_cutoff);

/// Arc masses between two points of the circle formed by line 0 (left to
/// right) followed by line pi (right to left), given as mass coordinates in
/// [0, total). left is the arc from p1 to p2 in that orientation.
std::pair<double, double> split_at(const BoundaryMeasure& m, double p1, double p2);

/// Two independent points from the normalized measure; returns (left, right).
std::pair<double, double> mark_two_points(const BoundaryMeasure& m, Stream& rng);

struct DiskSample {
  double gamma = 0.0;
  ExcursionPath excursion;
  RadialProfile radial;  ///< on the trace grid
  BoundaryTrace trace;
  BoundaryMeasure measure;
  std::optional<std::pair<double, double>> marks;
  double applied_shift = 0.0;
  bool scale_normalized = false;
};

DiskSample sample_disk(const DiskFieldParams& params, Stream& rng);

/// Adds C = (2 / gamma) log(target / total) to the field so the total
/// boundary length becomes target. Masses are rescaled by target / total
/// and marks proportionally. Exact in law only for scale-invariant
/// observables, since the excursion-duration marginal is not reweighted.
DiskSample condition_on_length(const DiskSample& s, double target_length);

/// Columns x, h0, trace_line0, trace_line1.
void write_disk_csv(const DiskSample& s, std::ostream& out);
/// Columns x_lo, x_hi, mass in circle order.
void write_measure_csv(const BoundaryMeasure& m, std::ostream& out);

}  // namespace sle6
