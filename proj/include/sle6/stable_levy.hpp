#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sle6/random.hpp"
#include "sle6/stats.hpp"

namespace sle6 {

/// How increments of the stable process are generated.
///
/// exact_increment: Chambers-Mallows-Stuck draws of the exact increment law
///   on the grid. Jumps are only visible as large grid increments, so the
///   jump ledger records increments <= -threshold at the right grid point.
/// hybrid: jumps of size >= delta_cut form an explicit marked Poisson
///   process (exact times and Pareto sizes); the compensated jumps below
///   delta_cut are replaced by a Brownian motion with the same variance.
enum class Scheme { exact_increment, hybrid };

/// Totally asymmetric (downward jumps only) strictly stable law with Levy
/// density levy_const * y^(-1-alpha) on jump magnitudes y > 0.
struct StableParams {
  double alpha = 1.5;
  double levy_const = 1.0;
  Scheme scheme = Scheme::exact_increment;
  double delta_cut = 1e-3;  ///< hybrid only

  void validate() const;

  static StableParams exact(double levy_const = 1.0);
  static StableParams hybrid(double levy_const = 1.0, double delta_cut = 1e-3);
};

/// min(1e-3, smallest_threshold / 100).
double default_delta_cut(double smallest_threshold);

/// nu([y, inf)) = (c / alpha) y^(-alpha): rate of jumps of size >= y.
double tail_rate(const StableParams& p, double y);
/// Variance per unit time of the compensated jumps below delta.
double small_jump_variance_rate(const StableParams& p, double delta);
/// Mean per unit time of the jumps >= delta, i.e. the drift that keeps the
/// process centred once those jumps are removed from the compensated sum.
double large_jump_compensator(const StableParams& p, double delta);
/// Scale sigma of the unit-time increment in the (alpha, beta = -1)
/// parameterisation: sigma^alpha = c Gamma(2 - alpha) |cos(pi alpha / 2)| / (alpha (alpha - 1)).
double cms_scale(const StableParams& p);

/// Standard S_alpha(1, -1, 0) variate (Chambers-Mallows-Stuck).
double sample_standard_stable(double alpha, Stream& rng);
/// Pareto variate with survival (y / threshold)^(-alpha), y >= threshold.
double sample_pareto(double threshold, double alpha, Stream& rng);
/// Pareto(alpha) restricted to [lo, hi), by inversion.
double sample_truncated_pareto(double lo, double hi, double alpha, Stream& rng);

/// One ledgered downward jump. pre_value is the left limit X_{t-}; the value
/// right after the jump is pre_value - size.
struct JumpEvent {
  double time = 0.0;
  double size = 0.0;
  double pre_value = 0.0;

  [[nodiscard]] double post_value() const { return pre_value - size; }
};

/// Grid skeleton of a stable path plus the exact ledger of jumps at or
/// above jump_record_threshold.
struct StablePath {
  StableParams params;
  double horizon = 0.0;
  double grid_step = 1.0;
  double jump_record_threshold = 1.0;
  std::vector<double> values{0.0};  ///< values[i] at time_at(i); values[0] = 0
  std::vector<JumpEvent> jumps;     ///< sorted by time

  [[nodiscard]] double time_at(std::size_t i) const;
  /// Last simulated time; below horizon when a sampler stopped early.
  [[nodiscard]] double end_time() const { return time_at(values.size() - 1); }
  /// Right-continuous value at u, using the latest grid point or ledgered
  /// jump at or before u.
  [[nodiscard]] double value_at(double u) const;
  /// Minimum over every observation (grid values, jump left limits and
  /// post-jump values) with time <= u.
  [[nodiscard]] double running_min(double u) const;
};

/// Number of grid intervals covering [0, horizon].
std::size_t grid_intervals(double horizon, double grid_step);

/// Incremental generator shared by path and ensemble samplers.
class StableStepper {
 public:
  /// Borrows `rng`; the stream must outlive the stepper.
  StableStepper(const StableParams& params, double jump_record_threshold, Stream& rng);

  /// Moves forward by dt, appending ledgered jumps to `ledger`.
  double advance(double dt, std::vector<JumpEvent>& ledger);

  [[nodiscard]] double time() const { return time_; }
  [[nodiscard]] double value() const { return value_; }

 private:
  double advance_exact(double dt, std::vector<JumpEvent>& ledger);
  double advance_hybrid(double dt, std::vector<JumpEvent>& ledger);

  StableParams params_;
  double threshold_;
  Stream* rng_;
  double time_ = 0.0;
  double value_ = 0.0;
  double scale_ = 0.0;
  double drift_rate_ = 0.0;
  double gauss_rate_ = 0.0;
  double mid_rate_ = 0.0;
  double big_rate_ = 0.0;
};

/// One increment over duration dt. dt = 0 gives exactly 0.
double sample_increment(const StableParams& params, double dt, Stream& rng);

StablePath sample_path(const StableParams& params, double horizon, double grid_step,
                       double jump_record_threshold, Stream& rng);

/// Earliest observed time with value <= level: grid points, jump left
/// limits and post-jump values are all checked at their exact times.
std::optional<double> first_passage_below(const StablePath& path, double level);

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationOptions {
  std::vector<double> thresholds;  ///< empty: scheme default
  double scale_multiplier = 1.0;   ///< paths are multiplied by this factor
  std::size_t increments = 1'000'000;  ///< exact scheme: number of grid increments
  double dt = 1e-3;                    ///< exact scheme: grid increment duration
  double exposure = 100.0;             ///< hybrid scheme: simulated time
  std::size_t min_count = 100;         ///< at the largest threshold
};

struct ThresholdCount {
  double threshold = 0.0;
  std::size_t count = 0;
  double exposure_rate = 0.0;  ///< expected count per unit of c
  double levy_const = 0.0;     ///< count / exposure_rate
};

struct CalibrationResult {
  Estimate levy_const;
  std::vector<ThresholdCount> per_threshold;
};

/// Recovers c from empirical counts of jumps >= eps against
/// (c / alpha) eps^(-alpha) * time, pooled over several eps. For the hybrid
/// scheme the counts come from the jump ledger of sample_path; for the exact
/// scheme from grid increments <= -eps with eps far above the dt^(1/alpha)
/// fluctuation scale. Throws EstimationError when the largest threshold
/// sees fewer than min_count jumps.
CalibrationResult calibrate_levy_constant(const StableParams& params, Stream& rng,
                                          const CalibrationOptions& options = {});

void write_path_csv(const StablePath& path, std::ostream& out);
void write_jumps_csv(const StablePath& path, std::ostream& out);

}  // namespace sle6
