#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sle6/random.hpp"
#include "sle6/stable_levy.hpp"
#include "sle6/stats.hpp"
#include "sle6/wedge_process.hpp"

namespace sle6 {

/// Parameters of the first-big-jump experiment on the right boundary
/// process R. T_eps is the first time R jumps down by at least epsilon;
/// F0 asks that |R| stays within the tube epsilon^(1 - zeta) before T_eps
/// and F(r) additionally that the jump lands in [r, r + epsilon].
struct AuxParams {
  double epsilon = 0.1;
  double zeta = 0.1;
  double r = 1.0;
  FloorPair floors;
  double delta_cut = 0.0;  ///< small-jump cutoff; 0 means epsilon / 100

  /// Requires epsilon > 0, zeta in (0, 1), tube < r and delta_cut < epsilon.
  void validate() const;
  [[nodiscard]] double tube() const;
  [[nodiscard]] double resolved_delta_cut() const;
};

struct AuxOutcome {
  double t_eps = 0.0;
  double r_pre = 0.0;  ///< left limit R_{T_eps-}
  double jump = 0.0;   ///< size of the jump at T_eps, >= epsilon
  bool f0 = false;
  bool f_r = false;
  double implied_left = 0.0;   ///< floors.left + r_pre
  double implied_right = 0.0;  ///< jump - implied_left = -R_{T_eps} - floors.left
};

/// The path of R on [0, T_eps): only the pieces the events depend on.
struct AuxPrelude {
  double t_eps = 0.0;
  double r_pre = 0.0;
  bool stayed_in_tube = true;
};

/// Samples T_eps ~ Exp((c / alpha) eps^(-alpha)) and the path before it.
/// Jumps in [delta_cut, eps) arrive at their exact Poisson times; between
/// them R moves as a Brownian motion with drift matching the removed jumps,
/// and tube exits between skeleton points are detected with the Brownian
/// bridge crossing probability.
AuxPrelude sample_aux_prelude(const StableParams& params, const AuxParams& aux, Stream& rng);

/// Evaluates the events for a given prelude and jump size.
AuxOutcome evaluate_aux_outcome(const AuxPrelude& prelude, double jump, const AuxParams& aux);

/// Prelude plus a jump drawn from the normalized tail of the Levy measure.
AuxOutcome run_aux_experiment(const StableParams& params, const AuxParams& aux, Stream& rng);

/// Run i is driven by Stream(seed, hash_tag(tag), i).
std::vector<AuxOutcome> run_aux_ensemble(const StableParams& params, const AuxParams& aux, std::size_t n,
                                         std::uint64_t seed, const std::string& tag, unsigned threads = 0);

/// P[jump in [r, r + eps]] for the normalized tail: eps^alpha (r^-alpha - (r + eps)^-alpha).
double conditional_jump_factor(double epsilon, double r, double alpha = 1.5);

struct RateCell {
  double epsilon = 0.0;
  double r = 0.0;
  std::size_t n = 0;
  std::size_t f0_count = 0;
  std::size_t fr_count = 0;
  Estimate p_f0;
  Estimate p_direct;
  Estimate p_factorized;  ///< p_f0 * conditional_jump_factor
  double z_score = 0.0;   ///< (direct - factorized) / pooled stderr
  bool underpowered = false;  ///< no F(r) successes
  double a_lower = 0.0;   ///< largest a with p_f0 >= 1 - exp(-a eps^-zeta)
};

RateCell summarize_rate_cell(const std::vector<AuxOutcome>& outcomes, const AuxParams& aux,
                             double alpha = 1.5);

struct RateReport {
  std::vector<RateCell> cells;
  std::optional<PowerLawFit> slope;  ///< direct estimates vs eps; needs 3 powered cells
  double fitted_a = 0.0;             ///< min over cells of a_lower
  bool f0_increasing = false;        ///< p_f0 increases as eps decreases
  double max_abs_z = 0.0;
};

/// Direct versus factorized estimates of P[F(r)] over an epsilon grid, the
/// log-log slope in epsilon and the fitted tube constant.
RateReport verify_bubble_event_rate(const StableParams& params, const AuxParams& base,
                                    const std::vector<double>& eps_grid, std::size_t n, std::uint64_t seed,
                                    const std::string& tag, unsigned threads = 0);

RateReport summarize_rate_cells(std::vector<RateCell> cells);

void write_rate_csv(const RateReport& report, std::ostream& out);

struct JumpLawReport {
  std::size_t n = 0;
  KsResult ks;
  double median = 0.0;
  double median_target = 0.0;  ///< eps 2^(1/alpha)
  Estimate mean;
  double mean_target = 0.0;    ///< eps alpha / (alpha - 1)
  double min_jump = 0.0;
};

/// KS, median and mean of the jump at T_eps against the Pareto tail.
JumpLawReport conditional_jump_law_check(const StableParams& params, double epsilon, std::size_t n,
                                         std::uint64_t seed, const std::string& tag, unsigned threads = 0);

struct SideLengthCell {
  double epsilon = 0.0;
  std::size_t successes = 0;
  std::size_t violations = 0;
  Estimate abs_left_dev;   ///< |implied_left - floors.left| on F(r)
  Estimate abs_right_dev;  ///< |implied_right - floors.right| on F(r)
  double left_bound = 0.0; ///< tube
  bool underpowered = false;
};

/// On F(r) with r = floors.sum(): counts violations of
/// |implied_left - l_L| <= tube and implied_right in [l_R - tube, l_R + eps + tube].
SideLengthCell summarize_side_lengths(const std::vector<AuxOutcome>& outcomes, const AuxParams& aux);

struct SideLengthReport {
  std::vector<SideLengthCell> cells;
  std::size_t total_violations = 0;
  bool left_dev_decreasing = false;
};

SideLengthReport implied_side_lengths_convergence(const StableParams& params, const FloorPair& floors,
                                                  const std::vector<double>& eps_grid, double zeta,
                                                  std::size_t n, std::uint64_t seed, const std::string& tag,
                                                  unsigned threads = 0);

SideLengthReport summarize_side_length_cells(std::vector<SideLengthCell> cells);

struct ShiftedRateReport {
  double r_shifted = 0.0;  ///< floors sum + L_u + R_u
  RateReport rate;
  /// Finite-eps closed form ratio factor(eps, r') / factor(eps, floors sum)
  /// per cell, and its small-eps limit (r' / floors sum)^(-5/2).
  std::vector<double> exact_ratio;
  double asymptotic_ratio = 0.0;
};

/// verify_bubble_event_rate at r' = floors sum + L_u + R_u. Throws when
/// r' <= tube for some epsilon.
ShiftedRateReport shifted_rate_check(const StableParams& params, const FloorPair& floors, double l_u, double r_u,
                                     const std::vector<double>& eps_grid, double zeta, std::size_t n,
                                     std::uint64_t seed, const std::string& tag, unsigned threads = 0);

}  // namespace sle6
