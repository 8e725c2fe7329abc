#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sle6/random.hpp"
#include "sle6/stable_levy.hpp"

namespace sle6 {

/// Boundary lengths to the left and right of the root; both > 0.
struct FloorPair {
  double left = 0.5;
  double right = 0.5;

  void validate() const;
  [[nodiscard]] double sum() const { return left + right; }
  /// Natural time unit sum^(3/2): boundary lengths scale like time^(2/3).
  [[nodiscard]] double time_unit() const;
};

/// Pair (L, R) of independent stable paths with floors -left / -right.
struct WedgeZ {
  StablePath left;
  StablePath right;
  FloorPair floors;
  double horizon = 0.0;
  /// First time either coordinate reaches its floor; nullopt means no exit
  /// was observed before the end of the simulated range (right-censored).
  std::optional<double> exit_time;

  [[nodiscard]] bool alive_at(double u) const { return !exit_time || u < *exit_time; }
};

enum class Side { left, right };

/// A disconnected bubble: its boundary length is the magnitude of the
/// downward jump of the corresponding coordinate.
struct BubbleRecord {
  double time = 0.0;
  Side side = Side::left;
  double boundary_length = 0.0;
};

const char* side_name(Side s);

/// Samples the pair from two independent substreams of `rng`. With
/// stop_at_exit both coordinates stop at the grid step where the exit is
/// detected; the prefix is identical to the untruncated sample.
WedgeZ sample_wedge(const StableParams& params, const FloorPair& floors, double horizon,
                    double grid_step, double jump_record_threshold, Stream& rng,
                    bool stop_at_exit = false);

/// inf{u : L_u <= -floors.left or R_u <= -floors.right} over the observed
/// path, using jump-aware detection.
std::optional<double> wedge_exit_time(const WedgeZ& z);

/// Ledgered jumps of either coordinate with time <= u and size >= threshold,
/// sorted by time. Throws if threshold is below the ledger resolution.
std::vector<BubbleRecord> extract_bubbles(const WedgeZ& z, double u, double threshold);

/// Both running infima over [0, u] stay at least delta above their floors.
/// Requires 0 < delta < min(floors) and u <= horizon.
bool regularity_event(const WedgeZ& z, double u, double delta);

/// Columns u, L, R, alive_flag on the shared grid.
void write_wedge_csv(const WedgeZ& z, std::ostream& out);
/// Columns time, side, boundary_length.
void write_bubbles_csv(const std::vector<BubbleRecord>& bubbles, std::ostream& out);

/// Ensemble of independent wedge paths. Path i is driven by
/// Stream(seed, hash_tag(tag), i), so results do not depend on `threads`.
struct EnsembleSpec {
  StableParams params;
  FloorPair floors;
  std::size_t n = 100'000;
  double horizon = 0.0;        ///< 0: derived from the requested times
  double grid_step = 0.0;      ///< 0: floors.time_unit() / 200
  double jump_record_threshold = 0.0;  ///< 0: floors.sum() / 100
  std::uint64_t seed = 1;
  std::string tag = "wedge";
  unsigned threads = 0;

  [[nodiscard]] double resolved_grid_step() const;
  [[nodiscard]] double resolved_threshold() const;
};

/// Runs fn(i, z) for every path (stopped at exit) and collects the results
/// in index order.
template <class Result, class Fn>
std::vector<Result> map_wedges(const EnsembleSpec& spec, double horizon, Fn&& fn) {
  std::vector<Result> out(spec.n);
  const double step = spec.resolved_grid_step();
  const double thr = spec.resolved_threshold();
  const std::uint64_t tag = hash_tag(spec.tag);
  parallel_for(spec.n, spec.threads, [&](std::size_t i) {
    Stream rng(spec.seed, tag, i);
    const WedgeZ z = sample_wedge(spec.params, spec.floors, horizon, step, thr, rng, true);
    out[i] = fn(i, z);
  });
  return out;
}

}  // namespace sle6
