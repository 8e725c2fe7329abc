#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sle6/stats.hpp"
#include "sle6/wedge_process.hpp"

namespace sle6 {

/// ((l + r) / (floors.left + floors.right) + 1)^(-5/2), or 0 when not alive.
double rn_weight_value(double l_plus_r, const FloorPair& floors, bool alive);

/// Density of the disk boundary-length process against the wedge law at
/// time u, evaluated right-continuously. Throws if u > z.horizon.
double rn_weight(const WedgeZ& z, double u);

struct SurvivalPoint {
  double u = 0.0;
  Estimate estimate;  ///< E[weight(u)] = P[u < S] under the disk law
  double ess = 0.0;
};

struct SurvivalCurve {
  std::vector<SurvivalPoint> points;
};

/// Monte Carlo estimate of the disk survival function on u_grid from one
/// wedge ensemble. Requires spec.n >= 1000, a sorted non-empty u_grid and
/// spec.horizon (if set) >= max(u_grid).
SurvivalCurve estimate_survival(const EnsembleSpec& spec, std::span<const double> u_grid);

void write_survival_csv(const SurvivalCurve& curve, std::ostream& out);

/// A path functional evaluated on the wedge path restricted to [0, u].
using PathFunctional = std::function<double(const WedgeZ&, double u)>;

struct WeightedEstimate {
  Estimate estimate;
  double ess = 0.0;
  std::optional<std::string> warning;  ///< set when ess < 30
};

/// E_disk[f; u < S] = E_wedge[f * weight(u)]. f is only evaluated on paths
/// alive at u.
WeightedEstimate weighted_expectation(const PathFunctional& f, double u, const EnsembleSpec& spec);

/// Interior cut points of the (L_u, R_u) plane; bins are the products of the
/// induced intervals, including the two unbounded ones per axis.
struct BinGrid {
  std::vector<double> left_edges;
  std::vector<double> right_edges;

  [[nodiscard]] std::size_t size() const { return (left_edges.size() + 1) * (right_edges.size() + 1); }
  [[nodiscard]] std::size_t index_of(double l, double r) const;

  /// `per_side` equal-width bins per axis over [-0.8 floor, 0.8 floor],
  /// flanked by the two unbounded bins.
  static BinGrid around_floors(const FloorPair& floors, std::size_t per_side = 8);
};

struct SupermartingaleBin {
  std::size_t count = 0;
  double mean_weight_u = 0.0;
  double mean_weight_v = 0.0;
  Estimate difference;  ///< paired weight(v) - weight(u)
  bool flagged = false;
};

struct SupermartingaleReport {
  double u = 0.0;
  double v = 0.0;
  std::vector<SupermartingaleBin> bins;
  std::size_t occupied = 0;  ///< bins with at least two paths
  std::size_t flagged = 0;
  [[nodiscard]] double flagged_fraction() const { return occupied ? double(flagged) / double(occupied) : 0.0; }
};

/// Compares weight(v) with weight(u) on the same paths, grouped by the bin
/// of (L_u, R_u) among paths alive at u. A bin is flagged when the mean
/// paired difference exceeds two standard errors.
SupermartingaleReport supermartingale_check(double u, double v, const EnsembleSpec& spec, const BinGrid& bins);

struct SlabMass {
  double width = 0.0;       ///< slab {u < S, L_u + R_u <= -(floors sum) + width}
  Estimate mass;            ///< E[weight(u); slab]
  std::size_t count = 0;    ///< paths in the slab
  double min_weight = 0.0;  ///< over paths in the slab; 0 when empty
  double lower_bound = 0.0; ///< (width / floors sum)^(-5/2)
};

struct EndpointPoint {
  double u = 0.0;
  Estimate survival;
  double ess = 0.0;
  std::vector<SlabMass> slabs;
};

struct EndpointReport {
  std::vector<EndpointPoint> points;
};

EndpointReport endpoint_diagnostics(const EnsembleSpec& spec, std::span<const double> u_grid,
                                    std::span<const double> slab_widths);

void write_endpoint_json(const EndpointReport& report, std::ostream& out);

}  // namespace sle6
