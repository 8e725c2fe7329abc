#include "sle6/disk_process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "sle6/io.hpp"

namespace sle6 {

double rn_weight_value(double l_plus_r, const FloorPair& floors, bool alive) {
  if (!alive) return 0.0;
  const double base = l_plus_r / floors.sum() + 1.0;
  if (!(base > 0.0)) return 0.0;
  return std::pow(base, -2.5);
}

double rn_weight(const WedgeZ& z, double u) {
  if (!(u >= 0.0) || u > z.horizon) throw std::invalid_argument("rn_weight: u outside [0, horizon]");
  if (!z.alive_at(u)) return 0.0;
  return rn_weight_value(z.left.value_at(u) + z.right.value_at(u), z.floors, true);
}

namespace {

void check_ensemble(const EnsembleSpec& spec) {
  spec.params.validate();
  spec.floors.validate();
  if (spec.n < 1000) throw std::invalid_argument("ensemble size must be at least 1000");
}

double resolve_horizon(const EnsembleSpec& spec, double needed) {
  if (spec.horizon > 0.0) {
    if (spec.horizon < needed) throw std::invalid_argument("ensemble horizon is shorter than the requested times");
    return spec.horizon;
  }
  return needed;
}

void check_grid(std::span<const double> u_grid) {
  if (u_grid.empty()) throw std::invalid_argument("u_grid must not be empty");
  if (!std::is_sorted(u_grid.begin(), u_grid.end())) throw std::invalid_argument("u_grid must be sorted");
  if (!(u_grid.front() >= 0.0)) throw std::invalid_argument("u_grid must be nonnegative");
}

// Weights of every path at every grid time, row-major by path.
std::vector<double> weight_table(const EnsembleSpec& spec, std::span<const double> u_grid, double horizon) {
  const std::size_t m = u_grid.size();
  std::vector<double> table(spec.n * m);
  map_wedges<char>(spec, horizon, [&](std::size_t i, const WedgeZ& z) {
    for (std::size_t k = 0; k < m; ++k) table[i * m + k] = rn_weight(z, u_grid[k]);
    return char{};
  });
  return table;
}

std::vector<double> column(const std::vector<double>& table, std::size_t m, std::size_t k) {
  std::vector<double> out(table.size() / m);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = table[i * m + k];
  return out;
}

}  // namespace

SurvivalCurve estimate_survival(const EnsembleSpec& spec, std::span<const double> u_grid) {
  check_ensemble(spec);
  check_grid(u_grid);
  const double horizon = resolve_horizon(spec, u_grid.back());
  const auto table = weight_table(spec, u_grid, horizon);
  SurvivalCurve curve;
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    const auto w = column(table, u_grid.size(), k);
    curve.points.push_back({u_grid[k], sample_mean(w), effective_sample_size(w)});
  }
  return curve;
}

void write_survival_csv(const SurvivalCurve& curve, std::ostream& out) {
  out << "u,estimate,stderr,ess\n";
  for (const auto& p : curve.points)
    write_row(out, {format_double(p.u), format_double(p.estimate.mean), format_double(p.estimate.std_err),
                    format_double(p.ess)});
}

WeightedEstimate weighted_expectation(const PathFunctional& f, double u, const EnsembleSpec& spec) {
  check_ensemble(spec);
  if (!(u >= 0.0)) throw std::invalid_argument("weighted_expectation: u must be nonnegative");
  const double horizon = resolve_horizon(spec, u);
  struct Pair {
    double weight = 0.0;
    double product = 0.0;
  };
  const auto rows = map_wedges<Pair>(spec, horizon, [&](std::size_t, const WedgeZ& z) {
    const double w = rn_weight(z, u);
    return Pair{w, w > 0.0 ? w * f(z, u) : 0.0};
  });
  std::vector<double> weights(rows.size()), products(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    weights[i] = rows[i].weight;
    products[i] = rows[i].product;
  }
  WeightedEstimate out;
  out.estimate = sample_mean(products);
  out.ess = effective_sample_size(weights);
  if (out.ess < 30.0) out.warning = "degenerate ensemble: effective sample size below 30";
  return out;
}

std::size_t BinGrid::index_of(double l, double r) const {
  const auto li = static_cast<std::size_t>(std::upper_bound(left_edges.begin(), left_edges.end(), l) - left_edges.begin());
  const auto ri =
      static_cast<std::size_t>(std::upper_bound(right_edges.begin(), right_edges.end(), r) - right_edges.begin());
  return li * (right_edges.size() + 1) + ri;
}

BinGrid BinGrid::around_floors(const FloorPair& floors, std::size_t per_side) {
  BinGrid g;
  auto edges = [per_side](double floor) {
    std::vector<double> e;
    for (std::size_t k = 0; k <= per_side; ++k)
      e.push_back(-0.8 * floor + 1.6 * floor * double(k) / double(per_side));
    return e;
  };
  g.left_edges = edges(floors.left);
  g.right_edges = edges(floors.right);
  return g;
}

SupermartingaleReport supermartingale_check(double u, double v, const EnsembleSpec& spec, const BinGrid& bins) {
  check_ensemble(spec);
  if (!(u >= 0.0) || v < u) throw std::invalid_argument("supermartingale_check: need 0 <= u <= v");
  if (!std::is_sorted(bins.left_edges.begin(), bins.left_edges.end()) ||
      !std::is_sorted(bins.right_edges.begin(), bins.right_edges.end()))
    throw std::invalid_argument("supermartingale_check: bin edges must be sorted");
  const double horizon = resolve_horizon(spec, v);

  struct Row {
    std::size_t bin = 0;
    double wu = 0.0;
    double wv = 0.0;
    bool alive = false;
  };
  const auto rows = map_wedges<Row>(spec, horizon, [&](std::size_t, const WedgeZ& z) {
    Row r;
    r.alive = z.alive_at(u);
    if (!r.alive) return r;
    r.bin = bins.index_of(z.left.value_at(u), z.right.value_at(u));
    r.wu = rn_weight(z, u);
    r.wv = rn_weight(z, v);
    return r;
  });

  SupermartingaleReport rep;
  rep.u = u;
  rep.v = v;
  std::vector<std::vector<double>> diffs(bins.size());
  rep.bins.resize(bins.size());
  for (const auto& r : rows) {
    if (!r.alive) continue;
    auto& b = rep.bins[r.bin];
    ++b.count;
    b.mean_weight_u += r.wu;
    b.mean_weight_v += r.wv;
    diffs[r.bin].push_back(r.wv - r.wu);
  }
  for (std::size_t k = 0; k < bins.size(); ++k) {
    auto& b = rep.bins[k];
    if (b.count == 0) continue;
    b.mean_weight_u /= double(b.count);
    b.mean_weight_v /= double(b.count);
    b.difference = sample_mean(diffs[k]);
    if (b.count < 2) continue;
    ++rep.occupied;
    b.flagged = b.difference.mean > 2.0 * b.difference.std_err;
    if (b.flagged) ++rep.flagged;
  }
  return rep;
}

EndpointReport endpoint_diagnostics(const EnsembleSpec& spec, std::span<const double> u_grid,
                                    std::span<const double> slab_widths) {
  check_ensemble(spec);
  check_grid(u_grid);
  for (double w : slab_widths)
    if (!(w > 0.0)) throw std::invalid_argument("endpoint_diagnostics: slab widths must be positive");
  const double horizon = resolve_horizon(spec, u_grid.back());
  const std::size_t m = u_grid.size();

  std::vector<double> weights(spec.n * m), sums(spec.n * m);
  map_wedges<char>(spec, horizon, [&](std::size_t i, const WedgeZ& z) {
    for (std::size_t k = 0; k < m; ++k) {
      weights[i * m + k] = rn_weight(z, u_grid[k]);
      sums[i * m + k] = z.alive_at(u_grid[k]) ? z.left.value_at(u_grid[k]) + z.right.value_at(u_grid[k]) : 0.0;
    }
    return char{};
  });

  const double total = spec.floors.sum();
  EndpointReport rep;
  for (std::size_t k = 0; k < m; ++k) {
    EndpointPoint pt;
    pt.u = u_grid[k];
    const auto w = column(weights, m, k);
    pt.survival = sample_mean(w);
    pt.ess = effective_sample_size(w);
    for (double width : slab_widths) {
      SlabMass s;
      s.width = width;
      s.lower_bound = std::pow(width / total, -2.5);
      std::vector<double> masked(spec.n, 0.0);
      double min_w = 0.0;
      for (std::size_t i = 0; i < spec.n; ++i) {
        const double wi = weights[i * m + k];
        if (wi > 0.0 && sums[i * m + k] <= -total + width) {
          masked[i] = wi;
          min_w = s.count == 0 ? wi : std::min(min_w, wi);
          ++s.count;
        }
      }
      s.mass = sample_mean(masked);
      s.min_weight = min_w;
      pt.slabs.push_back(s);
    }
    rep.points.push_back(std::move(pt));
  }
  return rep;
}

namespace {

nlohmann::json estimate_json(const Estimate& e) {
  return {{"mean", e.mean}, {"stderr", e.std_err}, {"n", e.n}, {"ci95_lo", e.ci95_lo}, {"ci95_hi", e.ci95_hi}};
}

}  // namespace

void write_endpoint_json(const EndpointReport& report, std::ostream& out) {
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  for (const auto& p : report.points) {
    nlohmann::json slabs = nlohmann::json::array();
    for (const auto& s : p.slabs)
      slabs.push_back({{"width", s.width},
                       {"mass", estimate_json(s.mass)},
                       {"count", s.count},
                       {"min_weight", s.min_weight},
                       {"lower_bound", s.lower_bound},
                       {"bound_holds", s.count == 0 || s.min_weight >= s.lower_bound}});
    j["points"].push_back({{"u", p.u}, {"survival", estimate_json(p.survival)}, {"ess", p.ess}, {"slabs", slabs}});
  }
  out << j.dump(2) << '\n';
}

}  // namespace sle6
