#include "sle6/wedge_process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sle6/io.hpp"

namespace sle6 {

void FloorPair::validate() const {
  if (!(left > 0.0) || !(right > 0.0) || !std::isfinite(left) || !std::isfinite(right))
    throw std::invalid_argument("FloorPair: both floors must be positive and finite");
}

double FloorPair::time_unit() const { return std::pow(sum(), 1.5); }

const char* side_name(Side s) { return s == Side::left ? "L" : "R"; }

namespace {

// True once any new observation of a coordinate is at or below its level.
bool breached(const std::vector<JumpEvent>& ledger, std::size_t from, double grid_value, double level) {
  for (std::size_t j = from; j < ledger.size(); ++j)
    if (ledger[j].pre_value <= level || ledger[j].post_value() <= level) return true;
  return grid_value <= level;
}

StablePath empty_path(const StableParams& params, double horizon, double grid_step, double thr) {
  StablePath p;
  p.params = params;
  p.horizon = horizon;
  p.grid_step = grid_step;
  p.jump_record_threshold = thr;
  return p;
}

}  // namespace

WedgeZ sample_wedge(const StableParams& params, const FloorPair& floors, double horizon,
                    double grid_step, double jump_record_threshold, Stream& rng, bool stop_at_exit) {
  params.validate();
  floors.validate();
  if (!std::isfinite(horizon) || horizon < 0.0) throw std::invalid_argument("sample_wedge: horizon must be >= 0");
  if (!(grid_step > 0.0)) throw std::invalid_argument("sample_wedge: grid_step must be positive");

  WedgeZ z;
  z.floors = floors;
  z.horizon = horizon;
  z.left = empty_path(params, horizon, grid_step, jump_record_threshold);
  z.right = empty_path(params, horizon, grid_step, jump_record_threshold);

  Stream left_rng = rng.substream(rng());
  Stream right_rng = rng.substream(rng());
  StableStepper left(params, jump_record_threshold, left_rng);
  StableStepper right(params, jump_record_threshold, right_rng);

  const std::size_t n = grid_intervals(horizon, grid_step);
  z.left.values.reserve(n + 1);
  z.right.values.reserve(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    const double dt = z.left.time_at(i) - z.left.time_at(i - 1);
    const std::size_t nl = z.left.jumps.size(), nr = z.right.jumps.size();
    const double l = left.advance(dt, z.left.jumps);
    const double r = right.advance(dt, z.right.jumps);
    z.left.values.push_back(l);
    z.right.values.push_back(r);
    if (stop_at_exit && (breached(z.left.jumps, nl, l, -floors.left) ||
                         breached(z.right.jumps, nr, r, -floors.right)))
      break;
  }
  z.exit_time = wedge_exit_time(z);
  return z;
}

std::optional<double> wedge_exit_time(const WedgeZ& z) {
  const auto l = first_passage_below(z.left, -z.floors.left);
  const auto r = first_passage_below(z.right, -z.floors.right);
  if (l && r) return std::min(*l, *r);
  return l ? l : r;
}

std::vector<BubbleRecord> extract_bubbles(const WedgeZ& z, double u, double threshold) {
  if (u > z.horizon) throw std::invalid_argument("extract_bubbles: u beyond horizon");
  const double resolution = std::max(z.left.jump_record_threshold, z.right.jump_record_threshold);
  if (threshold < resolution)
    throw std::invalid_argument("extract_bubbles: threshold below the jump ledger resolution");
  std::vector<BubbleRecord> out;
  for (const auto& j : z.left.jumps)
    if (j.time <= u && j.size >= threshold) out.push_back({j.time, Side::left, j.size});
  for (const auto& j : z.right.jumps)
    if (j.time <= u && j.size >= threshold) out.push_back({j.time, Side::right, j.size});
  std::stable_sort(out.begin(), out.end(),
                   [](const BubbleRecord& a, const BubbleRecord& b) { return a.time < b.time; });
  return out;
}

bool regularity_event(const WedgeZ& z, double u, double delta) {
  if (!(delta > 0.0) || !(delta < std::min(z.floors.left, z.floors.right)))
    throw std::invalid_argument("regularity_event: delta must lie in (0, min(floors))");
  if (u < 0.0 || u > z.horizon) throw std::invalid_argument("regularity_event: u outside [0, horizon]");
  return z.left.running_min(u) >= -z.floors.left + delta && z.right.running_min(u) >= -z.floors.right + delta;
}

void write_wedge_csv(const WedgeZ& z, std::ostream& out) {
  out << "u,L,R,alive_flag\n";
  const std::size_t n = std::min(z.left.values.size(), z.right.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double u = z.left.time_at(i);
    write_row(out, {format_double(u), format_double(z.left.values[i]), format_double(z.right.values[i]),
                    z.alive_at(u) ? "1" : "0"});
  }
}

void write_bubbles_csv(const std::vector<BubbleRecord>& bubbles, std::ostream& out) {
  out << "time,side,boundary_length\n";
  for (const auto& b : bubbles)
    write_row(out, {format_double(b.time), side_name(b.side), format_double(b.boundary_length)});
}

double EnsembleSpec::resolved_grid_step() const {
  return grid_step > 0.0 ? grid_step : floors.time_unit() / 200.0;
}

double EnsembleSpec::resolved_threshold() const {
  if (jump_record_threshold > 0.0) return jump_record_threshold;
  double thr = floors.sum() / 100.0;
  if (params.scheme == Scheme::hybrid) thr = std::max(thr, params.delta_cut);
  return thr;
}

}  // namespace sle6
