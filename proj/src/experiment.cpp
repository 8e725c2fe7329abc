#include "sle6/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "sle6/aux_conditioning.hpp"
#include "sle6/disk_field.hpp"
#include "sle6/disk_process.hpp"
#include "sle6/io.hpp"
#include "sle6/peanosphere.hpp"
#include "sle6/random.hpp"
#include "sle6/reference.hpp"
#include "sle6/stable_levy.hpp"
#include "sle6/stats.hpp"
#include "sle6/wedge_process.hpp"

namespace sle6 {

using nlohmann::json;
namespace fs = std::filesystem;

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("malformed config " + path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  c.merge(j);
  return c;
}

void ExperimentConfig::merge(const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const std::set<std::string> known{"experiment", "seed", "n", "out", "threads", "gamma", "params"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw UsageError("unknown config field '" + key + "'");
  try {
    if (j.contains("experiment")) experiment = j.at("experiment").get<std::string>();
    if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("n")) n = j.at("n").get<std::size_t>();
    if (j.contains("out")) out_dir = j.at("out").get<std::string>();
    if (j.contains("threads")) threads = j.at("threads").get<unsigned>();
    if (j.contains("gamma")) gamma = j.at("gamma").get<double>();
    if (j.contains("params")) {
      if (!j.at("params").is_object()) throw UsageError("config field 'params' must be an object");
      for (const auto& [key, value] : j.at("params").items()) params[key] = value;
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  return {{"experiment", experiment}, {"seed", seed},     {"n", n},         {"out", out_dir.string()},
          {"threads", threads},       {"gamma", gamma}, {"params", params}};
}

bool ExperimentResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

int exit_code(const ExperimentResult& result) { return result.passed() ? 0 : 1; }

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "simulate-stable", "simulate-wedge", "survival-curve",  "lemma-3-2",          "jump-law",
      "scheme-equivalence", "disk-field",  "peanosphere",     "supermartingale",    "endpoint-diagnostics"};
  return names;
}

namespace {

// Reads overrides from the config and records every resolved value, so the
// summary lists defaults as well. Leftover keys are an error.
class ParamReader {
 public:
  explicit ParamReader(const json& in) : in_(in) {}

  double num(const std::string& key, double def) {
    const double v = get<double>(key, def);
    if (!std::isfinite(v)) throw UsageError("parameter '" + key + "' must be finite");
    return v;
  }
  std::size_t count(const std::string& key, std::size_t def) { return get<std::size_t>(key, def); }
  bool flag(const std::string& key, bool def) { return get<bool>(key, def); }
  std::string str(const std::string& key, const std::string& def) { return get<std::string>(key, def); }
  std::vector<double> list(const std::string& key, const std::vector<double>& def) {
    return get<std::vector<double>>(key, def);
  }
  void record(const std::string& key, const json& value) { resolved_[key] = value; }

  /// Call once every parameter has been read, before the expensive part.
  void reject_unknown() const {
    for (const auto& [key, _] : in_.items())
      if (!used_.count(key)) throw UsageError("unknown parameter '" + key + "' for this experiment");
  }
  [[nodiscard]] const json& resolved() const { return resolved_; }

 private:
  template <class T>
  T get(const std::string& key, const T& def) {
    used_.insert(key);
    T v = def;
    if (in_.contains(key)) {
      try {
        v = in_.at(key).get<T>();
      } catch (const json::exception&) {
        throw UsageError("parameter '" + key + "' has the wrong type");
      }
    }
    resolved_[key] = v;
    return v;
  }

  const json& in_;
  json resolved_ = json::object();
  std::set<std::string> used_;
};

// Files go to the output directory; every name is remembered for the result.
class Outputs {
 public:
  Outputs(fs::path dir, ExperimentResult& r) : dir_(std::move(dir)), result_(r) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path p = dir_ / name;
    std::ofstream out = open_output(p);
    body(out);
    out.flush();
    if (!out) throw IoError("failed writing " + p.string());
    result_.files.push_back(p);
  }

 private:
  fs::path dir_;
  ExperimentResult& result_;
};

void add_check(ExperimentResult& r, std::string name, double value, double target, double tolerance, bool pass) {
  r.checks.push_back({std::move(name), value, target, tolerance, pass});
}

// |value - target| <= tolerance.
void add_close(ExperimentResult& r, std::string name, double value, double target, double tolerance) {
  add_check(r, std::move(name), value, target, tolerance, std::abs(value - target) <= tolerance);
}

std::string fmt_key(double x) { return format_double(x); }

StableParams stable_from(ParamReader& p, const std::string& default_scheme) {
  const std::string scheme = p.str("scheme", default_scheme);
  const double c = p.num("levy_const", 1.0);
  const double delta = p.num("delta_cut", 1e-3);
  StableParams sp;
  if (scheme == "exact")
    sp = StableParams::exact(c);
  else if (scheme == "hybrid")
    sp = StableParams::hybrid(c, delta);
  else
    throw UsageError("scheme must be 'exact' or 'hybrid'");
  try {
    sp.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return sp;
}

FloorPair floors_from(ParamReader& p) {
  FloorPair f{p.num("floor_left", 0.5), p.num("floor_right", 0.5)};
  try {
    f.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return f;
}

EnsembleSpec ensemble_from(ParamReader& p, const ExperimentConfig& cfg, std::size_t default_n, const std::string& tag) {
  EnsembleSpec spec;
  spec.params = stable_from(p, "exact");
  spec.floors = floors_from(p);
  spec.n = cfg.n ? cfg.n : default_n;
  spec.seed = cfg.seed;
  spec.threads = cfg.threads;
  spec.tag = tag;
  const double steps_per_unit = p.num("grid_steps_per_unit", 200.0);
  if (!(steps_per_unit >= 1.0)) throw UsageError("grid_steps_per_unit must be >= 1");
  spec.grid_step = spec.floors.time_unit() / steps_per_unit;
  return spec;
}

std::vector<double> sorted_positive(ParamReader& p, const std::string& key, const std::vector<double>& def,
                                    bool allow_zero) {
  auto v = p.list(key, def);
  if (v.empty()) throw UsageError("parameter '" + key + "' must not be empty");
  for (double x : v)
    if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0))
      throw UsageError("parameter '" + key + "' has an out-of-range entry");
  if (!std::is_sorted(v.begin(), v.end())) throw UsageError("parameter '" + key + "' must be sorted");
  return v;
}

// ---------------------------------------------------------------- stable

void run_simulate_stable(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult& r) {
  const StableParams sp = stable_from(p, "hybrid");
  const double horizon = p.num("horizon", 1.0);
  const double grid_step = p.num("grid_step", 1e-3);
  const double thr = p.num("jump_threshold", 0.25);
  if (!(horizon > 0.0 && grid_step > 0.0 && thr > 0.0)) throw UsageError("horizon, grid_step and jump_threshold must be positive");
  const std::size_t n = cfg.n ? cfg.n : 1000;
  p.reject_unknown();

  std::vector<double> terminal(n);
  std::vector<std::size_t> counts(n);
  StablePath first;
  const std::uint64_t tag = hash_tag("simulate-stable");
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    Stream rng(cfg.seed, tag, i);
    StablePath path = sample_path(sp, horizon, grid_step, thr, rng);
    terminal[i] = path.values.back();
    counts[i] = path.jumps.size();
    if (i == 0) first = std::move(path);
  });

  out.write("path.csv", [&](std::ostream& o) { write_path_csv(first, o); });
  out.write("jumps.csv", [&](std::ostream& o) { write_jumps_csv(first, o); });
  out.write("terminal.csv", [&](std::ostream& o) {
    o << "index,value,ledger_jumps\n";
    for (std::size_t i = 0; i < n; ++i) write_row(o, {std::to_string(i), format_double(terminal[i]), std::to_string(counts[i])});
  });
  out.write("plot.svg", [&](std::ostream& o) {
    PlotSeries s{"X", {}, first.values};
    for (std::size_t i = 0; i < first.values.size(); ++i) s.x.push_back(first.time_at(i));
    write_svg_plot(o, "stable path", {s});
  });

  // The hybrid ledger is an exact Poisson record of the jumps >= threshold.
  if (sp.scheme == Scheme::hybrid) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const double expected = tail_rate(sp, thr) * horizon * double(n);
    add_close(r, "ledger_jump_count", total, expected, 3.0 * std::sqrt(expected));
  }
}

// ---------------------------------------------------------------- wedge

void run_simulate_wedge(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult&) {
  const StableParams sp = stable_from(p, "exact");
  const FloorPair floors = floors_from(p);
  const double horizon = p.num("horizon_units", 2.0) * floors.time_unit();
  const double steps_per_unit = p.num("grid_steps_per_unit", 1000.0);
  const double thr = p.num("bubble_threshold_fraction", 0.01) * floors.sum();
  if (!(horizon > 0.0 && steps_per_unit >= 1.0 && thr > 0.0)) throw UsageError("bad wedge parameters");
  p.reject_unknown();
  Stream rng(cfg.seed, hash_tag("simulate-wedge"), 0);
  const WedgeZ z = sample_wedge(sp, floors, horizon, floors.time_unit() / steps_per_unit, thr, rng);
  p.record("exit_time", z.exit_time ? json(*z.exit_time) : json(nullptr));
  const auto bubbles = extract_bubbles(z, horizon, thr);

  out.write("wedge.csv", [&](std::ostream& o) { write_wedge_csv(z, o); });
  out.write("bubbles.csv", [&](std::ostream& o) { write_bubbles_csv(bubbles, o); });
  out.write("plot.svg", [&](std::ostream& o) {
    PlotSeries l{"L", {}, z.left.values}, rr{"R", {}, z.right.values};
    for (std::size_t i = 0; i < z.left.values.size(); ++i) l.x.push_back(z.left.time_at(i));
    rr.x = l.x;
    write_svg_plot(o, "wedge boundary lengths", {l, rr});
  });
}

// ---------------------------------------------------------------- survival

void run_survival_curve(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult& r) {
  EnsembleSpec spec = ensemble_from(p, cfg, 100'000, "survival-curve");
  const auto units = sorted_positive(p, "u_grid", {0, 0.05, 0.1, 0.2, 0.35, 0.5, 1, 2, 3.5, 5}, true);
  const bool scaling = p.flag("scaling_check", true);
  const double lambda = p.num("scaling_factor", 2.0);
  if (!(lambda > 0.0)) throw UsageError("scaling_factor must be positive");
  p.reject_unknown();

  std::vector<double> grid;
  for (double u : units) grid.push_back(u * spec.floors.time_unit());
  const SurvivalCurve curve = estimate_survival(spec, grid);
  out.write("survival.csv", [&](std::ostream& o) { write_survival_csv(curve, o); });

  const auto& pts = curve.points;
  if (grid.front() == 0.0)
    add_check(r, "unit_mass_at_zero", pts.front().estimate.mean, 1.0, 0.0, pts.front().estimate.mean == 1.0);

  double worst = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double se = std::hypot(pts[k].estimate.std_err, pts[k - 1].estimate.std_err);
    const double rise = pts[k].estimate.mean - pts[k - 1].estimate.mean;
    worst = std::max(worst, se > 0.0 ? rise / se : (rise > 0.0 ? INFINITY : 0.0));
  }
  add_check(r, "nonincreasing_max_rise_in_stderr", worst, 0.0, 2.0, worst <= 2.0);

  if (units.back() >= 5.0) {
    const double last = pts.back().estimate.mean;
    add_check(r, "survival_at_u_" + fmt_key(units.back()) + "_units", last, 0.05, 0.0, last < 0.05);
  }

  std::vector<PlotSeries> plot{{"survival", units, {}}};
  for (const auto& pt : pts) plot[0].y.push_back(pt.estimate.mean);

  if (scaling) {
    EnsembleSpec big = spec;
    big.floors = {spec.floors.left * lambda, spec.floors.right * lambda};
    big.grid_step = big.floors.time_unit() / (spec.floors.time_unit() / spec.grid_step);
    std::vector<double> big_grid;
    for (double u : units) big_grid.push_back(u * big.floors.time_unit());
    const SurvivalCurve scaled = estimate_survival(big, big_grid);
    out.write("survival_scaled.csv", [&](std::ostream& o) { write_survival_csv(scaled, o); });
    double max_z = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double se = std::hypot(pts[k].estimate.std_err, scaled.points[k].estimate.std_err);
      const double d = std::abs(pts[k].estimate.mean - scaled.points[k].estimate.mean);
      max_z = std::max(max_z, se > 0.0 ? d / se : (d > 0.0 ? INFINITY : 0.0));
    }
    add_check(r, "scaling_identity_max_abs_z", max_z, 0.0, 3.0, max_z <= 3.0);
    plot.push_back({"scaled floors", units, {}});
    for (const auto& pt : scaled.points) plot[1].y.push_back(pt.estimate.mean);
  }
  out.write("plot.svg", [&](std::ostream& o) { write_svg_plot(o, "disk survival E[weight(u)]", plot); });
}

// ---------------------------------------------------------------- lemma 3.2

void run_lemma32(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult& r) {
  const StableParams sp = stable_from(p, "exact");
  const FloorPair floors = floors_from(p);
  const auto eps_grid = sorted_positive(p, "eps_grid", {0.05, 0.1, 0.2, 0.4}, false);
  AuxParams base;
  base.r = p.num("r", 1.0);
  base.zeta = p.num("zeta", 0.1);
  base.floors = floors;
  const double delta_fraction = p.num("delta_fraction", 0.01);
  if (!(delta_fraction > 0.0 && delta_fraction < 1.0)) throw UsageError("delta_fraction must lie in (0, 1)");
  const std::size_t n = cfg.n ? cfg.n : 100'000;
  const bool side_lengths = std::abs(base.r - floors.sum()) <= 1e-12 * floors.sum();
  p.reject_unknown();

  std::vector<RateCell> rate_cells;
  std::vector<SideLengthCell> side_cells;
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    AuxParams aux = base;
    aux.epsilon = eps_grid[k];
    aux.delta_cut = delta_fraction * aux.epsilon;
    try {
      aux.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto outcomes = run_aux_ensemble(sp, aux, n, cfg.seed, "lemma-3-2/eps" + std::to_string(k), cfg.threads);
    rate_cells.push_back(summarize_rate_cell(outcomes, aux, sp.alpha));
    if (side_lengths) side_cells.push_back(summarize_side_lengths(outcomes, aux));
  }
  const RateReport rep = summarize_rate_cells(rate_cells);
  out.write("rate.csv", [&](std::ostream& o) { write_rate_csv(rep, o); });

  for (const auto& c : rep.cells)
    add_check(r, "factorization_z_eps_" + fmt_key(c.epsilon), c.z_score, 0.0, 3.0, std::abs(c.z_score) <= 3.0);
  if (rep.slope)
    add_close(r, "slope", rep.slope->slope.mean, 2.5, 0.1);
  else
    add_check(r, "slope", NAN, 2.5, 0.1, false);
  add_close(r, "conditional_factor_eps_0.2_r_1", conditional_jump_factor(0.2, 1.0, sp.alpha), 0.02140, 5e-6);
  add_check(r, "f0_increasing", rep.f0_increasing ? 1.0 : 0.0, 1.0, 0.0, rep.f0_increasing);
  add_check(r, "fitted_a", rep.fitted_a, 0.0, 0.0, rep.fitted_a > 0.0);

  if (side_lengths) {
    const SideLengthReport sl = summarize_side_length_cells(side_cells);
    out.write("side_lengths.csv", [&](std::ostream& o) {
      o << "epsilon,successes,violations,mean_abs_left_dev,mean_abs_left_dev_stderr,mean_abs_right_dev,left_bound\n";
      for (const auto& c : sl.cells)
        write_row(o, {format_double(c.epsilon), std::to_string(c.successes), std::to_string(c.violations),
                      format_double(c.abs_left_dev.mean), format_double(c.abs_left_dev.std_err),
                      format_double(c.abs_right_dev.mean), format_double(c.left_bound)});
    });
    add_check(r, "side_length_violations", double(sl.total_violations), 0.0, 0.0, sl.total_violations == 0);
    add_check(r, "left_deviation_decreasing", sl.left_dev_decreasing ? 1.0 : 0.0, 1.0, 0.0, sl.left_dev_decreasing);
  }

  out.write("plot.svg", [&](std::ostream& o) {
    PlotSeries direct{"direct", {}, {}}, fact{"factorized", {}, {}};
    for (const auto& c : rep.cells) {
      if (c.underpowered) continue;
      direct.x.push_back(c.epsilon);
      direct.y.push_back(c.p_direct.mean);
      fact.x.push_back(c.epsilon);
      fact.y.push_back(c.p_factorized.mean);
    }
    write_svg_plot(o, "P[F(r)] against epsilon", {direct, fact}, true);
  });
}

// ---------------------------------------------------------------- jump law

void run_jump_law(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult& r) {
  const StableParams sp = stable_from(p, "exact");
  AuxParams aux;
  aux.epsilon = p.num("epsilon", 0.1);
  aux.zeta = p.num("zeta", 0.1);
  aux.r = p.num("r", 1.0);
  aux.floors = floors_from(p);
  try {
    aux.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::size_t n = cfg.n ? cfg.n : 10'000;
  if (n < 1000) throw UsageError("jump-law needs n >= 1000");
  p.reject_unknown();

  const auto outcomes = run_aux_ensemble(sp, aux, n, cfg.seed, "jump-law", cfg.threads);
  std::vector<double> jumps, waits;
  for (const auto& o : outcomes) {
    jumps.push_back(o.jump);
    waits.push_back(o.t_eps);
  }
  out.write("jumps.csv", [&](std::ostream& o) {
    o << "index,t_eps,jump\n";
    for (std::size_t i = 0; i < n; ++i) write_row(o, {std::to_string(i), format_double(waits[i]), format_double(jumps[i])});
  });

  const double eps = aux.epsilon, a = sp.alpha;
  const KsResult ks = ks_one_sample(jumps, [&](double y) { return y < eps ? 0.0 : 1.0 - std::pow(y / eps, -a); });
  add_check(r, "ks_pvalue", ks.p_value, 0.01, 0.0, ks.p_value > 0.01);
  const double med = median(jumps), med_target = eps * std::pow(2.0, 1.0 / a);
  add_close(r, "median", med, med_target, 0.02 * med_target);
  const Estimate mean = sample_mean(jumps);
  const double mean_target = eps * a / (a - 1.0);
  add_close(r, "mean", mean.mean, mean_target, 3.0 * mean.std_err);
  const double min_jump = *std::min_element(jumps.begin(), jumps.end());
  add_check(r, "min_jump", min_jump, eps, 0.0, min_jump >= eps);
  const Estimate wait = sample_mean(waits);
  add_close(r, "mean_t_eps", wait.mean, 1.0 / tail_rate(sp, eps), 3.0 * wait.std_err);

  out.write("plot.svg", [&](std::ostream& o) {
    std::vector<double> sorted = jumps;
    std::sort(sorted.begin(), sorted.end());
    PlotSeries emp{"empirical survival", {}, {}}, target{"(y/eps)^-alpha", {}, {}};
    for (std::size_t i = 0; i < sorted.size(); i += std::max<std::size_t>(1, n / 400)) {
      emp.x.push_back(sorted[i]);
      emp.y.push_back(1.0 - double(i) / double(n));
      target.x.push_back(sorted[i]);
      target.y.push_back(std::pow(sorted[i] / eps, -a));
    }
    write_svg_plot(o, "jump at T_eps", {emp, target}, true);
  });
}

// ---------------------------------------------------------------- schemes

void run_scheme_equivalence(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult& r) {
  const double c = p.num("levy_const", 1.0);
  const double delta = p.num("delta_cut", 1e-3);
  const double horizon = p.num("horizon", 1.0);
  const double count_eps = p.num("count_eps", 0.1);
  if (!(horizon > 0.0 && count_eps > delta && delta > 0.0)) throw UsageError("need horizon > 0 and count_eps > delta_cut > 0");
  const std::size_t n = cfg.n ? cfg.n : 100'000;
  const StableParams exact = StableParams::exact(c), hybrid = StableParams::hybrid(c, delta);
  p.reject_unknown();

  std::vector<double> x_exact(n), x_hybrid(n);
  std::vector<std::size_t> counts(n);
  const std::uint64_t te = hash_tag("scheme-equivalence/exact"), th = hash_tag("scheme-equivalence/hybrid");
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    Stream re(cfg.seed, te, i);
    x_exact[i] = sample_increment(exact, horizon, re);
    Stream rh(cfg.seed, th, i);
    const StablePath path = sample_path(hybrid, horizon, horizon, count_eps, rh);
    x_hybrid[i] = path.values.back();
    counts[i] = path.jumps.size();
  });

  const KsResult ks = ks_two_sample(x_exact, x_hybrid);
  add_check(r, "terminal_ks_distance", ks.statistic, 0.0, 0.02, ks.statistic < 0.02);

  std::vector<double> cd(counts.begin(), counts.end());
  const Estimate count = sample_mean(cd);
  const double expected = tail_rate(hybrid, count_eps) * horizon;
  add_close(r, "ledger_count_mean", count.mean, expected, 0.02 * expected);
  double ss = 0.0;
  for (double k : cd) ss += (k - count.mean) * (k - count.mean);
  const double dispersion = ss / double(n - 1) / count.mean;
  // Var of the sample dispersion index of a Poisson sample is about 2 / n.
  const double disp_z = (dispersion - 1.0) / std::sqrt(2.0 / double(n));
  add_check(r, "ledger_count_dispersion_z", disp_z, 0.0, 3.0, std::abs(disp_z) <= 3.0);

  std::sort(x_exact.begin(), x_exact.end());
  std::sort(x_hybrid.begin(), x_hybrid.end());
  out.write("quantiles.csv", [&](std::ostream& o) {
    o << "probability,exact,hybrid\n";
    for (int k = 1; k < 1000; ++k) {
      const auto i = static_cast<std::size_t>(double(k) / 1000.0 * double(n));
      write_row(o, {format_double(k / 1000.0), format_double(x_exact[i]), format_double(x_hybrid[i])});
    }
  });
  out.write("counts.csv", [&](std::ostream& o) {
    std::map<std::size_t, std::size_t> hist;
    for (auto k : counts) ++hist[k];
    o << "count,paths\n";
    for (const auto& [k, m] : hist) write_row(o, {std::to_string(k), std::to_string(m)});
  });
  out.write("plot.svg", [&](std::ostream& o) {
    PlotSeries qq{"hybrid vs exact quantiles", {}, {}};
    for (int k = 1; k < 200; ++k) {
      const auto i = static_cast<std::size_t>(double(k) / 200.0 * double(n));
      qq.x.push_back(x_exact[i]);
      qq.y.push_back(x_hybrid[i]);
    }
    write_svg_plot(o, "terminal quantiles", {qq});
  });
}

// ---------------------------------------------------------------- disk field

// Least-squares slope of y on log x.
double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    sx += lx;
    sy += y[i];
    sxx += lx * lx;
    sxy += lx * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> uniform_grid(double length, double step) {
  const auto m = static_cast<std::size_t>(std::llround(length / step)) + 1;
  std::vector<double> x(m);
  for (std::size_t j = 0; j < m; ++j) x[j] = double(j) * step;
  return x;
}

void run_disk_field(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult& r) {
  DiskFieldParams dp;
  dp.gamma = cfg.gamma;
  dp.excursion_duration = p.num("excursion_duration", 1.0);
  dp.time_step = p.num("time_step", 1e-4);
  dp.x_step = p.num("x_step", 0.01);
  dp.mode_cutoff = static_cast<int>(p.count("mode_cutoff", 512));
  dp.gmc_scale = p.num("gmc_scale", 0.05);
  try {
    dp.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::size_t n = cfg.n ? cfg.n : 10'000;
  const auto shifts = p.list("shifts", {0.7, -1.3, 2.5});
  const std::size_t qv_excursions = p.count("qv_excursions", 200);
  const auto qv_steps = p.list("qv_steps", {2e-4, 1e-4, 5e-5});
  const double qv_max_dx = p.num("qv_max_dx", 0.01);
  const std::size_t arc_disks = p.count("arc_disks", 100);
  const auto oracle_times = p.list("oracle_times", {0.25, 0.5, 0.75});
  const std::size_t walk_steps = p.count("oracle_walk_steps", 8000);
  const std::size_t lat_samples = p.count("lateral_samples", 20);
  const double lat_length = p.num("lateral_length", 50.0);
  const double lat_max_lag = p.num("lateral_max_lag", 0.1);
  const auto gmc_scales = p.list("gmc_scales", {0.05, 0.1});
  const std::size_t gmc_samples = p.count("gmc_samples", 40);
  const double gmc_length = p.num("gmc_length", 20.0);
  if (qv_steps.empty() || oracle_times.empty() || gmc_scales.empty() || arc_disks == 0 || qv_excursions == 0 ||
      lat_samples == 0 || gmc_samples < 2 || walk_steps < 2 || walk_steps % 2 || !(lat_max_lag > 4.0 * dp.x_step))
    throw UsageError("bad disk-field parameters");
  for (double t : oracle_times)
    if (!(t > 0.0 && t < 1.0)) throw UsageError("oracle_times must lie in (0, 1)");
  p.reject_unknown();
  const double dim = dp.bessel_dim();
  const double T = dp.excursion_duration;

  // One sample for the serialized output and the shift check.
  Stream main_rng(cfg.seed, hash_tag("disk-field/sample"), 0);
  const DiskSample sample = sample_disk(dp, main_rng);
  out.write("disk.csv", [&](std::ostream& o) { write_disk_csv(sample, o); });
  out.write("measure.csv", [&](std::ostream& o) { write_measure_csv(sample.measure, o); });

  double shift_err = 0.0;
  for (double C : shifts) {
    const BoundaryMeasure m = boundary_gmc(sample.radial, sample.trace, dp.gamma, dp.gmc_scale, C);
    const double f = std::exp(dp.gamma / 2.0 * C);
    for (std::size_t k = 0; k < m.atoms.size(); ++k)
      shift_err = std::max(shift_err, std::abs(m.atoms[k].mass / (f * sample.measure.atoms[k].mass) - 1.0));
    shift_err = std::max(shift_err, std::abs(m.total / (f * sample.measure.total) - 1.0));
  }
  add_check(r, "shift_multiplicativity_max_rel_err", shift_err, 0.0, 1e-12, shift_err <= 1e-12);

  // Radial quadratic variation: the same excursions on successively halved grids.
  {
    const double finest = *std::min_element(qv_steps.begin(), qv_steps.end());
    std::vector<QvTally> tallies(qv_steps.size());
    std::vector<std::vector<QvTally>> per(qv_excursions, std::vector<QvTally>(qv_steps.size()));
    const std::uint64_t tag = hash_tag("disk-field/qv");
    parallel_for(qv_excursions, cfg.threads, [&](std::size_t i) {
      Stream rng(cfg.seed, tag, i);
      const ExcursionPath fine = sample_bessel_excursion(dim, T, finest, rng);
      for (std::size_t s = 0; s < qv_steps.size(); ++s) {
        const auto stride = static_cast<std::size_t>(std::llround(qv_steps[s] / finest));
        ExcursionPath coarse{T, finest * double(stride), {}};
        for (std::size_t k = 0; k < fine.values.size(); k += stride) coarse.values.push_back(fine.values[k]);
        if (coarse.values.size() < 3 || (fine.values.size() - 1) % stride) throw UsageError("qv_steps must divide the excursion grid");
        per[i][s] = radial_quadratic_variation(coarse, dp.gamma, qv_max_dx);
      }
    });
    for (const auto& row : per)
      for (std::size_t s = 0; s < row.size(); ++s) tallies[s] += row[s];
    out.write("radial_qv.csv", [&](std::ostream& o) {
      o << "time_step,qv_per_unit_x,span\n";
      for (std::size_t s = 0; s < qv_steps.size(); ++s)
        write_row(o, {format_double(qv_steps[s]), format_double(tallies[s].per_unit_x()), format_double(tallies[s].span)});
    });
    double worst = 0.0;
    for (const auto& t : tallies) worst = std::max(worst, std::abs(t.per_unit_x() / 2.0 - 1.0));
    add_check(r, "radial_qv_max_rel_dev_from_2", worst, 0.0, 0.05, worst <= 0.05);
  }

  // Arc split of two marked points: uniform given the surface.
  {
    std::vector<std::vector<double>> fractions(arc_disks);
    const std::size_t per_disk = (n + arc_disks - 1) / arc_disks;
    const std::uint64_t tag = hash_tag("disk-field/arc");
    parallel_for(arc_disks, cfg.threads, [&](std::size_t i) {
      Stream rng(cfg.seed, tag, i);
      const DiskSample s = sample_disk(dp, rng);
      for (std::size_t k = 0; k < per_disk && i * per_disk + k < n; ++k) {
        const auto [left, right] = mark_two_points(s.measure, rng);
        fractions[i].push_back(left / (left + right));
      }
    });
    std::vector<double> all;
    for (const auto& f : fractions) all.insert(all.end(), f.begin(), f.end());
    const KsResult ks = ks_one_sample(all, [](double u) { return std::clamp(u, 0.0, 1.0); });
    add_check(r, "arc_split_uniform_ks_pvalue", ks.p_value, 0.01, 0.0, ks.p_value > 0.01);
  }

  // Excursion marginals against the conditioned random walk.
  {
    const double coarse_step = T / 4.0;
    std::vector<std::vector<double>> vals(n);
    const std::uint64_t tag = hash_tag("disk-field/oracle");
    std::vector<double> step_times;
    for (double t : oracle_times) step_times.push_back(t * T);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
      Stream rng(cfg.seed, tag, i);
      // A grid fine enough to contain every requested time.
      double g = coarse_step;
      auto on_grid = [&](double gg) {
        return std::all_of(step_times.begin(), step_times.end(), [&](double t) {
          const double k = t / gg;
          return std::abs(k - std::round(k)) < 1e-9;
        });
      };
      while (!on_grid(g) && g > T * 1e-6) g /= 2.0;
      const ExcursionPath e = sample_bessel_excursion(dim, T, g, rng);
      for (double t : step_times) vals[i].push_back(e.values[static_cast<std::size_t>(std::llround(t / g))]);
    });
    out.write("excursion_oracle.csv", [&](std::ostream& o) {
      o << "time,ks_statistic,ks_pvalue,sample_mean,oracle_mean\n";
      for (std::size_t q = 0; q < oracle_times.size(); ++q) {
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = vals[i][q];
        const int N = static_cast<int>(walk_steps);
        const int at = static_cast<int>(std::llround(oracle_times[q] * N));
        const auto probs = conditioned_walk_marginal(dim, N, at);
        double omean = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) omean += probs[k] * double(k) * std::sqrt(T / N);
        const KsResult ks = ks_one_sample(xs, [&](double x) { return jittered_walk_cdf(probs, N, T, x); });
        write_row(o, {format_double(oracle_times[q]), format_double(ks.statistic), format_double(ks.p_value),
                      format_double(sample_mean(xs).mean), format_double(omean)});
        add_check(r, "excursion_oracle_ks_pvalue_t_" + fmt_key(oracle_times[q]), ks.p_value, 0.01, 0.0,
                  ks.p_value > 0.01);
      }
    });
  }

  // Lateral covariance on one boundary line at short range.
  {
    const auto x = uniform_grid(lat_length, dp.x_step);
    const auto max_lag = static_cast<std::size_t>(std::floor(lat_max_lag / dp.x_step + 1e-9));
    std::vector<std::size_t> lags;
    for (std::size_t k = 4; k <= max_lag; ++k) lags.push_back(k);
    std::vector<std::vector<double>> sums(lat_samples, std::vector<double>(lags.size(), 0.0));
    const std::uint64_t tag = hash_tag("disk-field/lateral");
    parallel_for(lat_samples, cfg.threads, [&](std::size_t i) {
      Stream rng(cfg.seed, tag, i);
      const BoundaryTrace tr = sample_lateral_trace(x, dp.mode_cutoff, rng);
      for (std::size_t l = 0; l < lags.size(); ++l) {
        double s = 0.0;
        for (const auto* line : {&tr.line0, &tr.line_pi})
          for (std::size_t j = 0; j + lags[l] < x.size(); ++j) {
            const double d = (*line)[j + lags[l]] - (*line)[j];
            s += d * d;
          }
        sums[i][l] = s / (2.0 * double(x.size() - lags[l]));
      }
    });
    std::vector<double> dx, cov_emp, cov_oracle, cov_model;
    for (std::size_t l = 0; l < lags.size(); ++l) {
      double v = 0.0;
      for (const auto& s : sums) v += s[l];
      v /= double(lat_samples);
      dx.push_back(double(lags[l]) * dp.x_step);
      // C(dx) = C(0) - semivariogram; the constant drops out of the slope.
      cov_emp.push_back(-0.5 * v);
      cov_oracle.push_back(strip_line_covariance(dx.back()));
      cov_model.push_back(lateral_line_covariance(dx.back(), dp.mode_cutoff));
    }
    const double slope = log_slope(dx, cov_emp);
    const double oracle_slope = log_slope(dx, cov_oracle);
    double model_gap = 0.0;
    for (std::size_t l = 0; l < dx.size(); ++l) model_gap = std::max(model_gap, std::abs(cov_model[l] - cov_oracle[l]));
    out.write("lateral_covariance.csv", [&](std::ostream& o) {
      o << "dx,semivariogram,strip_covariance,mode_covariance\n";
      for (std::size_t l = 0; l < dx.size(); ++l)
        write_row(o, {format_double(dx[l]), format_double(-2.0 * cov_emp[l]), format_double(cov_oracle[l]),
                      format_double(cov_model[l])});
    });
    add_close(r, "lateral_covariance_slope", slope, -2.0, 0.2);
    add_close(r, "lateral_slope_vs_strip_oracle", slope, oracle_slope, 0.05 * std::abs(oracle_slope));
    add_check(r, "mode_covariance_vs_strip_oracle_max_abs", model_gap, 0.0, 1e-6, model_gap <= 1e-6);
  }

  // Mean boundary length per unit x for h0 = 0 against the lognormal moment.
  {
    const auto x = uniform_grid(gmc_length, dp.x_step);
    RadialProfile flat{x, std::vector<double>(x.size(), 0.0)};
    for (std::size_t s = 0; s < gmc_scales.size(); ++s) {
      const double scale = gmc_scales[s];
      const auto w = static_cast<std::size_t>(std::max(1L, std::lround(scale / dp.x_step)));
      if (4 * w >= x.size()) throw UsageError("gmc_length too short for the gmc scales");
      std::vector<double> means(gmc_samples);
      const std::uint64_t tag = hash_tag("disk-field/gmc" + std::to_string(s));
      parallel_for(gmc_samples, cfg.threads, [&](std::size_t i) {
        Stream rng(cfg.seed, tag, i);
        const BoundaryTrace tr = sample_lateral_trace(x, dp.mode_cutoff, rng);
        const BoundaryMeasure m = boundary_gmc(flat, tr, dp.gamma, scale);
        // Skip the edge atoms where the box average is truncated.
        const std::size_t per_line = x.size();
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t k = 0; k < m.atoms.size(); ++k) {
          const std::size_t j = k < per_line ? k : 2 * per_line - 1 - k;
          if (j < w || j + w >= per_line) continue;
          sum += m.atoms[k].mass / dp.x_step;
          ++cnt;
        }
        means[i] = sum / double(cnt);
      });
      const Estimate est = sample_mean(means);
      const double target = std::pow(scale, dp.gamma * dp.gamma / 4.0) *
                            std::exp(dp.gamma * dp.gamma / 8.0 * mollified_trace_variance(dp.x_step, scale, dp.mode_cutoff));
      add_close(r, "gmc_mean_density_scale_" + fmt_key(scale), est.mean, target, 3.0 * est.std_err);
    }
  }

  out.write("plot.svg", [&](std::ostream& o) {
    PlotSeries h{"h0", sample.radial.x, sample.radial.h0};
    PlotSeries t0{"trace y=0", sample.trace.x, sample.trace.line0};
    write_svg_plot(o, "disk field sample", {h, t0});
  });
}

// ---------------------------------------------------------------- peanosphere

void run_peanosphere(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult& r) {
  PeanoParams pp;
  pp.gamma = cfg.gamma;
  pp.var_rate = p.num("var_rate", 1.0);
  const double horizon = p.num("horizon", 1.0);
  const double path_step = p.num("path_step", 1e-3);
  try {
    pp.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(horizon > 0.0 && path_step > 0.0)) throw UsageError("horizon and path_step must be positive");
  p.reject_unknown();
  const std::size_t n = cfg.n ? cfg.n : 100'000;

  std::vector<double> l(n), rr(n);
  const std::uint64_t tag = hash_tag("peanosphere");
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    Stream rng(cfg.seed, tag, i);
    std::tie(l[i], rr[i]) = sample_peano_endpoint(pp, horizon, rng);
  });
  const Estimate corr = correlation(l, rr);
  add_close(r, "correlation", corr.mean, pp.correlation(), 0.01);
  for (const auto& [name, xs] : {std::pair{"variance_left", &l}, std::pair{"variance_right", &rr}}) {
    double ss = 0.0;
    for (double v : *xs) ss += v * v;
    const double var = ss / double(n), target = pp.var_rate * horizon;
    add_close(r, name, var, target, 3.0 * target * std::sqrt(2.0 / double(n)));
  }

  Stream prng(cfg.seed, hash_tag("peanosphere/path"), 0);
  const PeanoPath path = sample_peano_bm(pp, horizon, path_step, prng);
  out.write("path.csv", [&](std::ostream& o) { write_peano_csv(path, o); });
  out.write("endpoints.csv", [&](std::ostream& o) {
    o << "index,L,R\n";
    for (std::size_t i = 0; i < n; ++i) write_row(o, {std::to_string(i), format_double(l[i]), format_double(rr[i])});
  });
  out.write("plot.svg", [&](std::ostream& o) {
    write_svg_plot(o, "peanosphere Brownian motion", {{"L'", path.t, path.left}, {"R'", path.t, path.right}});
  });
}

// ---------------------------------------------------------------- supermartingale

void run_supermartingale(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult& r) {
  EnsembleSpec spec = ensemble_from(p, cfg, 100'000, "supermartingale");
  const double u = p.num("u", 0.1) * spec.floors.time_unit();
  const double v = p.num("v", 0.2) * spec.floors.time_unit();
  const std::size_t per_side = p.count("bins_per_side", 8);
  if (!(u >= 0.0 && v > u) || per_side == 0) throw UsageError("need 0 <= u < v and bins_per_side >= 1");
  p.reject_unknown();
  const SupermartingaleReport rep = supermartingale_check(u, v, spec, BinGrid::around_floors(spec.floors, per_side));
  out.write("bins.csv", [&](std::ostream& o) {
    o << "bin,count,mean_weight_u,mean_weight_v,difference,difference_stderr,flagged\n";
    for (std::size_t b = 0; b < rep.bins.size(); ++b) {
      const auto& bin = rep.bins[b];
      write_row(o, {std::to_string(b), std::to_string(bin.count), format_double(bin.mean_weight_u),
                    format_double(bin.mean_weight_v), format_double(bin.difference.mean),
                    format_double(bin.difference.std_err), bin.flagged ? "1" : "0"});
    }
  });
  add_check(r, "flagged_bin_fraction", rep.flagged_fraction(), 0.0, 0.05, rep.flagged_fraction() <= 0.05);
}

// ---------------------------------------------------------------- endpoint

void run_endpoint(const ExperimentConfig& cfg, ParamReader& p, Outputs& out, ExperimentResult& r) {
  EnsembleSpec spec = ensemble_from(p, cfg, 100'000, "endpoint-diagnostics");
  const auto units = sorted_positive(p, "u_grid", {0.5, 1, 2, 3.5, 5}, true);
  auto widths = sorted_positive(p, "slab_widths", {0.05, 0.1, 0.25, 0.5, 1, 2}, false);
  std::vector<double> grid;
  for (double u : units) grid.push_back(u * spec.floors.time_unit());
  for (double& w : widths) w *= spec.floors.sum();
  widths.push_back(INFINITY);
  p.reject_unknown();
  const EndpointReport rep = endpoint_diagnostics(spec, grid, widths);
  out.write("endpoint.json", [&](std::ostream& o) { write_endpoint_json(rep, o); });
  out.write("survival.csv", [&](std::ostream& o) {
    SurvivalCurve c;
    for (const auto& pt : rep.points) c.points.push_back({pt.u, pt.survival, pt.ess});
    write_survival_csv(c, o);
  });

  std::size_t violations = 0;
  double unbounded_gap = 0.0;
  for (const auto& pt : rep.points)
    for (const auto& s : pt.slabs) {
      if (s.count > 0 && s.min_weight < s.lower_bound) ++violations;
      if (std::isinf(s.width)) unbounded_gap = std::max(unbounded_gap, std::abs(s.mass.mean - pt.survival.mean));
    }
  add_check(r, "slab_weight_bound_violations", double(violations), 0.0, 0.0, violations == 0);
  add_check(r, "unbounded_slab_equals_survival", unbounded_gap, 0.0, 1e-15, unbounded_gap <= 1e-15);
  if (units.back() >= 5.0) {
    const double last = rep.points.back().survival.mean;
    add_check(r, "survival_at_u_" + fmt_key(units.back()) + "_units", last, 0.05, 0.0, last < 0.05);
  }
  out.write("plot.svg", [&](std::ostream& o) {
    PlotSeries s{"survival", units, {}};
    for (const auto& pt : rep.points) s.y.push_back(pt.survival.mean);
    write_svg_plot(o, "survival near the endpoint", {s});
  });
}

json checks_json(const std::vector<Check>& checks) {
  json a = json::array();
  for (const auto& c : checks) {
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    a.push_back({{"name", c.name}, {"value", num(c.value)}, {"target", num(c.target)},
                 {"tolerance", num(c.tolerance)}, {"pass", c.pass}});
  }
  return a;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  using Runner = void (*)(const ExperimentConfig&, ParamReader&, Outputs&, ExperimentResult&);
  static const std::map<std::string, Runner> runners{
      {"simulate-stable", run_simulate_stable},
      {"simulate-wedge", run_simulate_wedge},
      {"survival-curve", run_survival_curve},
      {"lemma-3-2", run_lemma32},
      {"jump-law", run_jump_law},
      {"scheme-equivalence", run_scheme_equivalence},
      {"disk-field", run_disk_field},
      {"peanosphere", run_peanosphere},
      {"supermartingale", run_supermartingale},
      {"endpoint-diagnostics", run_endpoint},
  };
  const auto it = runners.find(config.experiment);
  if (it == runners.end()) throw UsageError("unknown experiment '" + config.experiment + "'");
  if (!config.params.is_object()) throw UsageError("params must be an object");

  ExperimentResult result;
  result.experiment = config.experiment;
  ParamReader reader(config.params);
  Outputs out(config.out_dir, result);
  try {
    it->second(config, reader, out, result);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  reader.reject_unknown();
  result.params = reader.resolved();
  result.params["seed"] = config.seed;
  result.params["n"] = config.n;
  result.params["gamma"] = config.gamma;

  const json summary{{"experiment", result.experiment}, {"params", result.params}, {"checks", checks_json(result.checks)}};
  out.write("summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  return result;
}

}  // namespace sle6
