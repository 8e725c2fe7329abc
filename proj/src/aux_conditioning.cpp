#include "sle6/aux_conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fast_math.hpp"
#include "sle6/io.hpp"

namespace sle6 {

void AuxParams::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("AuxParams: epsilon must be positive");
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("AuxParams: zeta must lie in (0, 1)");
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("AuxParams: r must be positive");
  if (!(tube() < r)) throw std::invalid_argument("AuxParams: the tube epsilon^(1 - zeta) must be below r");
  floors.validate();
  const double d = resolved_delta_cut();
  if (!(d > 0.0 && d < epsilon)) throw std::invalid_argument("AuxParams: delta_cut must lie in (0, epsilon)");
}

double AuxParams::tube() const { return std::pow(epsilon, 1.0 - zeta); }

double AuxParams::resolved_delta_cut() const { return delta_cut > 0.0 ? delta_cut : epsilon / 100.0; }

namespace {

// Probability that a Brownian bridge from a to b over a segment with
// variance v = sigma^2 dt exceeds the level at distance d_a, d_b above its
// endpoints. Zero when the exponent makes it negligible.
double crossing_probability(double d_a, double d_b, double v) {
  if (d_a <= 0.0 || d_b <= 0.0) return 1.0;
  const double e = 2.0 * d_a * d_b / v;
  return e > 40.0 ? 0.0 : std::exp(-e);
}

}  // namespace

AuxPrelude sample_aux_prelude(const StableParams& params, const AuxParams& aux, Stream& rng) {
  const double eps = aux.epsilon;
  const double delta = aux.resolved_delta_cut();
  const double b = aux.tube();
  const double alpha = params.alpha;

  AuxPrelude out;
  out.t_eps = rng.exponential() / tail_rate(params, eps);

  const double mid_rate = tail_rate(params, delta) - tail_rate(params, eps);
  const double drift = large_jump_compensator(params, delta);
  const double var_rate = small_jump_variance_rate(params, delta);
  const double mid_tail = std::pow(eps / delta, -alpha);
  const bool fast = alpha == 1.5;

  double t = 0.0;
  double x = 0.0;
  bool inside = true;
  for (;;) {
    const double t_next = std::min(t + rng.exponential() / mid_rate, out.t_eps);
    const double dt = t_next - t;
    const double v = var_rate * dt;
    const double y = x + drift * dt + std::sqrt(v) * rng.normal();
    if (inside) {
      if (std::abs(y) > b) {
        inside = false;
      } else {
        const double p = crossing_probability(b - x, b - y, v) + crossing_probability(x + b, y + b, v);
        if (p > 0.0 && rng.uniform() < p) inside = false;
      }
    }
    if (t_next >= out.t_eps) {
      out.r_pre = y;
      break;
    }
    const double u = 1.0 - rng.uniform() * (1.0 - mid_tail);
    double size;
    if (fast) {
      const double w = detail::inv_cbrt(u);
      size = delta * w * w;
    } else {
      size = delta * std::pow(u, -1.0 / alpha);
    }
    x = y - size;
    if (std::abs(x) > b) inside = false;
    t = t_next;
  }
  out.stayed_in_tube = inside;
  return out;
}

AuxOutcome evaluate_aux_outcome(const AuxPrelude& prelude, double jump, const AuxParams& aux) {
  if (!(jump >= aux.epsilon)) throw std::invalid_argument("evaluate_aux_outcome: jump must be >= epsilon");
  AuxOutcome o;
  o.t_eps = prelude.t_eps;
  o.r_pre = prelude.r_pre;
  o.jump = jump;
  o.f0 = prelude.stayed_in_tube;
  o.f_r = o.f0 && jump >= aux.r && jump <= aux.r + aux.epsilon;
  o.implied_left = aux.floors.left + prelude.r_pre;
  o.implied_right = jump - o.implied_left;
  return o;
}

AuxOutcome run_aux_experiment(const StableParams& params, const AuxParams& aux, Stream& rng) {
  params.validate();
  aux.validate();
  const AuxPrelude prelude = sample_aux_prelude(params, aux, rng);
  return evaluate_aux_outcome(prelude, sample_pareto(aux.epsilon, params.alpha, rng), aux);
}

std::vector<AuxOutcome> run_aux_ensemble(const StableParams& params, const AuxParams& aux, std::size_t n,
                                         std::uint64_t seed, const std::string& tag, unsigned threads) {
  params.validate();
  aux.validate();
  std::vector<AuxOutcome> out(n);
  const std::uint64_t key = hash_tag(tag);
  parallel_for(n, threads, [&](std::size_t i) {
    Stream rng(seed, key, i);
    out[i] = run_aux_experiment(params, aux, rng);
  });
  return out;
}

double conditional_jump_factor(double epsilon, double r, double alpha) {
  if (!(epsilon > 0.0) || !(r >= epsilon)) throw std::invalid_argument("conditional_jump_factor: need r >= epsilon > 0");
  return std::pow(epsilon, alpha) * (std::pow(r, -alpha) - std::pow(r + epsilon, -alpha));
}

RateCell summarize_rate_cell(const std::vector<AuxOutcome>& outcomes, const AuxParams& aux, double alpha) {
  RateCell c;
  c.epsilon = aux.epsilon;
  c.r = aux.r;
  c.n = outcomes.size();
  for (const auto& o : outcomes) {
    c.f0_count += o.f0;
    c.fr_count += o.f_r;
  }
  c.p_f0 = binomial_estimate(c.f0_count, c.n);
  c.p_direct = binomial_estimate(c.fr_count, c.n);
  const double factor = conditional_jump_factor(aux.epsilon, aux.r, alpha);
  c.p_factorized = make_estimate(c.p_f0.mean * factor, c.p_f0.std_err * factor, c.n);
  c.underpowered = c.fr_count == 0;
  // The direct count has binomial variance even when it is small; use the
  // factorized mean for the null variance so zero counts do not get se = 0.
  const double pd = std::max(c.p_direct.mean, c.p_factorized.mean);
  const double se_direct = std::sqrt(pd * (1.0 - pd) / double(c.n));
  const double pooled = std::hypot(se_direct, c.p_factorized.std_err);
  c.z_score = pooled > 0.0 ? (c.p_direct.mean - c.p_factorized.mean) / pooled : 0.0;
  const double miss = 1.0 - c.p_f0.mean;
  c.a_lower = miss > 0.0 ? -std::log(miss) * std::pow(aux.epsilon, aux.zeta)
                         : std::numeric_limits<double>::infinity();
  return c;
}

RateReport summarize_rate_cells(std::vector<RateCell> cells) {
  RateReport rep;
  rep.cells = std::move(cells);
  std::vector<RateCell> by_eps = rep.cells;
  std::sort(by_eps.begin(), by_eps.end(), [](const RateCell& a, const RateCell& b) { return a.epsilon > b.epsilon; });
  rep.f0_increasing = true;
  for (std::size_t k = 1; k < by_eps.size(); ++k)
    if (!(by_eps[k].p_f0.mean > by_eps[k - 1].p_f0.mean)) rep.f0_increasing = false;
  rep.fitted_a = std::numeric_limits<double>::infinity();
  std::vector<PowerLawPoint> pts;
  for (const auto& c : rep.cells) {
    rep.fitted_a = std::min(rep.fitted_a, c.a_lower);
    rep.max_abs_z = std::max(rep.max_abs_z, std::abs(c.z_score));
    if (!c.underpowered) pts.push_back({c.epsilon, c.p_direct.mean, c.p_direct.std_err});
  }
  if (rep.cells.empty()) rep.fitted_a = 0.0;
  if (pts.size() >= 3) rep.slope = fit_power_law(pts);
  return rep;
}

RateReport verify_bubble_event_rate(const StableParams& params, const AuxParams& base,
                                    const std::vector<double>& eps_grid, std::size_t n, std::uint64_t seed,
                                    const std::string& tag, unsigned threads) {
  std::vector<RateCell> cells;
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    AuxParams aux = base;
    aux.epsilon = eps_grid[k];
    aux.validate();
    const auto outcomes = run_aux_ensemble(params, aux, n, seed, tag + "/eps" + std::to_string(k), threads);
    cells.push_back(summarize_rate_cell(outcomes, aux, params.alpha));
  }
  return summarize_rate_cells(std::move(cells));
}

void write_rate_csv(const RateReport& report, std::ostream& out) {
  out << "epsilon,r,p_direct,p_direct_stderr,p_factorized,p_f0,slope_contribution\n";
  for (const auto& c : report.cells) {
    // Exponent of eps implied by this cell alone if the prefactor were
    // exactly its small-eps value (3/2) r^(-5/2).
    const std::string contribution =
        c.underpowered ? "" : format_double(std::log(c.p_direct.mean / (1.5 * std::pow(c.r, -2.5))) / std::log(c.epsilon));
    write_row(out, {format_double(c.epsilon), format_double(c.r), format_double(c.p_direct.mean),
                    format_double(c.p_direct.std_err), format_double(c.p_factorized.mean),
                    format_double(c.p_f0.mean), contribution});
  }
}

JumpLawReport conditional_jump_law_check(const StableParams& params, double epsilon, std::size_t n,
                                         std::uint64_t seed, const std::string& tag, unsigned threads) {
  if (n < 1000) throw std::invalid_argument("conditional_jump_law_check: n must be at least 1000");
  AuxParams aux;
  aux.epsilon = epsilon;
  aux.r = std::max(aux.r, 2.0 * aux.tube());
  const auto outcomes = run_aux_ensemble(params, aux, n, seed, tag, threads);
  std::vector<double> jumps(n);
  for (std::size_t i = 0; i < n; ++i) jumps[i] = outcomes[i].jump;

  JumpLawReport rep;
  rep.n = n;
  const double a = params.alpha;
  rep.ks = ks_one_sample(jumps, [epsilon, a](double y) { return y <= epsilon ? 0.0 : 1.0 - std::pow(y / epsilon, -a); });
  rep.median = median(jumps);
  rep.median_target = epsilon * std::pow(2.0, 1.0 / a);
  rep.mean = sample_mean(jumps);
  rep.mean_target = epsilon * a / (a - 1.0);
  rep.min_jump = *std::min_element(jumps.begin(), jumps.end());
  return rep;
}

SideLengthCell summarize_side_lengths(const std::vector<AuxOutcome>& outcomes, const AuxParams& aux) {
  SideLengthCell c;
  c.epsilon = aux.epsilon;
  c.left_bound = aux.tube();
  const double b = aux.tube();
  const double lr = aux.floors.right;
  std::vector<double> left, right;
  for (const auto& o : outcomes) {
    if (!o.f_r) continue;
    ++c.successes;
    const double dl = o.implied_left - aux.floors.left;
    const bool ok = std::abs(dl) <= b && o.implied_right >= lr - b && o.implied_right <= lr + aux.epsilon + b;
    if (!ok) ++c.violations;
    left.push_back(std::abs(dl));
    right.push_back(std::abs(o.implied_right - lr));
  }
  c.underpowered = c.successes == 0;
  if (!left.empty()) {
    c.abs_left_dev = sample_mean(left);
    c.abs_right_dev = sample_mean(right);
  }
  return c;
}

SideLengthReport summarize_side_length_cells(std::vector<SideLengthCell> cells) {
  SideLengthReport rep;
  rep.cells = std::move(cells);
  std::vector<SideLengthCell> by_eps = rep.cells;
  std::sort(by_eps.begin(), by_eps.end(),
            [](const SideLengthCell& a, const SideLengthCell& b) { return a.epsilon > b.epsilon; });
  rep.left_dev_decreasing = !by_eps.empty();
  for (std::size_t k = 0; k < by_eps.size(); ++k) {
    rep.total_violations += by_eps[k].violations;
    if (by_eps[k].underpowered) rep.left_dev_decreasing = false;
    if (k > 0 && !(by_eps[k].abs_left_dev.mean < by_eps[k - 1].abs_left_dev.mean)) rep.left_dev_decreasing = false;
  }
  return rep;
}

SideLengthReport implied_side_lengths_convergence(const StableParams& params, const FloorPair& floors,
                                                  const std::vector<double>& eps_grid, double zeta,
                                                  std::size_t n, std::uint64_t seed, const std::string& tag,
                                                  unsigned threads) {
  std::vector<SideLengthCell> cells;
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    AuxParams aux;
    aux.epsilon = eps_grid[k];
    aux.zeta = zeta;
    aux.floors = floors;
    aux.r = floors.sum();
    aux.validate();
    const auto outcomes = run_aux_ensemble(params, aux, n, seed, tag + "/eps" + std::to_string(k), threads);
    cells.push_back(summarize_side_lengths(outcomes, aux));
  }
  return summarize_side_length_cells(std::move(cells));
}

ShiftedRateReport shifted_rate_check(const StableParams& params, const FloorPair& floors, double l_u, double r_u,
                                     const std::vector<double>& eps_grid, double zeta, std::size_t n,
                                     std::uint64_t seed, const std::string& tag, unsigned threads) {
  ShiftedRateReport rep;
  rep.r_shifted = floors.sum() + l_u + r_u;
  for (double eps : eps_grid)
    if (!(rep.r_shifted > std::pow(eps, 1.0 - zeta)))
      throw std::invalid_argument("shifted_rate_check: shifted length must exceed the tube width");
  AuxParams base;
  base.zeta = zeta;
  base.floors = floors;
  base.r = rep.r_shifted;
  rep.rate = verify_bubble_event_rate(params, base, eps_grid, n, seed, tag, threads);
  for (double eps : eps_grid)
    rep.exact_ratio.push_back(conditional_jump_factor(eps, rep.r_shifted, params.alpha) /
                              conditional_jump_factor(eps, floors.sum(), params.alpha));
  rep.asymptotic_ratio = std::pow(rep.r_shifted / floors.sum(), -(params.alpha + 1.0));
  return rep;
}

}  // namespace sle6
