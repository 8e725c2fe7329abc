#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sle6 {

/// Monte Carlo summary: mean, standard error and a 95% interval.
struct Estimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
};

/// Normal-approximation estimate: ci95 = mean +- 1.96 std_err. Throws on
/// a negative std_err.
Estimate make_estimate(double mean, double std_err, std::size_t n);

/// Sample mean with the usual sqrt(var / n) standard error.
Estimate sample_mean(std::span<const double> xs);

/// Proportion estimate. Uses the Clopper-Pearson interval when fewer than 30
/// successes were seen, the normal interval otherwise.
Estimate binomial_estimate(std::size_t successes, std::size_t n);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Exact two-sided binomial interval at the given confidence level.
Interval clopper_pearson(std::size_t successes, std::size_t n, double level = 0.95);

/// (sum w)^2 / sum w^2; zero when every weight is zero.
double effective_sample_size(std::span<const double> weights);

double median(std::vector<double> xs);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Survival function of the Kolmogorov distribution, Q(lambda).
double kolmogorov_survival(double lambda);

/// One-sample KS test against a continuous CDF.
KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Two-sample KS test.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic critical value of the KS statistic at level alpha for
/// effective sample size n_eff (n for one sample, n m / (n + m) for two).
double ks_critical_value(double alpha, double n_eff);

/// Upper tail of the chi-square law with one degree of freedom.
double chi_square_1dof_pvalue(double statistic);

/// Pearson correlation with the large-sample standard error (1 - r^2) / sqrt(n).
Estimate correlation(std::span<const double> x, std::span<const double> y);

struct PowerLawPoint {
  double x = 0.0;
  double y = 0.0;
  double y_stderr = 0.0;
};

struct PowerLawFit {
  Estimate slope;
  Estimate intercept;  ///< log of the prefactor
  double residual_ss = 0.0;
  std::size_t points = 0;
};

/// Weighted least squares of log y on log x. Weights come from the delta
/// method, var(log y) = (y_stderr / y)^2; when every y_stderr is zero the
/// fit is unweighted and the errors come from the residual scatter.
/// Throws std::invalid_argument for fewer than 3 points or non-positive
/// coordinates.
PowerLawFit fit_power_law(std::span<const PowerLawPoint> points);

}  // namespace sle6
