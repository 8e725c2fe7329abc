#pragma once

#include <vector>

namespace sle6 {

/// Law at step at_step of a nearest-neighbour walk on {0, 1, ...} started
/// at 0, stepping to 1 first and conditioned to return to 0 for the first
/// time at step `steps`. Away from 0 the walk steps up with probability
/// (s(k) - s(k-1)) / (s(k+1) - s(k-1)) for s(k) = k^(2 - dim), so it has
/// the same scale function as a Bessel process of dimension dim.
/// Returns P[walk = k] for k = 0..K.
std::vector<double> conditioned_walk_marginal(double dim, int steps, int at_step);

/// CDF at x of (walk + U(-1, 1)) * sqrt(duration / steps), smoothing the
/// lattice of spacing 2.
double jittered_walk_cdf(const std::vector<double>& probs, int steps, double duration, double x);

/// Covariance, on one boundary line of R x (0, pi), of the free-boundary
/// field with its vertical-segment averages removed, at horizontal distance
/// dx > 0. Derived through the map z -> e^z to the half-plane, where the
/// free-boundary covariance between boundary points is -2 log|a - b|.
double strip_line_covariance(double dx);

}  // namespace sle6
