#pragma once

#include <functional>

namespace tiltbench {

struct RootResult {
  double root = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Bracketed root of a continuous function with f(lo), f(hi) of opposite
/// sign (or one of them zero). Stops when the bracket is narrower than
/// `x_tol * max(1, |x|)`.
RootResult solve_bracketed(const std::function<double(double)>& f, double lo, double hi,
                           double x_tol = 1e-12, int max_iter = 500);

/// Root of a monotone function on (lower, +inf) starting from `start`:
/// steps of doubling size are taken toward the sign change, and a step that
/// would cross `lower` is replaced by halving the gap to it. `lower` may be
/// -inf. Sets `*found` to false if no sign change turns up after
/// `max_expand` steps.
RootResult solve_monotone(const std::function<double(double)>& f, bool increasing, double start,
                          double lower, bool* found, double x_tol = 1e-12,
                          int max_expand = 2000);

}  // namespace tiltbench
