#include "tiltbench/root_find.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

#include "tiltbench/error.hpp"

namespace tiltbench {

RootResult solve_bracketed(const std::function<double(double)>& f, double lo, double hi,
                           double x_tol, int max_iter) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw InternalInvariantError("solve_bracketed: endpoints do not bracket a root");
  }
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  auto tol = [x_tol](double a, double b) {
    return std::abs(b - a) <= x_tol * std::max(1.0, std::min(std::abs(a), std::abs(b)));
  };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  const double fa = f(a);
  const double fb = f(b);
  RootResult out;
  out.iterations = static_cast<int>(iters);
  if (std::abs(fa) <= std::abs(fb)) {
    out.root = a;
    out.residual = fa;
  } else {
    out.root = b;
    out.residual = fb;
  }
  return out;
}

RootResult solve_monotone(const std::function<double(double)>& f, bool increasing, double start,
                          double lower, bool* found, double x_tol, int max_expand) {
  *found = false;
  const double f0 = f(start);
  if (f0 == 0.0) {
    *found = true;
    return {start, 0.0, 0};
  }
  const bool go_right = (f0 < 0.0) == increasing;

  double prev = start;
  double fprev = f0;
  double step = 1.0;
  for (int k = 0; k < max_expand; ++k) {
    double next;
    if (go_right) {
      next = prev + step;
    } else {
      next = prev - step;
      if (next <= lower) next = 0.5 * (prev + lower);
    }
    if (!std::isfinite(next) || next == prev) break;
    const double fnext = f(next);
    if (!std::isfinite(fnext)) break;
    if ((fnext > 0.0) != (fprev > 0.0) || fnext == 0.0) {
      *found = true;
      return go_right ? solve_bracketed(f, prev, next, x_tol) : solve_bracketed(f, next, prev, x_tol);
    }
    prev = next;
    fprev = fnext;
    step *= 2.0;
  }
  return {prev, fprev, max_expand};
}

}  // namespace tiltbench
