#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dersim/errors.hpp"

namespace dersim {

/// Monte Carlo mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

namespace detail {

// Neumaier compensated accumulator; keeps block sums independent of how the
// blocks were scheduled.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) noexcept {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double value() const noexcept { return sum + comp; }
};

}  // namespace detail

/// Sample mean of `value(k)` for k in [0, draws). Reduction order is fixed, so
/// results are bit-reproducible for a fixed sample function.
template <class Fn>
Estimate mc_estimate(std::size_t draws, Fn&& value) {
  if (draws == 0) {
    return {};
  }
  detail::CompensatedSum s, s2;
  for (std::size_t k = 0; k < draws; ++k) {
    const double v = value(k);
    s.add(v);
    s2.add(v * v);
  }
  const double n = static_cast<double>(draws);
  const double mean = s.value() / n;
  double var = 0.0;
  if (draws > 1) {
    var = std::max(0.0, (s2.value() - n * mean * mean) / (n - 1.0));
  }
  return {mean, std::sqrt(var / n)};
}

struct BisectionResult {
  double x = 0.0;
  int iterations = 0;
};

/// Largest x in [lo, hi] with g(x) >= 0 for nonincreasing g, located to
/// within `tol`. Returns the left end of the final bracket, so g(x) >= 0 holds
/// at the returned point whenever g(lo) >= 0.
template <class Fn>
BisectionResult bisect_last_nonnegative(Fn&& g, double lo, double hi, double tol, int max_iter) {
  if (g(lo) < 0.0) {
    return {lo, 0};
  }
  if (g(hi) >= 0.0) {
    return {hi, 0};
  }
  int it = 0;
  while (hi - lo > tol) {
    if (it == max_iter) {
      throw SolverError("bisection did not reach tolerance", {lo, hi});
    }
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      break;
    }
    if (g(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++it;
  }
  return {lo, it};
}

struct ScalarMaximum {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

/// Golden-section search for the maximum of a unimodal f on [a, b].
template <class Fn>
ScalarMaximum golden_section_maximize(Fn&& f, double a, double b, double tol, int max_iter = 500) {
  const double c = 0.5 * (std::sqrt(5.0) - 1.0);
  double u = b - c * (b - a);
  double v = a + c * (b - a);
  double fu = f(u);
  double fv = f(v);
  int it = 0;
  while (b - a > tol && it < max_iter) {
    if (fu < fv) {
      a = u;
      u = v;
      fu = fv;
      v = a + c * (b - a);
      fv = f(v);
    } else {
      b = v;
      v = u;
      fv = fu;
      u = b - c * (b - a);
      fu = f(u);
    }
    ++it;
  }
  if (b - a > tol) {
    throw SolverError("golden-section search did not reach tolerance", {a, b});
  }
  const double x = 0.5 * (a + b);
  return {x, f(x), it};
}

}  // namespace dersim
