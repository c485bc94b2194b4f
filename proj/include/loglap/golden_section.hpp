#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "loglap/errors.hpp"

namespace loglap {

struct GoldenSectionResult {
  double x = 0.0;
  double fx = 0.0;
  std::size_t iterations = 0;
  double final_width = 0.0;
};

// Golden-section search for the minimum of a unimodal function on [lo, hi].
// Stops once the bracket is narrower than abs_tol + rel_tol*|x|; throws
// BracketFailure if that does not happen within max_iters.
template <typename Fn>
GoldenSectionResult golden_section_minimize(Fn&& fn, double lo, double hi,
                                            double rel_tol = 1e-12,
                                            double abs_tol = 1e-14,
                                            std::size_t max_iters = 500) {
  if (hi < lo) std::swap(lo, hi);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c), fd = fn(d);

  std::size_t it = 0;
  for (; it < max_iters; ++it) {
    const double mid = 0.5 * (a + b);
    if (b - a <= abs_tol + rel_tol * std::abs(mid)) break;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  const double width = b - a;
  if (!(width <= abs_tol + rel_tol * std::abs(0.5 * (a + b)))) {
    throw BracketFailure("golden-section search did not shrink the bracket below tolerance");
  }
  if (fc <= fd) return {c, fc, it, width};
  return {d, fd, it, width};
}

}  // namespace loglap
