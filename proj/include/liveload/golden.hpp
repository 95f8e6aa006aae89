#pragma once

#include <cmath>
#include <utility>

namespace liveload {

struct ScalarMin {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
};

// Golden-section search for a minimum of f on [a, b]. Returns the best point
// seen, so ties resolve toward the first evaluation.
template <class F>
ScalarMin golden_section_minimize(F&& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int evals = 2;
  ScalarMin best = fc <= fd ? ScalarMin{c, fc, 0} : ScalarMin{d, fd, 0};
  while (std::abs(b - a) > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      if (fc < best.fx) best = {c, fc, 0};
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      if (fd < best.fx) best = {d, fd, 0};
    }
    ++evals;
  }
  best.evaluations = evals;
  return best;
}

// Locates the switch of a monotone predicate between lo (false) and hi (true)
// by bisection, returning a point within tol of the switch.
template <class P>
double bisect_predicate(P&& pred, double lo, double hi, double tol) {
  while (std::abs(hi - lo) > tol) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace liveload
