#pragma once

#include <cmath>

namespace tsm {

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
};

// Golden-section search for the maximum of a unimodal function on [lo, hi].
// Endpoints are evaluated as well, so boundary maxima come back exactly.
template <typename F>
GoldenResult golden_section_max(F&& f, double lo, double hi, double tol = 1e-12,
                                int max_iter = 256) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  GoldenResult best{mid, f(mid)};
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo > best.value) best = {lo, flo};
  if (fhi > best.value) best = {hi, fhi};
  return best;
}

}  // namespace tsm
