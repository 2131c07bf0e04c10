#include "koopcbf/falsifier/interval.hpp"

#include <limits>

namespace koopcbf::falsifier {

Interval tanh_d2(const Interval& t) {
  // g(t) = 2t^3 - 2t has critical points at t = ±1/sqrt(3).
  const double c = 1.0 / std::sqrt(3.0);
  double lo = std::min(tanh_d2(t.lo), tanh_d2(t.hi));
  double hi = std::max(tanh_d2(t.lo), tanh_d2(t.hi));
  for (double s : {-c, c}) {
    if (t.contains(s)) {
      lo = std::min(lo, tanh_d2(s));
      hi = std::max(hi, tanh_d2(s));
    }
  }
  // Evaluations near the extrema can round a few ulps past the values at +-c.
  const double pad = 8.0 * std::numeric_limits<double>::epsilon();
  return {lo - pad, hi + pad};
}

IntervalVector to_intervals(const Box& box) {
  IntervalVector v(static_cast<std::size_t>(box.dim()));
  for (int i = 0; i < box.dim(); ++i) v[static_cast<std::size_t>(i)] = {box.lo(i), box.hi(i)};
  return v;
}

}  // namespace koopcbf::falsifier
