#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "koopcbf/box.hpp"

namespace koopcbf::falsifier {

// Closed real interval. Arithmetic uses round-to-nearest; no outward rounding.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr Interval(double v) : lo(v), hi(v) {}  // NOLINT(google-explicit-constructor)
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }

  Interval& operator+=(const Interval& o) {
    lo += o.lo;
    hi += o.hi;
    return *this;
  }
};

inline Interval operator+(Interval a, const Interval& b) { return a += b; }
inline Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }
inline Interval operator-(const Interval& a, const Interval& b) { return {a.lo - b.hi, a.hi - b.lo}; }

inline Interval operator*(double s, const Interval& a) {
  return s >= 0.0 ? Interval{s * a.lo, s * a.hi} : Interval{s * a.hi, s * a.lo};
}
inline Interval operator*(const Interval& a, double s) { return s * a; }

inline Interval operator*(const Interval& a, const Interval& b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

inline Interval sqr(const Interval& a) {
  const double l2 = a.lo * a.lo, h2 = a.hi * a.hi;
  if (a.lo >= 0.0) return {l2, h2};
  if (a.hi <= 0.0) return {h2, l2};
  return {0.0, std::max(l2, h2)};
}

inline Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

// a ∩ b; falls back to `a` when round-off makes the intersection empty.
inline Interval intersect(const Interval& a, const Interval& b) {
  const Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
  return r.lo <= r.hi ? r : a;
}

inline Interval tanh(const Interval& a) { return {std::tanh(a.lo), std::tanh(a.hi)}; }

// Derivative factors of tanh expressed through t = tanh(p):
//   tanh'(p) = 1 - t^2,  tanh''(p) = -2 t (1 - t^2).
inline double tanh_d1(double t) { return 1.0 - t * t; }
inline double tanh_d2(double t) { return -2.0 * t * (1.0 - t * t); }
inline Interval tanh_d1(const Interval& t) { return Interval(1.0) - sqr(t); }
Interval tanh_d2(const Interval& t);

inline double sqr(double v) { return v * v; }

using IntervalVector = std::vector<Interval>;

IntervalVector to_intervals(const Box& box);

}  // namespace koopcbf::falsifier
