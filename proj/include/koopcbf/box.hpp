#pragma once

#include <random>
#include <string>

#include "koopcbf/linalg.hpp"

namespace koopcbf {

// Axis-aligned box [lo, hi] in R^d.
class Box {
 public:
  Box() = default;
  Box(RealVector lo, RealVector hi);

  int dim() const { return static_cast<int>(lo_.size()); }
  const RealVector& lo() const { return lo_; }
  const RealVector& hi() const { return hi_; }
  double lo(int i) const { return lo_[i]; }
  double hi(int i) const { return hi_[i]; }

  RealVector center() const { return 0.5 * (lo_ + hi_); }
  RealVector widths() const { return hi_ - lo_; }
  double max_width() const { return widths().maxCoeff(); }

  bool contains(const RealVector& x, double tol = 0.0) const;
  bool contains(const Box& other) const;

  // Uniform sample (each coordinate independently).
  RealVector sample(std::mt19937_64& rng) const;

  std::string to_string() const;

  friend bool operator==(const Box& a, const Box& b) { return a.lo_ == b.lo_ && a.hi_ == b.hi_; }

 private:
  RealVector lo_;
  RealVector hi_;
};

}  // namespace koopcbf
