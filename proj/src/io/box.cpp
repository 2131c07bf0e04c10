#include "koopcbf/box.hpp"

#include <sstream>

#include "koopcbf/errors.hpp"

namespace koopcbf {

Box::Box(RealVector lo, RealVector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) throw ShapeError("box bounds have different dimensions");
  if (lo_.size() == 0) throw ShapeError("box must have at least one dimension");
  for (Eigen::Index i = 0; i < lo_.size(); ++i) {
    if (!(lo_[i] <= hi_[i])) throw ConfigError("box has lo > hi in dimension " + std::to_string(i));
  }
}

bool Box::contains(const RealVector& x, double tol) const {
  if (x.size() != lo_.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo_[i] - tol && x[i] <= hi_[i] + tol)) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  return other.dim() == dim() && (other.lo_.array() >= lo_.array()).all() &&
         (other.hi_.array() <= hi_.array()).all();
}

RealVector Box::sample(std::mt19937_64& rng) const {
  RealVector x(lo_.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::uniform_real_distribution<double> d(lo_[i], hi_[i]);
    x[i] = lo_[i] == hi_[i] ? lo_[i] : d(rng);
  }
  return x;
}

std::string Box::to_string() const {
  std::ostringstream ss;
  for (Eigen::Index i = 0; i < lo_.size(); ++i) {
    if (i) ss << " x ";
    ss << '[' << lo_[i] << ", " << hi_[i] << ']';
  }
  return ss.str();
}

}  // namespace koopcbf
