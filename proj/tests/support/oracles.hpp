#pragma once

// Test-only reference computations. Nothing here calls back into the code
// paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "koopcbf/linalg.hpp"
#include "koopcbf/netcore/network.hpp"

namespace oracle {

using koopcbf::RealMatrix;
using koopcbf::RealVector;

// Central difference of a scalar function along every coordinate of x.
inline RealVector central_gradient(const std::function<double(const RealVector&)>& f, RealVector x,
                                   double step = 1e-5) {
  RealVector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

inline RealMatrix central_jacobian(const std::function<RealVector(const RealVector&)>& f,
                                   RealVector x, double step = 1e-5) {
  const RealVector y0 = f(x);
  RealMatrix J(y0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const RealVector fp = f(x);
    x[i] = orig - step;
    const RealVector fm = f(x);
    x[i] = orig;
    J.col(i) = (fp - fm) / (2.0 * step);
  }
  return J;
}

// |a - b| / max(|a|, |b|, floor): relative error with an absolute floor so
// that entries that are zero up to round-off do not dominate.
inline double rel_err(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_rel_err(const RealMatrix& a, const RealMatrix& b, double floor = 1e-3) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) e = std::max(e, rel_err(a.data()[i], b.data()[i], floor));
  return e;
}

// Plain scalar re-implementation of the MLP forward pass.
inline RealVector reference_forward(const koopcbf::netcore::FeedforwardNet& net, const RealVector& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& W = net.layer(l).weight;
    const auto& b = net.layer(l).bias;
    std::vector<double> next(W.rows());
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double s = b[r];
      for (Eigen::Index c = 0; c < W.cols(); ++c) s += W(r, c) * a[c];
      next[r] = (l + 1 < net.num_layers()) ? std::tanh(s) : s;
    }
    a = std::move(next);
  }
  return Eigen::Map<RealVector>(a.data(), static_cast<Eigen::Index>(a.size()));
}

// Network with random weights AND biases (glorot leaves biases at zero).
inline koopcbf::netcore::FeedforwardNet random_net(const std::vector<int>& dims, std::mt19937_64& rng,
                                                   double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<koopcbf::netcore::DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    koopcbf::netcore::DenseLayer l{RealMatrix(dims[i + 1], dims[i]), RealVector(dims[i + 1])};
    for (Eigen::Index k = 0; k < l.weight.size(); ++k) l.weight.data()[k] = u(rng);
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias[k] = u(rng);
    layers.push_back(std::move(l));
  }
  return koopcbf::netcore::FeedforwardNet(std::move(layers));
}

inline RealVector random_vector(Eigen::Index n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline RealMatrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo = -1.0,
                                double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Single affine layer x -> W x + b.
inline koopcbf::netcore::FeedforwardNet affine_net(const RealMatrix& W, RealVector b = {}) {
  if (b.size() == 0) b = RealVector::Zero(W.rows());
  return koopcbf::netcore::FeedforwardNet({koopcbf::netcore::DenseLayer{W, b}});
}

}  // namespace oracle
