#include "koopcbf/netcore/spectral.hpp"

#include <cmath>
#include <random>

#include "koopcbf/errors.hpp"

namespace koopcbf::netcore {

namespace {

RealVector start_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  RealVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v.normalized();
}

}  // namespace

double spectral_norm(const RealMatrix& W, int iters, std::uint64_t seed) {
  if (iters < 1) throw ConfigError("spectral_norm: iters must be >= 1");
  if (W.size() == 0 || W.isZero(0.0)) return 0.0;
  RealVector v = start_vector(W.cols(), seed);
  double sigma = (W * v).norm();
  for (int k = 0; k < iters; ++k) {
    RealVector next = W.transpose() * (W * v);
    const double n = next.norm();
    if (n == 0.0) break;  // start vector in the null space
    v = next / n;
    sigma = (W * v).norm();
  }
  return sigma;
}

double spectral_norm_converged(const RealMatrix& W, int min_iters, int max_iters,
                               std::uint64_t seed) {
  if (W.size() == 0 || W.isZero(0.0)) return 0.0;
  RealVector v = start_vector(W.cols(), seed);
  double sigma = (W * v).norm();
  for (int k = 0; k < max_iters; ++k) {
    RealVector next = W.transpose() * (W * v);
    const double n = next.norm();
    if (n == 0.0) break;
    v = next / n;
    const double updated = (W * v).norm();
    const bool settled = std::abs(updated - sigma) <= 1e-15 * updated;
    sigma = updated;
    if (k + 1 >= min_iters && settled) break;
  }
  return sigma;
}

void spectral_normalize(FeedforwardNet& net, double target) {
  if (!(target > 0.0) || !std::isfinite(target)) {
    throw ConfigError("spectral_normalize: target Lipschitz constant must be positive");
  }
  const double per_layer = std::pow(target, 1.0 / static_cast<double>(net.num_layers()));
  std::vector<double> sigmas;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const double s = spectral_norm_converged(net.layer(i).weight);
    if (s == 0.0) {
      throw NumericError("spectral_normalize: layer " + std::to_string(i) +
                         " has a zero weight matrix, cannot rescale");
    }
    sigmas.push_back(s);
  }
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const double scale = per_layer / sigmas[i];
    // Already normalized up to power-iteration noise: keep the layer bit-stable.
    if (std::abs(scale - 1.0) <= 1e-12) continue;
    net.layer(i).weight *= scale;
  }
}

double lipschitz_upper_bound(const FeedforwardNet& net) {
  double p = 1.0;
  for (const auto& l : net.layers()) p *= spectral_norm_converged(l.weight);
  return p;
}

}  // namespace koopcbf::netcore
