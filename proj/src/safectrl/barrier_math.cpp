#include "koopcbf/safectrl/barrier_math.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "koopcbf/errors.hpp"
#include "koopcbf/koopman/edmd.hpp"
#include "koopcbf/netcore/spectral.hpp"

namespace koopcbf::safectrl {

double alpha(double y, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("alpha: lambda must be positive");
  return lambda * y;
}

double compute_beta(const BetaInputs& in) {
  const double terms = in.K_phi * in.K_F * in.delta_fill + 2.0 * in.K_phi * in.K_F * in.tau + in.mu +
                       in.K_psi * in.delta_fill;
  return in.M * terms * (1.0 + kBetaHeadroom);
}

BetaInputs estimate_beta_inputs(const koopman::LearnedSystem& sys, const plant::Dataset& data,
                                const BetaEstimateOptions& opts) {
  if (data.size() == 0) throw StateError("estimate_beta_inputs: dataset is empty");
  if (opts.sample_count < 1) throw ConfigError("estimate_beta_inputs: sample_count must be >= 1");
  sys.validate();
  const auto& model = sys.model;
  BetaInputs b;
  b.K_phi = opts.K_phi;
  b.K_F = opts.K_F;
  b.M = netcore::lipschitz_upper_bound(sys.cbf_net);

  const int n = data.state_dim;
  const int m = data.input_dim;
  RealMatrix pts(n + m, static_cast<Eigen::Index>(data.size()));
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    pts.col(c).head(n) = data.snapshots[k].x;
    pts.col(c).tail(m) = data.snapshots[k].u;
    b.tau = std::max(b.tau, pts.col(c).norm());
  }

  const koopman::SnapshotPairs pairs = koopman::build_pairs(data, sys.encoder);
  for (Eigen::Index c = 0; c < pairs.count(); ++c) {
    const RealVector fd = (pairs.z_next.col(c) - pairs.z.col(c)) / data.dt;
    const RealVector psi = koopman::psi_continuous(model, pairs.z.col(c), pairs.u.col(c));
    b.mu = std::max(b.mu, (fd - psi).norm());
  }

  std::mt19937_64 rng(opts.seed);
  double z_max = 0.0;
  for (int s = 0; s < opts.sample_count; ++s) {
    const RealVector x = opts.state_box.sample(rng);
    const RealVector u = opts.input_box.sample(rng);
    RealVector q(n + m);
    q << x, u;
    const double d2 = (pts.colwise() - q).colwise().squaredNorm().minCoeff();
    b.delta_fill = std::max(b.delta_fill, std::sqrt(d2));
    z_max = std::max(z_max, sys.encoder.forward(x).norm());
  }

  double c_sum = 0.0;
  double c_sq = 0.0;
  for (int i = 0; i < model.input_dim(); ++i) {
    const double ci = netcore::spectral_norm_converged(model.C(i));
    const double ui = std::max(std::abs(opts.input_box.lo(i)), std::abs(opts.input_box.hi(i)));
    c_sum += ui * ci;
    c_sq += ci * ci;
  }
  b.K_psi = (netcore::spectral_norm_converged(model.K()) + c_sum) * b.K_phi + z_max * std::sqrt(c_sq);
  return b;
}

}  // namespace koopcbf::safectrl
