#pragma once

#include <vector>

#include "koopcbf/linalg.hpp"
#include "koopcbf/netcore/network.hpp"
#include "koopcbf/plant/dataset.hpp"

namespace koopcbf::koopman {

constexpr double kDefaultRidge = 1e-8;

// Column-aligned snapshot pairs (z_k, u_k) -> z_{k+1}.
struct SnapshotPairs {
  RealMatrix z;       // N x P
  RealMatrix u;       // m x P
  RealMatrix z_next;  // N x P

  Eigen::Index count() const { return z.cols(); }
};

// Pairs never straddle trajectory boundaries.
SnapshotPairs build_pairs(const plant::Dataset& data, const netcore::FeedforwardNet& encoder);

// Raw state pairs (encoder = identity).
SnapshotPairs build_state_pairs(const plant::Dataset& data);

// eta = [z; u_1 z; ...; u_m z], (N (m + 1)) x P.
RealMatrix lifted_regressors(const RealMatrix& z, const RealMatrix& u);

struct EdmdFit {
  RealMatrix Kd;
  std::vector<RealMatrix> D;

  // [K_d D_1 ... D_m]
  RealMatrix stacked() const;
};

// [K_d D] = Gamma eta^T (eta eta^T + ridge I)^{-1}. With ridge = 0 a
// singular Gram matrix raises RankDeficiencyError.
EdmdFit edmd_fit(const SnapshotPairs& pairs, double ridge = kDefaultRidge);

// ||Gamma - M eta||_F
double edmd_residual(const SnapshotPairs& pairs, const RealMatrix& stacked);

}  // namespace koopcbf::koopman
