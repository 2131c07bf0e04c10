#pragma once

// Hand-built instance with an analytically valid barrier certificate.
//
// Encoder: z = (x, y, theta, 1). Model: position frozen, theta_dot = c * z4.
// Barrier: h = c0 - sum_k bump(d_k . p) + (g / eps) tanh(eps theta), where
// bump(t) = tanh(w (t + s)) - tanh(w (t - s)) is ~2 inside the slab |t| < s
// and ~0 outside. With four slab directions the region where all bumps are
// ~2 is an octagon of inradius s, so h ~ -1 inside it and ~ +1 outside.
//
// Signs: for |p| <= 1 every |d_k . p| <= 1 < s, so h <= c0 - 4 * 2 tanh(w (s - 1)) + g pi < 0.
// For |p| >= rho0, some |d_k . p| >= rho0 cos(pi / 8), so one bump is ~0 and h > 0.
// Lie term: c * dh/dtheta >= c g (1 - tanh^2(eps pi)) dominates lambda |h| + beta.

#include <cmath>
#include <numbers>

#include "koopcbf/falsifier/safety_spec.hpp"
#include "koopcbf/koopman/learned_system.hpp"

namespace planted {

using koopcbf::RealMatrix;
using koopcbf::RealVector;

struct Params {
  int directions = 4;
  double w = 20.0;     // bump steepness
  double s = 1.2;      // slab half-width
  double g = 0.01;     // heading gain
  double eps = 0.1;    // heading saturation
  double c = 200.0;    // theta drift in the model
  double bias_shift = 0.0;
};

inline koopcbf::koopman::LearnedSystem system(const Params& p = {}) {
  using koopcbf::netcore::DenseLayer;
  using koopcbf::netcore::FeedforwardNet;
  RealMatrix We = RealMatrix::Zero(4, 3);
  We.topRows(3).setIdentity();
  RealVector be = RealVector::Zero(4);
  be[3] = 1.0;
  FeedforwardNet encoder({DenseLayer{We, be}});

  RealMatrix Wd = RealMatrix::Zero(3, 4);
  Wd.leftCols(3).setIdentity();
  FeedforwardNet decoder({DenseLayer{Wd, RealVector::Zero(3)}});

  const int hidden = 2 * p.directions + 1;
  RealMatrix W1 = RealMatrix::Zero(hidden, 4);
  RealVector b1 = RealVector::Zero(hidden);
  RealMatrix W2 = RealMatrix::Zero(1, hidden);
  for (int k = 0; k < p.directions; ++k) {
    const double a = std::numbers::pi * k / p.directions;
    for (int sgn = 0; sgn < 2; ++sgn) {
      const int r = 2 * k + sgn;
      W1(r, 0) = p.w * std::cos(a);
      W1(r, 1) = p.w * std::sin(a);
      b1[r] = (sgn == 0 ? 1.0 : -1.0) * p.w * p.s;
      W2(0, r) = sgn == 0 ? -1.0 : 1.0;
    }
  }
  W1(hidden - 1, 2) = p.eps;
  W2(0, hidden - 1) = p.g / p.eps;
  RealVector b2(1);
  b2[0] = 2.0 * p.directions - 1.0 + p.bias_shift;
  FeedforwardNet cbf({DenseLayer{W1, b1}, DenseLayer{W2, b2}});

  RealMatrix K = RealMatrix::Zero(4, 4);
  K(2, 3) = p.c;
  auto model = koopcbf::koopman::BilinearModel::from_continuous(K, {RealMatrix::Zero(4, 4)}, 0.1);
  return {encoder, decoder, cbf, model};
}

inline koopcbf::falsifier::SafetySpec spec(double delta_box = 0.05) {
  koopcbf::falsifier::SafetySpec s;
  RealVector lo(3), hi(3);
  lo << -5, -5, -std::numbers::pi;
  hi << 5, 5, std::numbers::pi;
  s.state_box = koopcbf::Box(lo, hi);
  s.obstacle_radius = 1.0;
  s.safe_margin = 1.0;
  RealVector ulo(1), uhi(1);
  ulo << -1;
  uhi << 1;
  s.candidate_inputs = koopcbf::falsifier::grid_inputs(koopcbf::Box(ulo, uhi), 10);
  s.lambda = 1.0;
  s.beta = 0.01;
  s.delta_sat = 1e-3;
  s.delta_box = delta_box;
  return s;
}

}  // namespace planted
