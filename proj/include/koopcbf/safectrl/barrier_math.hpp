#pragma once

#include <cstdint>

#include "koopcbf/box.hpp"
#include "koopcbf/koopman/learned_system.hpp"
#include "koopcbf/plant/dataset.hpp"

namespace koopcbf::safectrl {

// alpha(y) = lambda y. Throws ConfigError unless lambda > 0.
double alpha(double y, double lambda);

struct BetaInputs {
  double K_phi = 0.0;
  double K_F = 0.0;
  double K_psi = 0.0;
  double delta_fill = 0.0;
  double tau = 0.0;
  double mu = 0.0;
  double M = 0.0;
};

constexpr double kBetaHeadroom = 0.01;

// M (K_phi K_F delta + 2 K_phi K_F tau + mu + K_psi delta)(1 + headroom).
double compute_beta(const BetaInputs& in);

struct BetaEstimateOptions {
  double K_phi = 1.0;  // spectral-normalization target of the encoder
  double K_F = 1.0;    // plant Lipschitz metadata
  Box state_box;
  Box input_box;
  int sample_count = 1000;
  std::uint64_t seed = 0;
};

// Sample-based estimates of the constants in the beta bound. mu uses the
// finite-difference surrogate (z_{k+1} - z_k) / dt in place of grad Phi . F.
BetaInputs estimate_beta_inputs(const koopman::LearnedSystem& sys, const plant::Dataset& data,
                                const BetaEstimateOptions& opts);

}  // namespace koopcbf::safectrl
