#pragma once

#include <vector>

#include "koopcbf/falsifier/safety_spec.hpp"
#include "koopcbf/koopman/learned_system.hpp"
#include "koopcbf/plant/dataset.hpp"

namespace koopcbf::train {

struct LossWeights {
  double dyn = 2.0;
  double recons = 0.05;
  double barr = 1.0;

  // Throws ConfigError on negative or all-zero weights.
  void validate() const;
};

// Hinge offsets of the barrier loss. With both at zero the loss is the
// plain sign/constraint violation.
struct BarrierLossOptions {
  double class_margin = 0.0;    // h >= m on safe points, h <= -m on unsafe points
  double lie_threshold = 0.0;   // max_u (grad_z h . psi + lambda h) >= threshold
};

// sum over within-trajectory pairs of ||Phi(x+) - K_d Phi(x) - sum_j u_j D_j Phi(x)||^2
double loss_dyn(const koopman::LearnedSystem& sys, const plant::Dataset& data);

// sum_k ||x_k - Phi^-1(Phi(x_k))||^2
double loss_recons(const koopman::LearnedSystem& sys, const plant::Dataset& data);

// Mean hinge over labelled safe points + mean hinge over labelled unsafe
// points + mean over interior states of the best-input Lie hinge. Interior
// states are the dataset snapshots, the labelled interior points and
// `extra_interior`. Empty sets contribute zero.
struct BarrierLoss {
  double safe = 0.0;
  double unsafe = 0.0;
  double lie = 0.0;
  double total() const { return safe + unsafe + lie; }
};

BarrierLoss loss_barr(const koopman::LearnedSystem& sys, const plant::Dataset& data,
                      const std::vector<RealVector>& extra_interior,
                      const falsifier::SafetySpec& spec, const BarrierLossOptions& opts);

// Distinct interior states used by the Lie term, in a fixed order.
std::vector<RealVector> interior_states(const plant::Dataset& data,
                                        const std::vector<RealVector>& extra_interior);

}  // namespace koopcbf::train
