#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "koopcbf/falsifier/falsifier.hpp"
#include "koopcbf/netcore/optimizer.hpp"
#include "koopcbf/train/losses.hpp"

namespace koopcbf::train {

struct NetShapes {
  std::vector<int> encoder_hidden{32, 32};
  std::vector<int> decoder_hidden{32, 32};
  std::vector<int> cbf_hidden{16, 16};
};

struct TrainOptions {
  LossWeights weights;
  netcore::OptimizerSettings optimizer;
  double lipschitz_target = 4.0;  // K_Phi
  double ridge = 1e-8;
  double class_margin = 0.05;
  double lie_margin = 0.05;       // training threshold is beta + lie_margin
  int max_epochs_per_round = 2000;  // 0 freezes the networks and the model
  int plateau_window = 50;
  double plateau_tol = 1e-4;
  int initial_safe_samples = 1000;
  int initial_unsafe_samples = 500;
  int interior_samples = 2000;    // fresh uniform draws over X each round
  int counterexample_neighbors = 20;  // jittered copies labelled with each counterexample
  double neighbor_radius = 0.1;       // half-width of the jitter box
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossRecord {
  int round = 0;
  int epoch = 0;
  double total = 0.0;
  double dyn = 0.0;
  double recons = 0.0;
  double barr = 0.0;
  int counterexamples = 0;
};

struct TrainState {
  koopman::LearnedSystem sys;
  plant::Dataset data;
  std::vector<RealVector> interior;  // current round's uniform draws
  netcore::OptimizerState encoder_opt;
  netcore::OptimizerState decoder_opt;
  netcore::OptimizerState cbf_opt;
  TrainOptions opts;
  int round = 0;
  int epoch = 0;
  std::vector<LossRecord> history;
};

// Seeded networks, spectrally normalized encoder, initial labelled safe and
// unsafe samples, and an EDMD model for the initial encoder.
TrainState make_train_state(plant::Dataset data, const falsifier::SafetySpec& spec,
                            const NetShapes& shapes, int lifted_dim, const TrainOptions& opts);

// Wraps existing networks (nothing is re-initialized).
TrainState make_train_state(koopman::LearnedSystem sys, plant::Dataset data, const TrainOptions& opts);

// Least-squares model for the current encoder.
void refit_model(TrainState& state);

BarrierLossOptions training_barrier_options(const TrainState& state, const falsifier::SafetySpec& spec);

struct LossGradients {
  LossRecord record;  // round/epoch left at zero
  netcore::ParamGrads encoder;
  netcore::ParamGrads decoder;
  netcore::ParamGrads cbf;
};

// Weighted loss and its parameter gradients with sys.model held fixed.
LossGradients loss_gradients(const koopman::LearnedSystem& sys, const plant::Dataset& data,
                             const std::vector<RealVector>& extra_interior,
                             const falsifier::SafetySpec& spec, const LossWeights& weights,
                             const BarrierLossOptions& barrier);

// One epoch: EDMD refit, one full-batch gradient step on the weighted loss
// (model held fixed), spectral normalization of the encoder. Appends the
// pre-step losses to the history and returns them.
LossRecord train_epoch(TrainState& state, const falsifier::SafetySpec& spec);

// Epochs until the loss plateaus or the per-round cap is hit; finishes with
// a refit so that the model matches the final encoder.
int train_round(TrainState& state, const falsifier::SafetySpec& spec);

enum class CegisStatus { Verified, MaxRoundsExceeded };

std::string to_string(CegisStatus s);

struct CegisReport {
  int rounds = 0;
  std::vector<int> counterexamples_per_round;
  std::vector<falsifier::FalsifierResult> falsifier_results;
  CegisStatus final_status = CegisStatus::MaxRoundsExceeded;
};

struct CegisOptions {
  int max_rounds = 10;
  falsifier::FalsifierOptions falsifier;
  // Called after every falsification with the round's result.
  std::function<void(const TrainState&, const falsifier::FalsifierResult&)> on_round;
};

CegisReport cegis(TrainState& state, const falsifier::SafetySpec& spec, const CegisOptions& opts);

void write_training_log_csv(std::ostream& out, const std::vector<LossRecord>& history);

}  // namespace koopcbf::train
