#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "koopcbf/box.hpp"
#include "koopcbf/falsifier/falsifier.hpp"
#include "koopcbf/plant/dataset.hpp"
#include "koopcbf/safectrl/rollout.hpp"
#include "koopcbf/train/trainer.hpp"

namespace koopcbf::cli {

enum class ThetaPreset { Wide, Narrow };

std::string to_string(ThetaPreset p);

// Every experiment parameter. Defaults reproduce the diff-drive scenario.
struct ExperimentConfig {
  std::uint64_t seed = 1;

  // plant
  double wheel_radius = 0.1;
  double wheel_separation = 0.1;
  double lipschitz = 0.0;  // K_F; 0 derives it from the field
  double x_lo = -5.0, x_hi = 5.0;
  double y_lo = -5.0, y_hi = 5.0;
  ThetaPreset theta_preset = ThetaPreset::Wide;
  double u_lo = -1.0, u_hi = 1.0;

  // data
  int data_trajectories = 200;
  int data_steps = 50;
  double data_dt = 0.1;

  // model and networks
  int lifted_dim = 5;
  int candidate_inputs = 10;
  std::vector<int> encoder_hidden{32, 32};
  std::vector<int> decoder_hidden{32, 32};
  std::vector<int> cbf_hidden{16, 16};

  // training
  double learning_rate = 1e-3;
  double w_dyn = 2.0, w_recons = 0.05, w_barr = 1.0;
  double lipschitz_target = 4.0;
  double ridge = 1e-8;
  double class_margin = 0.05;
  double lie_margin = 0.05;
  int max_epochs = 2000;
  int plateau_window = 50;
  double plateau_tol = 1e-4;
  int safe_samples = 1000;
  int unsafe_samples = 500;
  int interior_samples = 2000;
  int max_rounds = 10;

  // barrier
  double lambda = 0.05;
  double beta = 0.01;
  double obstacle_x = 0.0, obstacle_y = 0.0;
  double obstacle_radius = 1.0;
  double safe_margin = 1.0;

  // falsifier
  double delta_box = 0.05;
  double delta_sat = 1e-3;
  std::uint64_t max_boxes = 10'000'000;
  int max_counterexamples = 20;

  // beta estimate
  int beta_samples = 1000;

  // closed loop
  double control_dt = 0.02;
  double control_gain = 2.0;
  int control_max_steps = 5000;
  double goal_x = 2.5, goal_y = 2.5;
  double goal_tolerance = 0.1;
  double init_x_lo = -3.5, init_x_hi = -1.5;
  double init_y_lo = -3.5, init_y_hi = -1.5;
  double init_theta_lo = 0.0, init_theta_hi = 1.5707963267948966;
  int rollouts = 50;

  // Throws ConfigError naming the offending key.
  void validate() const;

  Box state_box() const;
  Box input_box() const;
  Box init_box() const;
  plant::PlantModel plant() const;
  plant::DatasetOptions dataset_options() const;
  train::NetShapes net_shapes() const;
  train::TrainOptions train_options() const;
  falsifier::SafetySpec safety_spec() const;
  falsifier::FalsifierOptions falsifier_options() const;
  safectrl::RolloutOptions rollout_options() const;
};

// `key = value` lines; '#' starts a comment; list values are
// whitespace-separated. Unknown or repeated keys, malformed lines and
// out-of-range values raise ConfigError with the source name and line.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

// Canonical text listing every key; parse_config(write_config(c)) == c.
std::string write_config(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace koopcbf::cli
