#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "koopcbf/cli/checkpoint.hpp"
#include "koopcbf/cli/config.hpp"

namespace koopcbf::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitVerification = 3, kExitRuntime = 4 };

plant::Dataset generate_data(const ExperimentConfig& cfg);

struct TrainResult {
  Checkpoint checkpoint;
  train::CegisReport report;
  std::vector<train::LossRecord> history;
};

// CEGIS on the dataset followed by the beta estimate. Per-round progress
// lines go to `progress` when given; falsifier reports of every round are
// written as falsifier_round_<r>.json into `report_dir` when non-empty.
TrainResult train_experiment(const ExperimentConfig& cfg, const plant::Dataset& data,
                             std::ostream* progress = nullptr, const std::string& report_dir = {});

// Fresh falsifier run on the checkpoint's networks and safety spec.
falsifier::FalsifierResult verify_checkpoint(const Checkpoint& ckpt);

struct RolloutRecord {
  RealVector x0;
  safectrl::Trajectory traj;
  bool exited = false;  // closed loop left X; traj holds the partial run
};

// Seeded uniform draws from the config's initial region.
std::vector<RealVector> rollout_initial_states(const ExperimentConfig& cfg, int n);

// Closed-loop rollouts on the true plant, one worker per hardware thread.
std::vector<RolloutRecord> run_rollouts(const Checkpoint& ckpt, int n);

// traj_000.csv, traj_001.csv, ... in `dir` (created if missing).
void write_rollouts(const std::string& dir, const std::vector<RolloutRecord>& rollouts);

// Deterministic JSON report: no wall-clock content.
std::string summary_json(const Checkpoint& ckpt, const std::optional<falsifier::FalsifierResult>& verification,
                         const std::vector<RolloutRecord>& rollouts);

struct PlotScene {
  double x_lo = -5, x_hi = 5, y_lo = -5, y_hi = 5;
  RealVector obstacle_center = RealVector::Zero(2);
  double obstacle_radius = 1.0;
  double safe_radius = 0.0;  // 0 hides the ring
  std::optional<RealVector> goal;
};

PlotScene scene_from_config(const ExperimentConfig& cfg);

// Polylines of the (x, y) paths with obstacle and goal overlays.
std::string render_svg(const std::vector<std::vector<RealVector>>& paths, const PlotScene& scene);

// Reads every traj_*.csv in `dir` (sorted by name) and renders it. The
// scene comes from summary.json in the same directory when present.
std::string plot_directory(const std::string& dir);

struct ExperimentResult {
  int exit_code = kExitOk;
  Checkpoint checkpoint;
  falsifier::FalsifierResult verification;
  std::vector<RolloutRecord> rollouts;
  std::string summary;
};

// gen-data, train, verify, simulate and plot into `out_dir`. Exceptions
// propagate and leave the artifacts written so far; the exit code is
// kExitVerification when CEGIS or the final check did not verify.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                std::ostream* progress = nullptr);

}  // namespace koopcbf::cli
