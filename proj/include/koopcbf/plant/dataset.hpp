#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "koopcbf/box.hpp"
#include "koopcbf/plant/plant.hpp"

namespace koopcbf::plant {

struct Snapshot {
  RealVector x;
  RealVector u;
  int traj = 0;
  int step = 0;
};

struct LabeledInput {
  RealVector x;
  RealVector u;
};

// State/input snapshots grouped into trajectories, plus the labelled
// points that counterexample-guided training appends.
struct Dataset {
  int state_dim = 0;
  int input_dim = 0;
  double dt = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<RealVector> labeled_safe;
  std::vector<RealVector> labeled_unsafe;
  std::vector<LabeledInput> labeled_interior;

  std::size_t size() const { return snapshots.size(); }

  // Index pairs (k, k + 1) of consecutive snapshots within one trajectory.
  std::vector<std::pair<std::size_t, std::size_t>> transition_pairs() const;

  // Throws ParseError if step indices are not consecutive per trajectory or
  // dimensions are inconsistent.
  void validate() const;
};

struct DatasetOptions {
  int n_traj = 1;
  int steps_per_traj = 1;
  double dt = 0.1;
  Box init_region;   // must lie inside the plant's state box
  std::uint64_t seed = 0;
};

// RK4 rollouts from uniform initial states with i.i.d. uniform inputs in
// the plant's input box. A trajectory stops at its last state inside X.
Dataset generate_dataset(const PlantModel& plant, const DatasetOptions& opts);

// CSV with header traj,step,x0..x{n-1},u0..u{m-1}; reals at 17 significant digits.
void write_dataset_csv(std::ostream& out, const Dataset& data);
void save_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(std::istream& in, double dt);
Dataset load_dataset_csv(const std::string& path, double dt);

}  // namespace koopcbf::plant
