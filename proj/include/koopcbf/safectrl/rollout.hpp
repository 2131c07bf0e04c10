#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "koopcbf/errors.hpp"
#include "koopcbf/falsifier/safety_spec.hpp"
#include "koopcbf/koopman/learned_system.hpp"
#include "koopcbf/plant/plant.hpp"

namespace koopcbf::safectrl {

enum class QpStatus { Inactive, Active, Infeasible };

std::string to_string(QpStatus s);

struct RolloutOptions {
  RealVector goal = RealVector::Zero(2);
  double goal_tolerance = 0.1;
  int max_steps = 5000;
  double dt = 0.02;
  double gain = 2.0;
};

struct Trajectory {
  std::vector<RealVector> states;  // states.size() == inputs.size() + 1
  std::vector<RealVector> inputs;
  std::vector<double> h;           // per state
  std::vector<double> margins;     // a . u + b of the applied input
  std::vector<QpStatus> status;
  double dt = 0.0;
  bool reached_goal = false;

  int steps() const { return static_cast<int>(inputs.size()); }
  int infeasible_steps() const;
  // min over accepted (feasible) steps of the constraint margin; +inf if none.
  double min_accepted_margin() const;
  double min_center_distance(const RealVector& center) const;
};

// Thrown when the closed loop leaves X; carries the partial trajectory.
class RolloutExitError : public DomainExitError {
 public:
  RolloutExitError(const std::string& what, Trajectory partial)
      : DomainExitError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

// Closed loop of the CBF-QP filter on the true plant.
Trajectory safe_rollout(const plant::PlantModel& plant, const koopman::LearnedSystem& sys,
                        const falsifier::SafetySpec& spec, const RealVector& x_init,
                        const RolloutOptions& opts);

// CSV: step,t,x,y,theta,u,h,margin,qp_status. The final state row has empty
// u, margin and status cells.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void save_trajectory_csv(const std::string& path, const Trajectory& traj);

// Reads only the positional columns back (x, y, theta per row).
std::vector<RealVector> read_trajectory_states(std::istream& in);

}  // namespace koopcbf::safectrl
