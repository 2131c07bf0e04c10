#include "koopcbf/safectrl/rollout.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "koopcbf/io/text_format.hpp"
#include "koopcbf/safectrl/cbf_qp.hpp"

namespace koopcbf::safectrl {

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Inactive: return "inactive";
    case QpStatus::Active: return "active";
    case QpStatus::Infeasible: return "infeasible";
  }
  return "?";
}

int Trajectory::infeasible_steps() const {
  int n = 0;
  for (auto s : status) n += s == QpStatus::Infeasible;
  return n;
}

double Trajectory::min_accepted_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < margins.size(); ++k) {
    if (status[k] != QpStatus::Infeasible) m = std::min(m, margins[k]);
  }
  return m;
}

double Trajectory::min_center_distance(const RealVector& center) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& x : states) d = std::min(d, std::hypot(x[0] - center[0], x[1] - center[1]));
  return d;
}

Trajectory safe_rollout(const plant::PlantModel& plant, const koopman::LearnedSystem& sys,
                        const falsifier::SafetySpec& spec, const RealVector& x_init,
                        const RolloutOptions& opts) {
  sys.validate();
  if (!(opts.dt > 0.0) || opts.max_steps < 0 || !(opts.goal_tolerance > 0.0)) {
    throw ConfigError("safe_rollout: invalid options");
  }
  if (!plant.state_box().contains(x_init)) throw DomainExitError("safe_rollout: initial state outside X");
  Trajectory tr;
  tr.dt = opts.dt;
  RealVector x = x_init;
  auto at_goal = [&](const RealVector& s) {
    return std::hypot(s[0] - opts.goal[0], s[1] - opts.goal[1]) < opts.goal_tolerance;
  };
  tr.states.push_back(x);
  tr.h.push_back(koopman::barrier_value(sys, x));
  for (int k = 0; k < opts.max_steps && !at_goal(x); ++k) {
    const koopman::BarrierPoint p = koopman::barrier_point(sys, x, spec.lambda);
    const QpProblem qp = make_qp(p, nominal_controller(x, opts.goal, opts.gain, plant.input_box()),
                                 plant.input_box());
    RealVector u;
    QpStatus st;
    try {
      u = cbf_qp(qp);
      st = (u - qp.u_nom).norm() == 0.0 ? QpStatus::Inactive : QpStatus::Active;
    } catch (const InfeasibleError&) {
      u = constraint_maximizer(qp);
      st = QpStatus::Infeasible;
    }
    tr.inputs.push_back(u);
    tr.margins.push_back(constraint_value(qp, u));
    tr.status.push_back(st);
    x = plant::rk4_step(plant, x, u, opts.dt);
    if (!plant.state_box().contains(x)) {
      tr.states.push_back(x);
      tr.h.push_back(std::numeric_limits<double>::quiet_NaN());
      throw RolloutExitError("safe_rollout: state left X at step " + std::to_string(k + 1), std::move(tr));
    }
    tr.states.push_back(x);
    tr.h.push_back(koopman::barrier_value(sys, x));
  }
  tr.reached_goal = at_goal(x);
  return tr;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "step,t,x,y,theta,u,h,margin,qp_status\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& s = traj.states[k];
    out << k << ',' << io::format_real(static_cast<double>(k) * traj.dt) << ',' << io::format_real(s[0])
        << ',' << io::format_real(s[1]) << ',' << io::format_real(s[2]) << ',';
    if (k < traj.inputs.size()) out << io::format_real(traj.inputs[k][0]);
    out << ',' << (std::isfinite(traj.h[k]) ? io::format_real(traj.h[k]) : std::string()) << ',';
    if (k < traj.inputs.size()) out << io::format_real(traj.margins[k]) << ',' << to_string(traj.status[k]);
    else out << ',';
    out << '\n';
  }
}

void save_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_trajectory_csv(out, traj);
}

std::vector<RealVector> read_trajectory_states(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,t,x,y,theta", 0) != 0) {
    throw ParseError("line 1: not a trajectory CSV");
  }
  std::vector<RealVector> states;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    RealVector s(3);
    for (int c = 0; c < 5; ++c) {
      if (!std::getline(ss, cell, ',')) throw ParseError("line " + std::to_string(number) + ": too few columns");
      if (c >= 2) s[c - 2] = io::parse_real(cell, number);
    }
    states.push_back(s);
  }
  return states;
}

}  // namespace koopcbf::safectrl
