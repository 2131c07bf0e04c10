#include "koopcbf/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "koopcbf/errors.hpp"
#include "koopcbf/io/text_format.hpp"

namespace koopcbf::cli {

std::string to_string(ThetaPreset p) { return p == ThetaPreset::Wide ? "wide" : "narrow"; }

namespace {

using Tokens = std::vector<std::string>;

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const Tokens&, std::size_t)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

void want(const Tokens& t, std::size_t n, const std::string& key, std::size_t line) {
  if (t.size() != n) {
    throw ParseError("line " + std::to_string(line) + ": '" + key + "' expects " + std::to_string(n) +
                     " value(s), got " + std::to_string(t.size()));
  }
}

Field real_field(std::string key, double ExperimentConfig::*m) {
  return {key,
          [key, m](ExperimentConfig& c, const Tokens& t, std::size_t line) {
            want(t, 1, key, line);
            c.*m = io::parse_real(t[0], line);
          },
          [m](const ExperimentConfig& c) { return io::format_real(c.*m); }};
}

Field pair_field(std::string key, double ExperimentConfig::*a, double ExperimentConfig::*b) {
  return {key,
          [key, a, b](ExperimentConfig& c, const Tokens& t, std::size_t line) {
            want(t, 2, key, line);
            c.*a = io::parse_real(t[0], line);
            c.*b = io::parse_real(t[1], line);
          },
          [a, b](const ExperimentConfig& c) { return io::format_real(c.*a) + " " + io::format_real(c.*b); }};
}

Field int_field(std::string key, int ExperimentConfig::*m) {
  return {key,
          [key, m](ExperimentConfig& c, const Tokens& t, std::size_t line) {
            want(t, 1, key, line);
            const long long v = io::parse_int(t[0], line);
            if (v < -2147483647LL || v > 2147483647LL) {
              throw ParseError("line " + std::to_string(line) + ": '" + key + "' out of integer range");
            }
            c.*m = static_cast<int>(v);
          },
          [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Field u64_field(std::string key, std::uint64_t ExperimentConfig::*m) {
  return {key,
          [key, m](ExperimentConfig& c, const Tokens& t, std::size_t line) {
            want(t, 1, key, line);
            const long long v = io::parse_int(t[0], line);
            if (v < 0) throw ParseError("line " + std::to_string(line) + ": '" + key + "' must be >= 0");
            c.*m = static_cast<std::uint64_t>(v);
          },
          [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Field list_field(std::string key, std::vector<int> ExperimentConfig::*m) {
  return {key,
          [key, m](ExperimentConfig& c, const Tokens& t, std::size_t line) {
            if (t.empty()) throw ParseError("line " + std::to_string(line) + ": '" + key + "' needs values");
            (c.*m).clear();
            for (const auto& s : t) (c.*m).push_back(static_cast<int>(io::parse_int(s, line)));
          },
          [m](const ExperimentConfig& c) {
            std::string s;
            for (int v : c.*m) s += (s.empty() ? "" : " ") + std::to_string(v);
            return s;
          }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      u64_field("seed", &C::seed),
      real_field("plant.wheel_radius", &C::wheel_radius),
      real_field("plant.wheel_separation", &C::wheel_separation),
      real_field("plant.lipschitz", &C::lipschitz),
      pair_field("domain.x", &C::x_lo, &C::x_hi),
      pair_field("domain.y", &C::y_lo, &C::y_hi),
      {"domain.theta",
       [](C& c, const Tokens& t, std::size_t line) {
         want(t, 1, "domain.theta", line);
         if (t[0] == "wide") {
           c.theta_preset = ThetaPreset::Wide;
         } else if (t[0] == "narrow") {
           c.theta_preset = ThetaPreset::Narrow;
         } else {
           throw ParseError("line " + std::to_string(line) + ": domain.theta must be 'wide' or 'narrow'");
         }
       },
       [](const C& c) { return to_string(c.theta_preset); }},
      pair_field("domain.u", &C::u_lo, &C::u_hi),
      int_field("data.trajectories", &C::data_trajectories),
      int_field("data.steps", &C::data_steps),
      real_field("data.dt", &C::data_dt),
      int_field("model.lifted_dim", &C::lifted_dim),
      int_field("model.candidate_inputs", &C::candidate_inputs),
      list_field("net.encoder_hidden", &C::encoder_hidden),
      list_field("net.decoder_hidden", &C::decoder_hidden),
      list_field("net.cbf_hidden", &C::cbf_hidden),
      real_field("train.learning_rate", &C::learning_rate),
      {"train.weights",
       [](C& c, const Tokens& t, std::size_t line) {
         want(t, 3, "train.weights", line);
         c.w_dyn = io::parse_real(t[0], line);
         c.w_recons = io::parse_real(t[1], line);
         c.w_barr = io::parse_real(t[2], line);
       },
       [](const C& c) {
         return io::format_real(c.w_dyn) + " " + io::format_real(c.w_recons) + " " + io::format_real(c.w_barr);
       }},
      real_field("train.lipschitz_target", &C::lipschitz_target),
      real_field("train.ridge", &C::ridge),
      real_field("train.class_margin", &C::class_margin),
      real_field("train.lie_margin", &C::lie_margin),
      int_field("train.max_epochs", &C::max_epochs),
      int_field("train.plateau_window", &C::plateau_window),
      real_field("train.plateau_tol", &C::plateau_tol),
      int_field("train.safe_samples", &C::safe_samples),
      int_field("train.unsafe_samples", &C::unsafe_samples),
      int_field("train.interior_samples", &C::interior_samples),
      int_field("train.max_rounds", &C::max_rounds),
      real_field("cbf.lambda", &C::lambda),
      real_field("cbf.beta", &C::beta),
      pair_field("safety.obstacle_center", &C::obstacle_x, &C::obstacle_y),
      real_field("safety.obstacle_radius", &C::obstacle_radius),
      real_field("safety.safe_margin", &C::safe_margin),
      real_field("falsifier.delta_box", &C::delta_box),
      real_field("falsifier.delta_sat", &C::delta_sat),
      u64_field("falsifier.max_boxes", &C::max_boxes),
      int_field("falsifier.max_counterexamples", &C::max_counterexamples),
      int_field("beta.samples", &C::beta_samples),
      real_field("control.dt", &C::control_dt),
      real_field("control.gain", &C::control_gain),
      int_field("control.max_steps", &C::control_max_steps),
      pair_field("control.goal", &C::goal_x, &C::goal_y),
      real_field("control.goal_tolerance", &C::goal_tolerance),
      pair_field("rollout.init_x", &C::init_x_lo, &C::init_x_hi),
      pair_field("rollout.init_y", &C::init_y_lo, &C::init_y_hi),
      pair_field("rollout.init_theta", &C::init_theta_lo, &C::init_theta_hi),
      int_field("rollout.count", &C::rollouts),
  };
  return table;
}

RealVector vec(std::initializer_list<double> v) {
  RealVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config: " + key + " " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(wheel_radius > 0.0, "plant.wheel_radius", "must be > 0");
  require(wheel_separation > 0.0, "plant.wheel_separation", "must be > 0");
  require(lipschitz >= 0.0, "plant.lipschitz", "must be >= 0");
  require(x_lo < x_hi, "domain.x", "must satisfy lo < hi");
  require(y_lo < y_hi, "domain.y", "must satisfy lo < hi");
  require(u_lo < u_hi, "domain.u", "must satisfy lo < hi");
  require(data_trajectories >= 1, "data.trajectories", "must be >= 1");
  require(data_steps >= 2, "data.steps", "must be >= 2");
  require(data_dt > 0.0, "data.dt", "must be > 0");
  require(lifted_dim >= 1, "model.lifted_dim", "must be >= 1");
  require(candidate_inputs >= 2, "model.candidate_inputs", "must be >= 2");
  for (const auto* h : {&encoder_hidden, &decoder_hidden, &cbf_hidden}) {
    for (int v : *h) require(v >= 1, "net.*_hidden", "widths must be >= 1");
  }
  require(learning_rate >= 0.0, "train.learning_rate", "must be >= 0");
  require(w_dyn >= 0.0 && w_recons >= 0.0 && w_barr >= 0.0, "train.weights", "must be >= 0");
  require(w_dyn + w_recons + w_barr > 0.0, "train.weights", "must not all be zero");
  require(lipschitz_target > 0.0, "train.lipschitz_target", "must be > 0");
  require(ridge >= 0.0, "train.ridge", "must be >= 0");
  require(class_margin >= 0.0, "train.class_margin", "must be >= 0");
  require(lie_margin >= 0.0, "train.lie_margin", "must be >= 0");
  require(max_epochs >= 0, "train.max_epochs", "must be >= 0");
  require(plateau_window >= 1, "train.plateau_window", "must be >= 1");
  require(plateau_tol >= 0.0, "train.plateau_tol", "must be >= 0");
  require(safe_samples >= 0 && unsafe_samples >= 0 && interior_samples >= 0, "train.*_samples", "must be >= 0");
  require(max_rounds >= 1, "train.max_rounds", "must be >= 1");
  require(lambda > 0.0, "cbf.lambda", "must be > 0");
  require(beta >= 0.0, "cbf.beta", "must be >= 0");
  require(obstacle_radius > 0.0, "safety.obstacle_radius", "must be > 0");
  require(safe_margin > 0.0, "safety.safe_margin", "must be > 0");
  require(delta_box > 0.0, "falsifier.delta_box", "must be > 0");
  require(delta_sat >= 0.0, "falsifier.delta_sat", "must be >= 0");
  require(max_boxes >= 1, "falsifier.max_boxes", "must be >= 1");
  require(max_counterexamples >= 1, "falsifier.max_counterexamples", "must be >= 1");
  require(beta_samples >= 1, "beta.samples", "must be >= 1");
  require(control_dt > 0.0, "control.dt", "must be > 0");
  require(control_gain > 0.0, "control.gain", "must be > 0");
  require(control_max_steps >= 1, "control.max_steps", "must be >= 1");
  require(goal_tolerance > 0.0, "control.goal_tolerance", "must be > 0");
  require(rollouts >= 0, "rollout.count", "must be >= 0");
  require(init_x_lo <= init_x_hi && init_y_lo <= init_y_hi && init_theta_lo <= init_theta_hi, "rollout.init_*",
          "must satisfy lo <= hi");
  require(state_box().contains(init_box()), "rollout.init_*", "must lie inside the state domain");
  require(state_box().contains(vec({goal_x, goal_y, 0.5 * (state_box().lo(2) + state_box().hi(2))})),
          "control.goal", "must lie inside the state domain");
}

Box ExperimentConfig::state_box() const {
  const double th = theta_preset == ThetaPreset::Wide ? std::numbers::pi : 0.2;
  return Box(vec({x_lo, y_lo, -th}), vec({x_hi, y_hi, th}));
}

Box ExperimentConfig::input_box() const { return Box(vec({u_lo}), vec({u_hi})); }

Box ExperimentConfig::init_box() const {
  return Box(vec({init_x_lo, init_y_lo, init_theta_lo}), vec({init_x_hi, init_y_hi, init_theta_hi}));
}

plant::PlantModel ExperimentConfig::plant() const {
  const plant::DiffDriveParams p{wheel_radius, wheel_separation};
  if (lipschitz > 0.0) {
    return plant::PlantModel(
        3, 1, [p](const RealVector& x, const RealVector& u) { return plant::diffdrive_field(x, u, p); },
        state_box(), input_box(), lipschitz);
  }
  return plant::make_diffdrive(p, state_box(), input_box());
}

plant::DatasetOptions ExperimentConfig::dataset_options() const {
  plant::DatasetOptions o;
  o.n_traj = data_trajectories;
  o.steps_per_traj = data_steps;
  o.dt = data_dt;
  o.init_region = state_box();
  o.seed = seed;
  return o;
}

train::NetShapes ExperimentConfig::net_shapes() const { return {encoder_hidden, decoder_hidden, cbf_hidden}; }

train::TrainOptions ExperimentConfig::train_options() const {
  train::TrainOptions o;
  o.weights = {w_dyn, w_recons, w_barr};
  o.optimizer.learning_rate = learning_rate;
  o.lipschitz_target = lipschitz_target;
  o.ridge = ridge;
  o.class_margin = class_margin;
  o.lie_margin = lie_margin;
  o.max_epochs_per_round = max_epochs;
  o.plateau_window = plateau_window;
  o.plateau_tol = plateau_tol;
  o.initial_safe_samples = safe_samples;
  o.initial_unsafe_samples = unsafe_samples;
  o.interior_samples = interior_samples;
  o.seed = seed;
  return o;
}

falsifier::SafetySpec ExperimentConfig::safety_spec() const {
  falsifier::SafetySpec s;
  s.state_box = state_box();
  s.obstacle_center = vec({obstacle_x, obstacle_y});
  s.obstacle_radius = obstacle_radius;
  s.safe_margin = safe_margin;
  s.candidate_inputs = falsifier::grid_inputs(input_box(), candidate_inputs);
  s.lambda = lambda;
  s.beta = beta;
  s.delta_sat = delta_sat;
  s.delta_box = delta_box;
  return s;
}

falsifier::FalsifierOptions ExperimentConfig::falsifier_options() const {
  return {max_boxes, max_counterexamples};
}

safectrl::RolloutOptions ExperimentConfig::rollout_options() const {
  safectrl::RolloutOptions o;
  o.goal = vec({goal_x, goal_y});
  o.goal_tolerance = goal_tolerance;
  o.max_steps = control_max_steps;
  o.dt = control_dt;
  o.gain = control_gain;
  return o;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  std::map<std::string, const Field*> index;
  for (const auto& f : fields()) index[f.key] = &f;
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  try {
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw ParseError("line " + std::to_string(line) + ": expected 'key = value'");
      const std::string key = trim(text.substr(0, eq));
      const auto it = index.find(key);
      if (it == index.end()) throw ParseError("line " + std::to_string(line) + ": unknown key '" + key + "'");
      if (!seen.insert(key).second) {
        throw ParseError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
      }
      std::istringstream vs(text.substr(eq + 1));
      Tokens tokens;
      for (std::string t; vs >> t;) tokens.push_back(t);
      it->second->set(cfg, tokens, line);
    }
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

std::string write_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : write_config(cfg)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return write_config(a) == write_config(b);
}

}  // namespace koopcbf::cli
