#include "koopcbf/plant/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "koopcbf/errors.hpp"
#include "koopcbf/io/text_format.hpp"

namespace koopcbf::plant {

std::vector<std::pair<std::size_t, std::size_t>> Dataset::transition_pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k + 1 < snapshots.size(); ++k) {
    const auto& a = snapshots[k];
    const auto& b = snapshots[k + 1];
    if (a.traj == b.traj && b.step == a.step + 1) pairs.emplace_back(k, k + 1);
  }
  return pairs;
}

void Dataset::validate() const {
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const auto& s = snapshots[k];
    if (s.x.size() != state_dim || s.u.size() != input_dim) {
      throw ParseError("snapshot " + std::to_string(k) + " has inconsistent dimensions");
    }
    if (k == 0 || snapshots[k - 1].traj != s.traj) {
      if (s.step != 0) {
        throw ParseError("snapshot " + std::to_string(k) + ": trajectory " + std::to_string(s.traj) +
                         " does not start at step 0");
      }
    } else if (s.step != snapshots[k - 1].step + 1) {
      throw ParseError("snapshot " + std::to_string(k) + ": steps are not consecutive");
    }
  }
}

Dataset generate_dataset(const PlantModel& plant, const DatasetOptions& opts) {
  if (opts.n_traj < 1 || opts.steps_per_traj < 1) {
    throw ConfigError("generate_dataset: trajectory and step counts must be >= 1");
  }
  if (!(opts.dt > 0.0)) throw ConfigError("generate_dataset: dt must be positive");
  if (opts.init_region.dim() != plant.state_dim() || !plant.state_box().contains(opts.init_region)) {
    throw ConfigError("generate_dataset: initial-state region " + opts.init_region.to_string() +
                      " is not inside the state box " + plant.state_box().to_string());
  }
  std::mt19937_64 rng(opts.seed);
  Dataset data;
  data.state_dim = plant.state_dim();
  data.input_dim = plant.input_dim();
  data.dt = opts.dt;
  data.snapshots.reserve(static_cast<std::size_t>(opts.n_traj) * opts.steps_per_traj);
  for (int t = 0; t < opts.n_traj; ++t) {
    RealVector x = opts.init_region.sample(rng);
    for (int k = 0; k < opts.steps_per_traj; ++k) {
      RealVector u = plant.input_box().sample(rng);
      data.snapshots.push_back({x, u, t, k});
      if (k + 1 == opts.steps_per_traj) break;
      x = rk4_step(plant, x, u, opts.dt);
      if (!plant.state_box().contains(x)) break;
    }
  }
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "traj,step";
  for (int i = 0; i < data.state_dim; ++i) out << ",x" << i;
  for (int i = 0; i < data.input_dim; ++i) out << ",u" << i;
  out << '\n';
  for (const auto& s : data.snapshots) {
    out << s.traj << ',' << s.step;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) out << ',' << io::format_real(s.x[i]);
    for (Eigen::Index i = 0; i < s.u.size(); ++i) out << ',' << io::format_real(s.u[i]);
    out << '\n';
  }
}

void save_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_dataset_csv(out, data);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, double dt) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "traj" || header[1] != "step") {
    throw ParseError("line 1: dataset header must start with traj,step");
  }
  Dataset data;
  data.dt = dt;
  std::size_t col = 2;
  while (col < header.size() && header[col] == "x" + std::to_string(data.state_dim)) {
    ++data.state_dim;
    ++col;
  }
  while (col < header.size() && header[col] == "u" + std::to_string(data.input_dim)) {
    ++data.input_dim;
    ++col;
  }
  if (col != header.size() || data.state_dim == 0 || data.input_dim == 0) {
    throw ParseError("line 1: expected columns x0..x{n-1},u0..u{m-1}");
  }
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError("line " + std::to_string(number) + ": expected " +
                       std::to_string(header.size()) + " columns");
    }
    Snapshot s;
    s.traj = static_cast<int>(io::parse_int(cells[0], number));
    s.step = static_cast<int>(io::parse_int(cells[1], number));
    s.x.resize(data.state_dim);
    s.u.resize(data.input_dim);
    for (int i = 0; i < data.state_dim; ++i) s.x[i] = io::parse_real(cells[2 + i], number);
    for (int i = 0; i < data.input_dim; ++i) {
      s.u[i] = io::parse_real(cells[2 + data.state_dim + i], number);
    }
    data.snapshots.push_back(std::move(s));
  }
  data.validate();
  return data;
}

Dataset load_dataset_csv(const std::string& path, double dt) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_dataset_csv(in, dt);
}

}  // namespace koopcbf::plant
