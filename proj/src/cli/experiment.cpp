#include "koopcbf/cli/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "koopcbf/errors.hpp"
#include "koopcbf/safectrl/barrier_math.hpp"

namespace koopcbf::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::uint64_t stage_seed(std::uint64_t seed, std::uint32_t stage) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stage};
  std::uint32_t w[2];
  seq.generate(w, w + 2);
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

ordered_json real_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

plant::Dataset generate_data(const ExperimentConfig& cfg) {
  cfg.validate();
  return plant::generate_dataset(cfg.plant(), cfg.dataset_options());
}

TrainResult train_experiment(const ExperimentConfig& cfg, const plant::Dataset& data, std::ostream* progress,
                             const std::string& report_dir) {
  cfg.validate();
  data.validate();
  if (data.state_dim != 3 || data.input_dim != 1) throw ConfigError("dataset dimensions do not match the plant");
  const falsifier::SafetySpec spec = cfg.safety_spec();
  train::TrainState state = train::make_train_state(data, spec, cfg.net_shapes(), cfg.lifted_dim, cfg.train_options());

  train::CegisOptions co;
  co.max_rounds = cfg.max_rounds;
  co.falsifier = cfg.falsifier_options();
  co.on_round = [&](const train::TrainState& s, const falsifier::FalsifierResult& r) {
    if (progress != nullptr) {
      const train::LossRecord last = s.history.empty() ? train::LossRecord{} : s.history.back();
      *progress << "round " << s.round << ": epochs " << s.epoch << ", loss " << last.total << " (dyn " << last.dyn
                << ", recons " << last.recons << ", barr " << last.barr << "), falsifier "
                << (r.unsat ? "unsat" : "sat") << " after " << r.total_boxes() << " boxes, "
                << r.counterexamples.size() << " counterexamples\n"
                << std::flush;
    }
    if (!report_dir.empty()) {
      write_text(fs::path(report_dir) / ("falsifier_round_" + std::to_string(s.round) + ".json"),
                 falsifier::falsifier_report_json(r) + "\n");
    }
  };
  if (!report_dir.empty()) fs::create_directories(report_dir);

  TrainResult out;
  out.report = train::cegis(state, spec, co);
  out.history = state.history;

  Checkpoint& c = out.checkpoint;
  c.build_tag = build_tag();
  c.config = cfg;
  c.config_hash = config_hash(cfg);
  c.sys = state.sys;
  c.spec = spec;
  c.cegis.status = train::to_string(out.report.final_status);
  c.cegis.rounds = out.report.rounds;
  c.cegis.counterexamples_per_round = out.report.counterexamples_per_round;

  safectrl::BetaEstimateOptions bo;
  bo.K_phi = cfg.lipschitz_target;
  bo.K_F = cfg.plant().lipschitz();
  bo.state_box = cfg.state_box();
  bo.input_box = cfg.input_box();
  bo.sample_count = cfg.beta_samples;
  bo.seed = stage_seed(cfg.seed, 2);
  c.beta_inputs = safectrl::estimate_beta_inputs(state.sys, data, bo);
  c.beta_bound = safectrl::compute_beta(c.beta_inputs);
  return out;
}

falsifier::FalsifierResult verify_checkpoint(const Checkpoint& ckpt) {
  return falsifier::falsify(ckpt.sys, ckpt.spec, ckpt.config.falsifier_options());
}

std::vector<RealVector> rollout_initial_states(const ExperimentConfig& cfg, int n) {
  std::mt19937_64 rng(stage_seed(cfg.seed, 3));
  const Box init = cfg.init_box();
  std::vector<RealVector> out;
  for (int k = 0; k < n; ++k) out.push_back(init.sample(rng));
  return out;
}

std::vector<RolloutRecord> run_rollouts(const Checkpoint& ckpt, int n) {
  if (n < 0) throw ConfigError("rollout count must be >= 0");
  const plant::PlantModel plant = ckpt.config.plant();
  const safectrl::RolloutOptions opts = ckpt.config.rollout_options();
  const auto inits = rollout_initial_states(ckpt.config, n);
  std::vector<RolloutRecord> out(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < out.size(); k = next++) {
      out[k].x0 = inits[k];
      try {
        out[k].traj = safectrl::safe_rollout(plant, ckpt.sys, ckpt.spec, inits[k], opts);
      } catch (const safectrl::RolloutExitError& e) {
        out[k].traj = e.partial();
        out[k].exited = true;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min(std::thread::hardware_concurrency(), static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_rollouts(const std::string& dir, const std::vector<RolloutRecord>& rollouts) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < rollouts.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "traj_%03zu.csv", k);
    safectrl::save_trajectory_csv((fs::path(dir) / name).string(), rollouts[k].traj);
  }
}

PlotScene scene_from_config(const ExperimentConfig& cfg) {
  PlotScene s;
  s.x_lo = cfg.x_lo;
  s.x_hi = cfg.x_hi;
  s.y_lo = cfg.y_lo;
  s.y_hi = cfg.y_hi;
  s.obstacle_center = RealVector(2);
  s.obstacle_center << cfg.obstacle_x, cfg.obstacle_y;
  s.obstacle_radius = cfg.obstacle_radius;
  s.safe_radius = cfg.obstacle_radius + cfg.safe_margin;
  RealVector g(2);
  g << cfg.goal_x, cfg.goal_y;
  s.goal = g;
  return s;
}

std::string summary_json(const Checkpoint& ckpt, const std::optional<falsifier::FalsifierResult>& verification,
                         const std::vector<RolloutRecord>& rollouts) {
  ordered_json j;
  j["schema"] = 1;
  j["build"] = ckpt.build_tag;
  j["config_hash"] = ckpt.config_hash;
  j["cegis"] = {{"status", ckpt.cegis.status},
                {"rounds", ckpt.cegis.rounds},
                {"counterexamples_per_round", ckpt.cegis.counterexamples_per_round}};
  ordered_json v;
  if (verification) {
    v["result"] = verification->unsat ? "unsat" : "sat";
    v["boxes"] = verification->total_boxes();
    v["counterexamples"] = verification->counterexamples.size();
    for (const auto& s : verification->stats) {
      v["clauses"].push_back({{"clause", falsifier::to_string(s.clause)},
                              {"result", s.unsat ? "unsat" : "sat"},
                              {"boxes", s.boxes},
                              {"discarded", s.discarded}});
    }
  } else {
    v["result"] = "not-run";
  }
  j["verification"] = v;
  const auto& b = ckpt.beta_inputs;
  j["beta"] = {{"configured", ckpt.spec.beta},
               {"bound", real_or_null(ckpt.beta_bound)},
               {"K_phi", b.K_phi},
               {"K_F", b.K_F},
               {"K_psi", b.K_psi},
               {"delta_fill", b.delta_fill},
               {"tau", b.tau},
               {"mu", b.mu},
               {"M", b.M}};

  int reached = 0, exited = 0, infeasible = 0, safe = 0;
  double min_dist = std::numeric_limits<double>::infinity();
  double min_margin = std::numeric_limits<double>::infinity();
  ordered_json trajs = ordered_json::array();
  for (std::size_t k = 0; k < rollouts.size(); ++k) {
    const auto& r = rollouts[k];
    const double d = r.traj.min_center_distance(ckpt.spec.obstacle_center);
    const double m = r.traj.min_accepted_margin();
    reached += r.traj.reached_goal;
    exited += r.exited;
    infeasible += r.traj.infeasible_steps();
    safe += d >= ckpt.spec.obstacle_radius;
    min_dist = std::min(min_dist, d);
    min_margin = std::min(min_margin, m);
    trajs.push_back({{"index", k},
                     {"x0", std::vector<double>(r.x0.data(), r.x0.data() + r.x0.size())},
                     {"steps", r.traj.steps()},
                     {"reached_goal", r.traj.reached_goal},
                     {"exited_domain", r.exited},
                     {"min_center_distance", real_or_null(d)},
                     {"min_accepted_margin", real_or_null(m)},
                     {"infeasible_steps", r.traj.infeasible_steps()}});
  }
  j["rollouts"] = {{"count", rollouts.size()},
                   {"reached_goal", reached},
                   {"safe", safe},
                   {"exited_domain", exited},
                   {"infeasible_steps", infeasible},
                   {"min_center_distance", real_or_null(min_dist)},
                   {"min_accepted_margin", real_or_null(min_margin)}};
  j["trajectories"] = trajs;
  const PlotScene sc = scene_from_config(ckpt.config);
  j["scene"] = {{"x", {sc.x_lo, sc.x_hi}},
                {"y", {sc.y_lo, sc.y_hi}},
                {"obstacle_center", {sc.obstacle_center[0], sc.obstacle_center[1]}},
                {"obstacle_radius", sc.obstacle_radius},
                {"safe_radius", sc.safe_radius},
                {"goal", {(*sc.goal)[0], (*sc.goal)[1]}}};
  return j.dump(2) + "\n";
}

std::string render_svg(const std::vector<std::vector<RealVector>>& paths, const PlotScene& sc) {
  constexpr double size = 600.0, pad = 20.0;
  const double span = std::max(sc.x_hi - sc.x_lo, sc.y_hi - sc.y_lo);
  const double scale = (size - 2 * pad) / span;
  auto px = [&](double x) { return pad + (x - sc.x_lo) * scale; };
  auto py = [&](double y) { return size - pad - (y - sc.y_lo) * scale; };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"600\" height=\"600\" fill=\"white\"/>\n";
  s << "<rect x=\"" << num(px(sc.x_lo)) << "\" y=\"" << num(py(sc.y_hi)) << "\" width=\""
    << num((sc.x_hi - sc.x_lo) * scale) << "\" height=\"" << num((sc.y_hi - sc.y_lo) * scale)
    << "\" fill=\"none\" stroke=\"#888\"/>\n";
  const double cx = px(sc.obstacle_center[0]), cy = py(sc.obstacle_center[1]);
  if (sc.safe_radius > 0.0) {
    s << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(sc.safe_radius * scale)
      << "\" fill=\"none\" stroke=\"#c66\" stroke-dasharray=\"4 4\"/>\n";
  }
  s << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(sc.obstacle_radius * scale)
    << "\" fill=\"#f4b4b4\" stroke=\"#c00\"/>\n";
  for (const auto& path : paths) {
    if (path.empty()) continue;
    s << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1\" points=\"";
    for (std::size_t k = 0; k < path.size(); ++k) {
      s << (k ? " " : "") << num(px(path[k][0])) << ',' << num(py(path[k][1]));
    }
    s << "\"/>\n";
    s << "<circle cx=\"" << num(px(path.front()[0])) << "\" cy=\"" << num(py(path.front()[1]))
      << "\" r=\"2\" fill=\"#1f5fa8\"/>\n";
  }
  if (sc.goal) {
    s << "<circle cx=\"" << num(px((*sc.goal)[0])) << "\" cy=\"" << num(py((*sc.goal)[1]))
      << "\" r=\"5\" fill=\"#2a2\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string plot_directory(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: '" + dir + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("traj_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::vector<RealVector>> paths;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw Error("cannot open '" + f.string() + "'");
    paths.push_back(safectrl::read_trajectory_states(in));
  }
  PlotScene scene;
  scene.goal.reset();
  const fs::path summary = fs::path(dir) / "summary.json";
  if (fs::exists(summary)) {
    std::ifstream in(summary);
    ordered_json j;
    try {
      j = ordered_json::parse(in);
      const auto& sc = j.at("scene");
      scene.x_lo = sc.at("x").at(0);
      scene.x_hi = sc.at("x").at(1);
      scene.y_lo = sc.at("y").at(0);
      scene.y_hi = sc.at("y").at(1);
      scene.obstacle_center << sc.at("obstacle_center").at(0).get<double>(),
          sc.at("obstacle_center").at(1).get<double>();
      scene.obstacle_radius = sc.at("obstacle_radius");
      scene.safe_radius = sc.at("safe_radius");
      RealVector g(2);
      g << sc.at("goal").at(0).get<double>(), sc.at("goal").at(1).get<double>();
      scene.goal = g;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed '" + summary.string() + "': " + e.what());
    }
  }
  return render_svg(paths, scene);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream* progress) {
  cfg.validate();
  const fs::path root(out_dir);
  fs::create_directories(root);
  write_text(root / "config.txt", write_config(cfg));

  const plant::Dataset data = generate_data(cfg);
  plant::save_dataset_csv((root / "dataset.csv").string(), data);
  if (progress) *progress << "dataset: " << data.size() << " snapshots\n";

  TrainResult tr = train_experiment(cfg, data, progress, (root / "falsifier").string());
  save_checkpoint((root / "checkpoint.txt").string(), tr.checkpoint);
  {
    std::ofstream log(root / "training_log.csv");
    train::write_training_log_csv(log, tr.history);
  }

  ExperimentResult out;
  out.checkpoint = std::move(tr.checkpoint);
  out.verification = verify_checkpoint(out.checkpoint);
  write_text(root / "verify.json", falsifier::falsifier_report_json(out.verification) + "\n");
  if (progress) *progress << "verify: " << (out.verification.unsat ? "unsat" : "sat") << "\n";

  const fs::path traj_dir = root / "trajectories";
  out.rollouts = run_rollouts(out.checkpoint, cfg.rollouts);
  write_rollouts(traj_dir.string(), out.rollouts);
  out.summary = summary_json(out.checkpoint, out.verification, out.rollouts);
  write_text(root / "summary.json", out.summary);
  write_text(traj_dir / "summary.json", out.summary);
  write_text(root / "trajectories.svg", plot_directory(traj_dir.string()));
  out.exit_code = out.verification.unsat && out.checkpoint.cegis.verified() ? kExitOk : kExitVerification;
  return out;
}

}  // namespace koopcbf::cli
