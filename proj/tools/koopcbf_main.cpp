#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "koopcbf/cli/experiment.hpp"
#include "koopcbf/errors.hpp"

namespace fs = std::filesystem;
using namespace koopcbf;
using namespace koopcbf::cli;

namespace {

int gen_data(const std::string& config, const std::string& out) {
  const ExperimentConfig cfg = load_config(config);
  const plant::Dataset data = generate_data(cfg);
  plant::save_dataset_csv(out, data);
  std::cout << "wrote " << data.size() << " snapshots to " << out << "\n";
  return kExitOk;
}

int train_cmd(const std::string& config, const std::string& data_path, const std::string& out, const std::string& log) {
  const ExperimentConfig cfg = load_config(config);
  const plant::Dataset data = plant::load_dataset_csv(data_path, cfg.data_dt);
  const fs::path reports = fs::path(out).parent_path() / (fs::path(out).filename().string() + ".falsifier");
  const TrainResult tr = train_experiment(cfg, data, &std::cout, reports.string());
  save_checkpoint(out, tr.checkpoint);
  if (!log.empty()) {
    std::ofstream f(log);
    train::write_training_log_csv(f, tr.history);
  }
  std::cout << "cegis: " << tr.checkpoint.cegis.status << " after " << tr.checkpoint.cegis.rounds
            << " round(s); beta bound " << tr.checkpoint.beta_bound << "\n";
  return tr.checkpoint.cegis.verified() ? kExitOk : kExitVerification;
}

Checkpoint load(const std::string& path) {
  std::vector<std::string> warnings;
  Checkpoint c = load_checkpoint(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return c;
}

int verify_cmd(const std::string& ckpt_path) {
  const Checkpoint ckpt = load(ckpt_path);
  const falsifier::FalsifierResult r = verify_checkpoint(ckpt);
  std::cout << falsifier::falsifier_report_json(r) << "\n";
  return r.unsat ? kExitOk : kExitVerification;
}

int simulate(const std::string& ckpt_path, int n, const std::string& out) {
  const Checkpoint ckpt = load(ckpt_path);
  const auto rollouts = run_rollouts(ckpt, n);
  write_rollouts(out, rollouts);
  const std::string summary = summary_json(ckpt, std::nullopt, rollouts);
  std::ofstream(fs::path(out) / "summary.json") << summary;
  int reached = 0;
  for (const auto& r : rollouts) reached += r.traj.reached_goal;
  std::cout << rollouts.size() << " rollouts, " << reached << " reached the goal\n";
  if (!ckpt.cegis.verified()) {
    std::cerr << "checkpoint is not verified (" << ckpt.cegis.status << ")\n";
    return kExitVerification;
  }
  return kExitOk;
}

int plot(const std::string& in, const std::string& out) {
  const std::string svg = plot_directory(in);
  std::ofstream f(out);
  if (!f) throw Error("cannot write '" + out + "'");
  f << svg;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman barrier certificate learning for a differential-drive robot"};
  app.require_subcommand(1);
  std::string config, out, data, ckpt, in, log;
  int n = 50;

  auto* g = app.add_subcommand("gen-data", "Generate the snapshot dataset");
  g->add_option("--config", config)->required();
  g->add_option("--out", out)->required();

  auto* t = app.add_subcommand("train", "Run CEGIS training and write a checkpoint");
  t->add_option("--config", config)->required();
  t->add_option("--data", data)->required();
  t->add_option("--out", out)->required();
  t->add_option("--log", log, "Training log CSV");

  auto* v = app.add_subcommand("verify", "Re-run the falsifier on a checkpoint");
  v->add_option("--ckpt", ckpt)->required();

  auto* s = app.add_subcommand("simulate", "Closed-loop rollouts with the CBF-QP filter");
  s->add_option("--ckpt", ckpt)->required();
  s->add_option("--n", n)->check(CLI::NonNegativeNumber);
  s->add_option("--out", out)->required();

  auto* p = app.add_subcommand("plot", "Render trajectory CSVs to SVG");
  p->add_option("--in", in)->required();
  p->add_option("--out", out)->required();

  auto* r = app.add_subcommand("run", "Whole pipeline into one directory");
  r->add_option("--config", config)->required();
  r->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*g) return gen_data(config, out);
    if (*t) return train_cmd(config, data, out, log);
    if (*v) return verify_cmd(ckpt);
    if (*s) return simulate(ckpt, n, out);
    if (*p) return plot(in, out);
    if (*r) return run_experiment(load_config(config), out, &std::cout).exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
