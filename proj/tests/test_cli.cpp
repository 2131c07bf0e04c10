#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "koopcbf/cli/experiment.hpp"
#include "koopcbf/errors.hpp"
#include "support/oracles.hpp"
#include "support/planted.hpp"

using namespace koopcbf;
using namespace koopcbf::cli;
namespace fs = std::filesystem;

namespace {

RealVector oracle_vec3(double a, double b, double c);

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

Checkpoint random_checkpoint(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Checkpoint c;
  c.build_tag = "test";
  c.config = ExperimentConfig{};
  c.config_hash = config_hash(c.config);
  c.sys.encoder = oracle::random_net({3, 7, 5}, rng);
  c.sys.decoder = oracle::random_net({5, 7, 3}, rng);
  c.sys.cbf_net = oracle::random_net({5, 4, 1}, rng);
  c.sys.model = koopman::BilinearModel::from_discrete(oracle::random_matrix(5, 5, rng),
                                                      {oracle::random_matrix(5, 5, rng)}, 0.1);
  c.spec = c.config.safety_spec();
  c.cegis.status = "Verified";
  c.cegis.rounds = 2;
  c.cegis.counterexamples_per_round = {3, 0};
  c.beta_inputs = {4, 1, 0.3, 0.7, 7.1, 0.02, 2.5};
  c.beta_bound = 1.0 / 3.0;
  return c;
}

RealVector oracle_vec3(double a, double b, double c) {
  RealVector v(3);
  v << a, b, c;
  return v;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("koopcbf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("empty config gives the documented defaults") {
  const ExperimentConfig c = parse("# nothing\n\n");
  CHECK(c.lifted_dim == 5);
  CHECK(c.candidate_inputs == 10);
  CHECK(c.w_dyn == 2.0);
  CHECK(c.w_recons == 0.05);
  CHECK(c.w_barr == 1.0);
  CHECK(c.u_lo == -1.0);
  CHECK(c.u_hi == 1.0);
  CHECK(c.wheel_radius == 0.1);
  CHECK(c.wheel_separation == 0.1);
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.goal_x == 2.5);
  CHECK(c.goal_y == 2.5);
  CHECK(c.obstacle_radius == 1.0);
  CHECK(c.init_box() == Box(oracle_vec3(-3.5, -3.5, 0.0), oracle_vec3(-1.5, -1.5, 1.5707963267948966)));
  CHECK(c.encoder_hidden == std::vector<int>{32, 32});
  CHECK(c.cbf_hidden == std::vector<int>{16, 16});
  CHECK(c.state_box().hi(2) == doctest::Approx(3.14159265358979));
  CHECK(c.safety_spec().candidate_inputs.size() == 10);
}

TEST_CASE("config overrides, comments and list values") {
  const ExperimentConfig c = parse(
      "model.lifted_dim = 7   # trailing comment\n"
      "net.cbf_hidden = 8 4 2\n"
      "domain.theta = narrow\n"
      "rollout.init_theta = 0 0.2\n"
      "train.weights = 1 0 0.5\n");
  CHECK(c.lifted_dim == 7);
  CHECK(c.cbf_hidden == std::vector<int>{8, 4, 2});
  CHECK(c.theta_preset == ThetaPreset::Narrow);
  CHECK(c.state_box().hi(2) == 0.2);
  CHECK(c.w_recons == 0.0);
}

TEST_CASE("config errors carry line information") {
  CHECK(error_of("cbf.lambda = -1\n").find("cbf.lambda") != std::string::npos);
  const std::string dup = error_of("seed = 1\nseed = 2\n");
  CHECK(dup.find("duplicate") != std::string::npos);
  CHECK(dup.find("line 2") != std::string::npos);
  const std::string unknown = error_of("\nnot.a.key = 3\n");
  CHECK(unknown.find("unknown key") != std::string::npos);
  CHECK(unknown.find("line 2") != std::string::npos);
  CHECK(error_of("seed 3\n").find("line 1") != std::string::npos);
  CHECK(error_of("data.dt = fast\n").find("line 1") != std::string::npos);
  CHECK(error_of("domain.x = 1\n").find("expects 2") != std::string::npos);
  CHECK(error_of("train.weights = 0 0 0\n").find("train.weights") != std::string::npos);
  CHECK(error_of("domain.theta = tight\n").find("wide") != std::string::npos);
  CHECK(error_of("rollout.init_x = -6 -4\n").find("rollout.init") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/koopcbf.cfg"), ConfigError);
}

TEST_CASE("canonical config text round-trips and hashes stably") {
  ExperimentConfig c;
  c.lambda = 0.125;
  c.cbf_hidden = {3};
  c.seed = 99;
  const ExperimentConfig back = parse(write_config(c));
  CHECK(back == c);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  ExperimentConfig d = c;
  d.lambda = 0.25;
  CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("config files in the repository load") {
  for (const char* name : {"default.cfg", "smoke.cfg", "narrow_theta.cfg"}) {
    const fs::path p = fs::path(KOOPCBF_SOURCE_DIR) / "configs" / name;
    CAPTURE(p.string());
    CHECK_NOTHROW(load_config(p.string()));
  }
  CHECK(load_config((fs::path(KOOPCBF_SOURCE_DIR) / "configs" / "narrow_theta.cfg").string()).theta_preset ==
        ThetaPreset::Narrow);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  const Checkpoint c = random_checkpoint(4);
  std::ostringstream out;
  write_checkpoint(out, c);
  std::istringstream in(out.str());
  std::vector<std::string> warnings;
  const Checkpoint back = read_checkpoint(in, &warnings);
  CHECK(warnings.empty());
  CHECK(back.sys == c.sys);
  CHECK(back.config == c.config);
  CHECK(back.cegis == c.cegis);
  CHECK(back.beta_bound == c.beta_bound);
  CHECK(back.beta_inputs.mu == c.beta_inputs.mu);
  CHECK(back.spec.candidate_inputs == c.spec.candidate_inputs);
  CHECK(back.spec.state_box == c.spec.state_box);
  CHECK(same_checkpoint(back, c));
}

TEST_CASE("checkpoint reader rejects truncation and foreign versions") {
  std::ostringstream out;
  write_checkpoint(out, random_checkpoint(5));
  const std::string text = out.str();
  std::istringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_checkpoint(truncated), ParseError);

  std::string v2 = text;
  v2.replace(0, std::string("koopcbf-checkpoint 1").size(), "koopcbf-checkpoint 2");
  std::istringstream in2(v2);
  CHECK_THROWS_AS(read_checkpoint(in2), ConfigError);
}

TEST_CASE("config hash mismatch produces a warning") {
  Checkpoint c = random_checkpoint(6);
  c.config_hash = "0000000000000000";
  std::ostringstream out;
  write_checkpoint(out, c);
  std::istringstream in(out.str());
  std::vector<std::string> warnings;
  read_checkpoint(in, &warnings);
  CHECK(warnings.size() == 1);
}

TEST_CASE("svg rendering is stable and contains every path") {
  PlotScene sc;
  sc.safe_radius = 2.0;
  RealVector g(2);
  g << 2.5, 2.5;
  sc.goal = g;
  std::vector<std::vector<RealVector>> paths(2);
  for (int k = 0; k < 3; ++k) {
    paths[0].push_back(oracle_vec3(-3.0 + k, -3.0, 0.0));
    paths[1].push_back(oracle_vec3(-2.0, -3.0 + k, 0.0));
  }
  const std::string a = render_svg(paths, sc);
  CHECK(a == render_svg(paths, sc));
  std::size_t polylines = 0;
  for (std::size_t p = a.find("<polyline"); p != std::string::npos; p = a.find("<polyline", p + 1)) ++polylines;
  CHECK(polylines == 2);
  // Origin maps to the canvas centre.
  CHECK(a.find("cx=\"300.00\" cy=\"300.00\" r=\"56.00\"") != std::string::npos);
  CHECK(a.find("points=\"132.00,468.00 188.00,468.00 244.00,468.00\"") != std::string::npos);
}

TEST_CASE("planted checkpoint: verify, simulate, summarize, plot") {
  ExperimentConfig cfg;
  cfg.rollouts = 3;
  cfg.control_max_steps = 50;
  Checkpoint c;
  c.build_tag = "test";
  c.config = cfg;
  c.config_hash = config_hash(cfg);
  c.sys = planted::system();
  c.spec = planted::spec(0.1);
  c.cegis.status = "Verified";
  c.cegis.rounds = 1;
  c.cegis.counterexamples_per_round = {0};
  c.config.falsifier_options();
  CHECK(verify_checkpoint(c).unsat);

  const auto inits = rollout_initial_states(cfg, 3);
  CHECK(inits == rollout_initial_states(cfg, 3));
  for (const auto& x : inits) CHECK(cfg.init_box().contains(x));

  const auto rs = run_rollouts(c, 3);
  REQUIRE(rs.size() == 3);
  for (std::size_t k = 0; k < rs.size(); ++k) {
    CHECK(rs[k].x0 == inits[k]);
    CHECK(rs[k].traj.states.front() == inits[k]);
  }
  const std::string s1 = summary_json(c, std::nullopt, rs);
  const std::string s2 = summary_json(c, std::nullopt, run_rollouts(c, 3));
  CHECK(s1 == s2);
  CHECK(s1.find("\"config_hash\": \"" + c.config_hash + "\"") != std::string::npos);

  const fs::path dir = temp_dir("plot");
  write_rollouts(dir.string(), rs);
  std::ofstream(dir / "summary.json") << s1;
  CHECK(fs::exists(dir / "traj_000.csv"));
  CHECK(fs::exists(dir / "traj_002.csv"));
  const std::string svg = plot_directory(dir.string());
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("fill=\"#2a2\"") != std::string::npos);
  fs::remove_all(dir);
}
