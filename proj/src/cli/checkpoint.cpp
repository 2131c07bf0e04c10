#include "koopcbf/cli/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "koopcbf/errors.hpp"
#include "koopcbf/io/text_format.hpp"

#ifndef KOOPCBF_BUILD_TAG
#define KOOPCBF_BUILD_TAG "unknown"
#endif

namespace koopcbf::cli {

std::string build_tag() { return KOOPCBF_BUILD_TAG; }

namespace {

void write_spec(io::TextWriter& w, const falsifier::SafetySpec& s) {
  w.vector("state-lo", s.state_box.lo());
  w.vector("state-hi", s.state_box.hi());
  w.vector("obstacle-center", s.obstacle_center);
  w.real("obstacle-radius", s.obstacle_radius);
  w.real("safe-margin", s.safe_margin);
  w.integer("candidate-inputs", static_cast<long long>(s.candidate_inputs.size()));
  for (const auto& u : s.candidate_inputs) w.vector("u", u);
  w.real("lambda", s.lambda);
  w.real("beta", s.beta);
  w.real("delta-sat", s.delta_sat);
  w.real("delta-box", s.delta_box);
}

falsifier::SafetySpec read_spec(io::TextReader& r) {
  falsifier::SafetySpec s;
  const RealVector lo = r.vector("state-lo");
  const RealVector hi = r.vector("state-hi");
  s.state_box = Box(lo, hi);
  s.obstacle_center = r.vector("obstacle-center");
  s.obstacle_radius = r.real("obstacle-radius");
  s.safe_margin = r.real("safe-margin");
  const long long count = r.integer("candidate-inputs");
  if (count < 0) throw ParseError("line " + std::to_string(r.line_number()) + ": negative input count");
  for (long long k = 0; k < count; ++k) s.candidate_inputs.push_back(r.vector("u"));
  s.lambda = r.real("lambda");
  s.beta = r.real("beta");
  s.delta_sat = r.real("delta-sat");
  s.delta_box = r.real("delta-box");
  return s;
}

std::string join(const std::vector<std::string>& t) {
  std::string s;
  for (const auto& x : t) s += (s.empty() ? "" : " ") + x;
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  io::TextWriter w(out);
  w.integer("koopcbf-checkpoint", kCheckpointVersion);
  w.line("build", {c.build_tag.empty() ? "unknown" : c.build_tag});
  w.line("config-hash", {c.config_hash});
  std::istringstream cfg(write_config(c.config));
  for (std::string line; std::getline(cfg, line);) {
    std::istringstream ts(line);
    std::vector<std::string> tokens;
    for (std::string t; ts >> t;) tokens.push_back(t);
    w.line("config", tokens);
  }
  w.line("encoder");
  netcore::write_net(w, c.sys.encoder);
  w.line("decoder");
  netcore::write_net(w, c.sys.decoder);
  w.line("cbf");
  netcore::write_net(w, c.sys.cbf_net);
  koopman::write_model(w, c.sys.model);
  write_spec(w, c.spec);
  w.line("cegis-status", {c.cegis.status});
  w.integer("cegis-rounds", c.cegis.rounds);
  std::vector<std::string> counts;
  for (int v : c.cegis.counterexamples_per_round) counts.push_back(std::to_string(v));
  w.line("cegis-counterexamples", counts);
  const auto& b = c.beta_inputs;
  w.reals("beta-inputs", {b.K_phi, b.K_F, b.K_psi, b.delta_fill, b.tau, b.mu, b.M});
  w.real("beta-bound", c.beta_bound);
  w.line("end-checkpoint");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, ckpt);
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

Checkpoint read_checkpoint(std::istream& in, std::vector<std::string>* warnings) {
  io::TextReader r(in);
  const long long version = r.integer("koopcbf-checkpoint");
  if (version != kCheckpointVersion) {
    throw ConfigError("unsupported checkpoint version " + std::to_string(version) + " (reader supports " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.build_tag = r.word("build");
  c.config_hash = r.word("config-hash");
  std::string cfg_text;
  while (r.peek_key() == "config") cfg_text += join(r.expect("config")) + "\n";
  std::istringstream cfg_in(cfg_text);
  c.config = parse_config(cfg_in, "checkpoint config");
  r.expect("encoder", 0);
  c.sys.encoder = netcore::read_net(r);
  r.expect("decoder", 0);
  c.sys.decoder = netcore::read_net(r);
  r.expect("cbf", 0);
  c.sys.cbf_net = netcore::read_net(r);
  c.sys.model = koopman::read_model(r);
  c.spec = read_spec(r);
  c.cegis.status = r.word("cegis-status");
  if (c.cegis.status != "Verified" && c.cegis.status != "MaxRoundsExceeded") {
    throw ParseError("line " + std::to_string(r.line_number()) + ": unknown cegis status");
  }
  c.cegis.rounds = static_cast<int>(r.integer("cegis-rounds"));
  const std::size_t line = r.line_number();
  for (const auto& t : r.expect("cegis-counterexamples")) {
    c.cegis.counterexamples_per_round.push_back(static_cast<int>(io::parse_int(t, line)));
  }
  const auto b = r.expect("beta-inputs", 7);
  const std::size_t bl = r.line_number() - 1;
  c.beta_inputs = {io::parse_real(b[0], bl), io::parse_real(b[1], bl), io::parse_real(b[2], bl),
                   io::parse_real(b[3], bl), io::parse_real(b[4], bl), io::parse_real(b[5], bl),
                   io::parse_real(b[6], bl)};
  c.beta_bound = r.real("beta-bound");
  r.expect("end-checkpoint", 0);
  try {
    c.sys.validate();
    c.spec.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("inconsistent checkpoint: ") + e.what());
  }
  if (warnings != nullptr && c.config_hash != config_hash(c.config)) {
    warnings->push_back("checkpoint config hash " + c.config_hash + " does not match its config (" +
                        config_hash(c.config) + ")");
  }
  return c;
}

Checkpoint load_checkpoint(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in, warnings);
}

bool same_checkpoint(const Checkpoint& a, const Checkpoint& b) {
  std::ostringstream sa, sb;
  write_checkpoint(sa, a);
  write_checkpoint(sb, b);
  return sa.str() == sb.str() && a.sys == b.sys;
}

}  // namespace koopcbf::cli
