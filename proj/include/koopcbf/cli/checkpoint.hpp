#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "koopcbf/cli/config.hpp"
#include "koopcbf/koopman/learned_system.hpp"
#include "koopcbf/safectrl/barrier_math.hpp"

namespace koopcbf::cli {

constexpr int kCheckpointVersion = 1;

// git-describe style tag baked in at configure time.
std::string build_tag();

struct CegisSummary {
  std::string status = "MaxRoundsExceeded";
  int rounds = 0;
  std::vector<int> counterexamples_per_round;

  bool verified() const { return status == "Verified"; }
  friend bool operator==(const CegisSummary&, const CegisSummary&) = default;
};

struct Checkpoint {
  std::string build_tag;
  std::string config_hash;
  ExperimentConfig config;
  koopman::LearnedSystem sys;
  falsifier::SafetySpec spec;
  CegisSummary cegis;
  safectrl::BetaInputs beta_inputs;
  double beta_bound = 0.0;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// ParseError on malformed or truncated input, ConfigError on an
// unsupported version. A stored config hash that does not match the
// embedded config adds a line to `warnings`.
Checkpoint read_checkpoint(std::istream& in, std::vector<std::string>* warnings = nullptr);
Checkpoint load_checkpoint(const std::string& path, std::vector<std::string>* warnings = nullptr);

bool same_checkpoint(const Checkpoint& a, const Checkpoint& b);

}  // namespace koopcbf::cli
