#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "koopcbf/falsifier/safety_spec.hpp"
#include "koopcbf/koopman/learned_system.hpp"
#include "koopcbf/plant/dataset.hpp"

namespace koopcbf::falsifier {

enum class Clause { SafeSign, UnsafeSign, LieDerivative };

std::string to_string(Clause c);

struct Counterexample {
  RealVector point;
  Clause clause = Clause::SafeSign;
  // SafeSign: -h(x); UnsafeSign: h(x); LieDerivative: beta - max_u (grad_z h . psi + lambda h).
  double margin = 0.0;
};

// Concrete violation margin of `clause` at x. A point violates the clause
// when the margin is > 0 (>= 0 for UnsafeSign).
double clause_margin(const koopman::LearnedSystem& sys, const SafetySpec& spec, Clause clause,
                     const RealVector& x);
bool violates(Clause clause, double margin);

// Upper bound of the clause's violation margin over the box from interval
// enclosures; nullopt when the box is pruned (no violation possible or the
// box misses the clause's region).
std::optional<double> violation_bound(const koopman::LearnedSystem& sys, const SafetySpec& spec,
                                      Clause clause, const Box& box);

struct FalsifierOptions {
  std::uint64_t max_boxes = 10'000'000;
  int max_counterexamples = 1;  // per clause
};

struct ClauseStats {
  Clause clause = Clause::SafeSign;
  std::uint64_t boxes = 0;
  std::uint64_t discarded = 0;  // boxes below delta_box dropped by delta-weakening
  int max_depth = 0;
  double seconds = 0.0;
  bool unsat = true;
};

struct FalsifierResult {
  bool unsat = true;
  std::vector<Counterexample> counterexamples;
  std::vector<ClauseStats> stats;

  std::uint64_t total_boxes() const;
};

// Branch-and-prune search of each clause family. Unsat iff every clause
// search ends with all boxes pruned or discarded.
FalsifierResult falsify(const koopman::LearnedSystem& sys, const SafetySpec& spec,
                        const FalsifierOptions& opts = {});

// Search a single clause family.
ClauseStats falsify_clause(const koopman::LearnedSystem& sys, const SafetySpec& spec, Clause clause,
                           const FalsifierOptions& opts, std::vector<Counterexample>& out);

// Appends the counterexample to the matching labelled set; LieDerivative
// points are paired with every candidate input. Throws StateError if the
// point lies outside the clause's region.
void classify(const Counterexample& cex, const SafetySpec& spec, plant::Dataset& data);

std::string falsifier_report_json(const FalsifierResult& result);

}  // namespace koopcbf::falsifier
