#include "koopcbf/falsifier/falsifier.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>

#include "json.hpp"
#include "koopcbf/errors.hpp"
#include "koopcbf/falsifier/enclosure.hpp"

namespace koopcbf::falsifier {

std::string to_string(Clause c) {
  switch (c) {
    case Clause::SafeSign: return "SafeSign";
    case Clause::UnsafeSign: return "UnsafeSign";
    case Clause::LieDerivative: return "LieDerivative";
  }
  return "?";
}

double clause_margin(const koopman::LearnedSystem& sys, const SafetySpec& spec, Clause clause,
                     const RealVector& x) {
  switch (clause) {
    case Clause::SafeSign: return -koopman::barrier_value(sys, x);
    case Clause::UnsafeSign: return koopman::barrier_value(sys, x);
    case Clause::LieDerivative: {
      const koopman::BarrierPoint p = koopman::barrier_point(sys, x, spec.lambda);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& u : spec.candidate_inputs) best = std::max(best, koopman::lie_expression(p, u));
      return spec.beta - best;
    }
  }
  return 0.0;
}

bool violates(Clause clause, double margin) {
  return clause == Clause::UnsafeSign ? margin >= 0.0 : margin > 0.0;
}

std::uint64_t FalsifierResult::total_boxes() const {
  std::uint64_t n = 0;
  for (const auto& s : stats) n += s.boxes;
  return n;
}

namespace {

Interval center_distance_sq(const SafetySpec& spec, const Box& box) {
  const Interval dx = Interval(box.lo(0), box.hi(0)) - Interval(spec.obstacle_center[0]);
  const Interval dy = Interval(box.lo(1), box.hi(1)) - Interval(spec.obstacle_center[1]);
  return sqr(dx) + sqr(dy);
}

bool may_intersect_region(const SafetySpec& spec, Clause clause, const Box& box) {
  switch (clause) {
    case Clause::SafeSign: return center_distance_sq(spec, box).hi >= sqr(spec.safe_radius());
    case Clause::UnsafeSign: return center_distance_sq(spec, box).lo <= sqr(spec.obstacle_radius);
    case Clause::LieDerivative: return true;
  }
  return true;
}

bool in_region(const SafetySpec& spec, Clause clause, const RealVector& x) {
  switch (clause) {
    case Clause::SafeSign: return spec.in_safe_set(x);
    case Clause::UnsafeSign: return spec.in_unsafe_set(x);
    case Clause::LieDerivative: return spec.state_box.contains(x);
  }
  return false;
}

// Box center, or its radial projection onto the region boundary when the
// center itself lies outside the clause's region.
std::optional<RealVector> representative(const SafetySpec& spec, Clause clause, const Box& box) {
  RealVector p = box.center();
  if (in_region(spec, clause, p)) return p;
  if (clause == Clause::LieDerivative) return std::nullopt;
  const double d = spec.center_distance(p);
  if (!(d > 0.0)) return std::nullopt;
  const double target = clause == Clause::SafeSign ? spec.safe_radius() : spec.obstacle_radius;
  for (int i = 0; i < 2; ++i) {
    p[i] = spec.obstacle_center[i] + (p[i] - spec.obstacle_center[i]) * (target / d);
  }
  if (!box.contains(p) || !in_region(spec, clause, p)) return std::nullopt;
  return p;
}

}  // namespace

std::optional<double> violation_bound(const koopman::LearnedSystem& sys, const SafetySpec& spec,
                                      Clause clause, const Box& box) {
  if (!may_intersect_region(spec, clause, box)) return std::nullopt;
  switch (clause) {
    case Clause::SafeSign: {
      const double ub = -BoxAnalysis(sys, box, spec.lambda, false).barrier().lo;
      if (ub <= 0.0) return std::nullopt;
      return ub;
    }
    case Clause::UnsafeSign: {
      const double ub = BoxAnalysis(sys, box, spec.lambda, false).barrier().hi;
      if (ub < 0.0) return std::nullopt;
      return ub;
    }
    case Clause::LieDerivative: {
      const BoxAnalysis a(sys, box, spec.lambda, true);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& u : spec.candidate_inputs) {
        best = std::max(best, a.lie(u).lo);
        if (best >= spec.beta) return std::nullopt;
      }
      return spec.beta - best;
    }
  }
  return std::nullopt;
}

namespace {

struct Work {
  Box box;
  double bound;
  int depth;
  std::uint64_t seq;
};

struct WorkOrder {
  bool operator()(const Work& a, const Work& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.seq > b.seq;
  }
};

std::pair<Box, Box> bisect(const Box& box) {
  Eigen::Index dim = 0;
  box.widths().maxCoeff(&dim);
  const double mid = 0.5 * (box.lo(static_cast<int>(dim)) + box.hi(static_cast<int>(dim)));
  RealVector hi_left = box.hi();
  RealVector lo_right = box.lo();
  hi_left[dim] = mid;
  lo_right[dim] = mid;
  return {Box(box.lo(), hi_left), Box(lo_right, box.hi())};
}

}  // namespace

ClauseStats falsify_clause(const koopman::LearnedSystem& sys, const SafetySpec& spec, Clause clause,
                           const FalsifierOptions& opts, std::vector<Counterexample>& out) {
  sys.validate();
  spec.validate();
  if (spec.state_box.dim() != sys.state_dim()) throw ShapeError("falsify: state box dimension mismatch");
  if (spec.candidate_inputs.front().size() != sys.input_dim()) {
    throw ShapeError("falsify: candidate input dimension mismatch");
  }
  const auto t0 = std::chrono::steady_clock::now();
  ClauseStats stats;
  stats.clause = clause;
  int found = 0;
  Box deepest = spec.state_box;

  std::priority_queue<Work, std::vector<Work>, WorkOrder> queue;
  std::uint64_t seq = 0;
  // A child's bound is capped by its parent's, which is sound because the
  // child box is a subset.
  auto consider = [&](Box box, int depth, double parent_bound) {
    if (++stats.boxes > opts.max_boxes) {
      throw ResourceError("falsifier exceeded " + std::to_string(opts.max_boxes) + " boxes on clause " +
                          to_string(clause) + "; deepest box (depth " + std::to_string(stats.max_depth) +
                          "): " + deepest.to_string());
    }
    if (depth > stats.max_depth) {
      stats.max_depth = depth;
      deepest = box;
    }
    if (auto ub = violation_bound(sys, spec, clause, box)) {
      queue.push(Work{std::move(box), std::min(*ub, parent_bound), depth, seq++});
    }
  };

  consider(spec.state_box, 0, std::numeric_limits<double>::infinity());
  while (!queue.empty()) {
    Work w = queue.top();
    queue.pop();
    if (auto p = representative(spec, clause, w.box)) {
      const double m = clause_margin(sys, spec, clause, *p);
      if (violates(clause, m)) {
        out.push_back(Counterexample{*p, clause, m});
        stats.unsat = false;
        if (++found >= opts.max_counterexamples) break;
        continue;
      }
    }
    if (w.box.max_width() < spec.delta_box) {
      ++stats.discarded;
      continue;
    }
    auto [a, b] = bisect(w.box);
    consider(std::move(a), w.depth + 1, w.bound);
    consider(std::move(b), w.depth + 1, w.bound);
  }
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

FalsifierResult falsify(const koopman::LearnedSystem& sys, const SafetySpec& spec,
                        const FalsifierOptions& opts) {
  FalsifierResult r;
  for (Clause c : {Clause::SafeSign, Clause::UnsafeSign, Clause::LieDerivative}) {
    r.stats.push_back(falsify_clause(sys, spec, c, opts, r.counterexamples));
    r.unsat = r.unsat && r.stats.back().unsat;
  }
  return r;
}

void classify(const Counterexample& cex, const SafetySpec& spec, plant::Dataset& data) {
  if (!in_region(spec, cex.clause, cex.point)) {
    throw StateError("counterexample " + to_string(cex.clause) + " lies outside its region");
  }
  switch (cex.clause) {
    case Clause::SafeSign: data.labeled_safe.push_back(cex.point); break;
    case Clause::UnsafeSign: data.labeled_unsafe.push_back(cex.point); break;
    case Clause::LieDerivative:
      for (const auto& u : spec.candidate_inputs) data.labeled_interior.push_back({cex.point, u});
      break;
  }
}

std::string falsifier_report_json(const FalsifierResult& result) {
  nlohmann::ordered_json j;
  j["result"] = result.unsat ? "unsat" : "sat";
  j["boxes_explored"] = result.total_boxes();
  auto& clauses = j["clauses"] = nlohmann::ordered_json::array();
  for (const auto& s : result.stats) {
    clauses.push_back({{"clause", to_string(s.clause)},
                       {"result", s.unsat ? "unsat" : "sat"},
                       {"boxes", s.boxes},
                       {"discarded", s.discarded},
                       {"max_depth", s.max_depth},
                       {"wall_seconds", s.seconds}});
  }
  auto& cexs = j["counterexamples"] = nlohmann::ordered_json::array();
  for (const auto& c : result.counterexamples) {
    cexs.push_back({{"clause", to_string(c.clause)},
                    {"point", std::vector<double>(c.point.data(), c.point.data() + c.point.size())},
                    {"margin", c.margin}});
  }
  return j.dump(2);
}

}  // namespace koopcbf::falsifier
