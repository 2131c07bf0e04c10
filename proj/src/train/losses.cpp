#include "koopcbf/train/losses.hpp"

#include <algorithm>
#include <limits>

#include "koopcbf/errors.hpp"
#include "koopcbf/koopman/edmd.hpp"

namespace koopcbf::train {

void LossWeights::validate() const {
  if (!(dyn >= 0.0) || !(recons >= 0.0) || !(barr >= 0.0)) {
    throw ConfigError("loss weights must be nonnegative");
  }
  if (dyn == 0.0 && recons == 0.0 && barr == 0.0) throw ConfigError("loss weights are all zero");
}

double loss_dyn(const koopman::LearnedSystem& sys, const plant::Dataset& data) {
  const koopman::SnapshotPairs p = koopman::build_pairs(data, sys.encoder);
  double total = 0.0;
  for (Eigen::Index c = 0; c < p.count(); ++c) {
    total += (p.z_next.col(c) - koopman::bilinear_step(sys.model, p.z.col(c), p.u.col(c))).squaredNorm();
  }
  return total;
}

double loss_recons(const koopman::LearnedSystem& sys, const plant::Dataset& data) {
  double total = 0.0;
  for (const auto& s : data.snapshots) {
    total += (s.x - sys.decoder.forward(sys.encoder.forward(s.x))).squaredNorm();
  }
  return total;
}

std::vector<RealVector> interior_states(const plant::Dataset& data,
                                        const std::vector<RealVector>& extra_interior) {
  std::vector<RealVector> out;
  out.reserve(data.size() + data.labeled_interior.size() + extra_interior.size());
  for (const auto& s : data.snapshots) out.push_back(s.x);
  for (std::size_t k = 0; k < data.labeled_interior.size(); ++k) {
    const auto& x = data.labeled_interior[k].x;
    if (k > 0 && data.labeled_interior[k - 1].x == x) continue;
    out.push_back(x);
  }
  out.insert(out.end(), extra_interior.begin(), extra_interior.end());
  return out;
}

BarrierLoss loss_barr(const koopman::LearnedSystem& sys, const plant::Dataset& data,
                      const std::vector<RealVector>& extra_interior,
                      const falsifier::SafetySpec& spec, const BarrierLossOptions& opts) {
  BarrierLoss L;
  for (const auto& x : data.labeled_safe) {
    L.safe += std::max(0.0, opts.class_margin - koopman::barrier_value(sys, x));
  }
  if (!data.labeled_safe.empty()) L.safe /= static_cast<double>(data.labeled_safe.size());
  for (const auto& x : data.labeled_unsafe) {
    L.unsafe += std::max(0.0, koopman::barrier_value(sys, x) + opts.class_margin);
  }
  if (!data.labeled_unsafe.empty()) L.unsafe /= static_cast<double>(data.labeled_unsafe.size());
  const auto interior = interior_states(data, extra_interior);
  for (const auto& x : interior) {
    const koopman::BarrierPoint p = koopman::barrier_point(sys, x, spec.lambda);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& u : spec.candidate_inputs) best = std::max(best, koopman::lie_expression(p, u));
    L.lie += std::max(0.0, opts.lie_threshold - best);
  }
  if (!interior.empty()) L.lie /= static_cast<double>(interior.size());
  return L;
}

}  // namespace koopcbf::train
