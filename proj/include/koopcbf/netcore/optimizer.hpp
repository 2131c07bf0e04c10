#pragma once

#include <cstdint>

#include "koopcbf/netcore/network.hpp"

namespace koopcbf::netcore {

enum class OptimizerKind { Adam, Sgd };

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  OptimizerSettings settings;
  ParamGrads first_moment;
  ParamGrads second_moment;
  std::int64_t step = 0;

  static OptimizerState for_net(const FeedforwardNet& net, OptimizerSettings settings = {});
};

// Gradient-descent update of `net` in place. A non-finite gradient leaves
// both the net and the state untouched and throws NumericError.
void optimizer_step(OptimizerState& state, FeedforwardNet& net, const ParamGrads& grads);

}  // namespace koopcbf::netcore
