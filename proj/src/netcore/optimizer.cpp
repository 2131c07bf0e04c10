#include "koopcbf/netcore/optimizer.hpp"

#include <cmath>

#include "koopcbf/errors.hpp"

namespace koopcbf::netcore {

OptimizerState OptimizerState::for_net(const FeedforwardNet& net, OptimizerSettings settings) {
  OptimizerState s;
  s.settings = settings;
  s.first_moment = ParamGrads::zeros_like(net);
  s.second_moment = ParamGrads::zeros_like(net);
  return s;
}

namespace {

template <class Param, class Grad>
void adam_update(Param& p, const Grad& g, Grad& m, Grad& v, const OptimizerSettings& s,
                 double bias1, double bias2) {
  m = s.beta1 * m + (1.0 - s.beta1) * g;
  v = s.beta2 * v.array() + (1.0 - s.beta2) * g.array().square();
  const auto m_hat = m.array() / bias1;
  const auto v_hat = v.array() / bias2;
  p.array() -= s.learning_rate * m_hat / (v_hat.sqrt() + s.epsilon);
}

}  // namespace

void optimizer_step(OptimizerState& state, FeedforwardNet& net, const ParamGrads& grads) {
  if (grads.weight.size() != net.num_layers() || state.first_moment.weight.size() != net.num_layers()) {
    throw ShapeError("optimizer_step: gradient/state layout does not match the network");
  }
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const auto& l = net.layer(i);
    if (grads.weight[i].rows() != l.weight.rows() || grads.weight[i].cols() != l.weight.cols() ||
        grads.bias[i].size() != l.bias.size()) {
      throw ShapeError("optimizer_step: gradient shape mismatch in layer " + std::to_string(i));
    }
  }
  if (!grads.all_finite()) throw NumericError("optimizer_step: non-finite gradient rejected");

  const auto& s = state.settings;
  if (s.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < net.num_layers(); ++i) {
      net.layer(i).weight -= s.learning_rate * grads.weight[i];
      net.layer(i).bias -= s.learning_rate * grads.bias[i];
    }
    ++state.step;
    return;
  }

  ++state.step;
  const double bias1 = 1.0 - std::pow(s.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(s.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    adam_update(net.layer(i).weight, grads.weight[i], state.first_moment.weight[i],
                state.second_moment.weight[i], s, bias1, bias2);
    adam_update(net.layer(i).bias, grads.bias[i], state.first_moment.bias[i],
                state.second_moment.bias[i], s, bias1, bias2);
  }
}

}  // namespace koopcbf::netcore
