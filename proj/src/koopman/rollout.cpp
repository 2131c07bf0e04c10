#include "koopcbf/koopman/rollout.hpp"

namespace koopcbf::koopman {

RealVector lift(const netcore::FeedforwardNet& encoder, const RealVector& x) {
  return encoder.forward(x);
}

RealVector decode(const netcore::FeedforwardNet& decoder, const RealVector& z) {
  return decoder.forward(z);
}

std::vector<RealVector> rollout(const BilinearModel& model, const netcore::FeedforwardNet& encoder,
                                const netcore::FeedforwardNet& decoder, const RealVector& x0,
                                const std::vector<RealVector>& inputs) {
  if (encoder.out_dim() != model.lifted_dim() || decoder.in_dim() != model.lifted_dim()) {
    throw ShapeError("rollout: encoder/decoder do not match the model's lifted dimension");
  }
  return rollout(
      model, [&](const RealVector& x) { return encoder.forward(x); },
      [&](const RealVector& z) { return decoder.forward(z); }, x0, inputs);
}

}  // namespace koopcbf::koopman
