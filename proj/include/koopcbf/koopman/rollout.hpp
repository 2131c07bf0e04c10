#pragma once

#include <string>
#include <vector>

#include "koopcbf/errors.hpp"
#include "koopcbf/koopman/bilinear.hpp"
#include "koopcbf/netcore/network.hpp"

namespace koopcbf::koopman {

constexpr double kDivergenceNorm = 1e6;

RealVector lift(const netcore::FeedforwardNet& encoder, const RealVector& x);
RealVector decode(const netcore::FeedforwardNet& decoder, const RealVector& z);

// z_0 = lift(x0), z_{k+1} = bilinear_step(z_k, u_k), returns decode(z_k)
// for k = 0..inputs.size().
template <class Lift, class Decode>
std::vector<RealVector> rollout(const BilinearModel& model, Lift&& lift_fn, Decode&& decode_fn,
                                const RealVector& x0, const std::vector<RealVector>& inputs) {
  std::vector<RealVector> xs;
  xs.reserve(inputs.size() + 1);
  RealVector z = lift_fn(x0);
  if (z.size() != model.lifted_dim()) throw ShapeError("rollout: lifted dimension mismatch");
  xs.push_back(decode_fn(z));
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    z = bilinear_step(model, z, inputs[k]);
    if (!z.allFinite() || z.norm() > kDivergenceNorm) {
      throw InstabilityError("rollout diverged at step " + std::to_string(k + 1));
    }
    xs.push_back(decode_fn(z));
  }
  return xs;
}

std::vector<RealVector> rollout(const BilinearModel& model, const netcore::FeedforwardNet& encoder,
                                const netcore::FeedforwardNet& decoder, const RealVector& x0,
                                const std::vector<RealVector>& inputs);

}  // namespace koopcbf::koopman
