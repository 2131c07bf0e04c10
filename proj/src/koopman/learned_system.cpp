#include "koopcbf/koopman/learned_system.hpp"

#include "koopcbf/errors.hpp"

namespace koopcbf::koopman {

void LearnedSystem::validate() const {
  if (encoder.empty() || decoder.empty() || cbf_net.empty() || model.empty()) {
    throw ShapeError("learned system has an empty component");
  }
  const int N = encoder.out_dim();
  if (decoder.in_dim() != N || cbf_net.in_dim() != N || model.lifted_dim() != N) {
    throw ShapeError("learned system: lifted dimensions disagree");
  }
  if (decoder.out_dim() != encoder.in_dim()) throw ShapeError("learned system: decoder output != n");
  if (cbf_net.out_dim() != 1) throw ShapeError("learned system: barrier net must be scalar");
}

BarrierPoint barrier_point(const LearnedSystem& sys, const RealVector& x, double lambda) {
  BarrierPoint p;
  p.z = sys.encoder.forward(x);
  p.h = sys.cbf_net.forward(p.z)[0];
  p.grad_z = netcore::input_jacobian(sys.cbf_net, p.z).row(0).transpose();
  p.drift = p.grad_z.dot(sys.model.K() * p.z) + lambda * p.h;
  p.control.resize(sys.input_dim());
  for (int i = 0; i < sys.input_dim(); ++i) p.control[i] = p.grad_z.dot(sys.model.C(i) * p.z);
  return p;
}

double barrier_value(const LearnedSystem& sys, const RealVector& x) {
  return sys.cbf_net.forward(sys.encoder.forward(x))[0];
}

double lie_expression(const BarrierPoint& p, const RealVector& u) {
  if (u.size() != p.control.size()) throw ShapeError("lie_expression: input dimension mismatch");
  return p.drift + p.control.dot(u);
}

double lie_expression(const LearnedSystem& sys, const RealVector& x, const RealVector& u,
                      double lambda) {
  return lie_expression(barrier_point(sys, x, lambda), u);
}

}  // namespace koopcbf::koopman
