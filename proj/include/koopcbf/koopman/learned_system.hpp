#pragma once

#include "koopcbf/koopman/bilinear.hpp"
#include "koopcbf/netcore/network.hpp"

namespace koopcbf::koopman {

// Encoder Phi, decoder Phi^-1, barrier head h_net and the lifted model.
// The barrier on states is h(x) = h_net(Phi(x)).
struct LearnedSystem {
  netcore::FeedforwardNet encoder;
  netcore::FeedforwardNet decoder;
  netcore::FeedforwardNet cbf_net;
  BilinearModel model;

  int state_dim() const { return encoder.in_dim(); }
  int lifted_dim() const { return encoder.out_dim(); }
  int input_dim() const { return model.input_dim(); }

  // Throws ShapeError unless encoder out = decoder in = cbf in = N,
  // decoder out = encoder in and cbf out = 1.
  void validate() const;

  friend bool operator==(const LearnedSystem&, const LearnedSystem&) = default;
};

// Pointwise barrier quantities at one state.
struct BarrierPoint {
  RealVector z;       // Phi(x)
  double h = 0.0;     // h_net(z)
  RealVector grad_z;  // dh/dz
  double drift = 0.0;       // grad_z . K z + lambda h
  RealVector control;       // a_i = grad_z . C_i z
};

BarrierPoint barrier_point(const LearnedSystem& sys, const RealVector& x, double lambda);

double barrier_value(const LearnedSystem& sys, const RealVector& x);

// grad_z h . psi(z, u) + lambda h, the lifted CBF constraint expression.
double lie_expression(const BarrierPoint& p, const RealVector& u);
double lie_expression(const LearnedSystem& sys, const RealVector& x, const RealVector& u,
                      double lambda);

}  // namespace koopcbf::koopman
