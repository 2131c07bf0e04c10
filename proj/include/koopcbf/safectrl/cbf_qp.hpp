#pragma once

#include <string>

#include "koopcbf/box.hpp"
#include "koopcbf/koopman/learned_system.hpp"

namespace koopcbf::safectrl {

// min ||u - u_nom||^2  s.t.  a . u + b >= 0,  u in U.
struct QpProblem {
  RealVector u_nom;
  RealVector a;
  double b = 0.0;
  Box input_box;
};

// Constraint row of the lifted CBF condition at x:
//   a_i = grad_z h . C_i z,  b = grad_z h . K z + lambda h.
QpProblem make_qp(const koopman::BarrierPoint& p, const RealVector& u_nom, const Box& input_box);

// Exact minimizer. The solution has the form clip(u_nom + nu a) with nu >= 0;
// nu is found by scanning the breakpoints of the piecewise-linear constraint
// value. Throws InfeasibleError when max over U of a . u + b < 0.
RealVector cbf_qp(const QpProblem& qp);

// argmax over U of a . u (the best-effort input for infeasible problems).
RealVector constraint_maximizer(const QpProblem& qp);

double constraint_value(const QpProblem& qp, const RealVector& u);

// omega = gain * wrap(atan2(dx, dy) - theta), wrapped to (-pi, pi] and clipped to U.
RealVector nominal_controller(const RealVector& x, const RealVector& goal, double gain,
                              const Box& input_box);

double wrap_angle(double a);

}  // namespace koopcbf::safectrl
