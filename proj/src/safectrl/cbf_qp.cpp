#include "koopcbf/safectrl/cbf_qp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "koopcbf/errors.hpp"

namespace koopcbf::safectrl {

QpProblem make_qp(const koopman::BarrierPoint& p, const RealVector& u_nom, const Box& input_box) {
  return QpProblem{u_nom, p.control, p.drift, input_box};
}

double constraint_value(const QpProblem& qp, const RealVector& u) { return qp.a.dot(u) + qp.b; }

RealVector constraint_maximizer(const QpProblem& qp) {
  RealVector u(qp.a.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const int d = static_cast<int>(i);
    if (qp.a[i] > 0.0) {
      u[i] = qp.input_box.hi(d);
    } else if (qp.a[i] < 0.0) {
      u[i] = qp.input_box.lo(d);
    } else {
      u[i] = std::clamp(qp.u_nom[i], qp.input_box.lo(d), qp.input_box.hi(d));
    }
  }
  return u;
}

namespace {

RealVector clip(const QpProblem& qp, const RealVector& v) {
  return v.cwiseMax(qp.input_box.lo()).cwiseMin(qp.input_box.hi());
}

}  // namespace

RealVector cbf_qp(const QpProblem& qp) {
  const Eigen::Index m = qp.u_nom.size();
  if (m == 0 || qp.a.size() != m || qp.input_box.dim() != m) throw ShapeError("cbf_qp: dimension mismatch");
  if (!qp.u_nom.allFinite() || !qp.a.allFinite() || !std::isfinite(qp.b)) {
    throw NumericError("cbf_qp: non-finite problem data");
  }
  const RealVector u0 = clip(qp, qp.u_nom);
  if (constraint_value(qp, u0) >= 0.0) return u0;

  const double best = constraint_value(qp, constraint_maximizer(qp));
  if (best < 0.0) {
    throw InfeasibleError("CBF-QP infeasible: max constraint value " + std::to_string(best), best);
  }

  // phi(nu) = a . clip(u_nom + nu a) + b is nondecreasing and piecewise linear.
  std::vector<double> knots{0.0};
  for (Eigen::Index i = 0; i < m; ++i) {
    if (qp.a[i] == 0.0) continue;
    for (double bound : {qp.input_box.lo(static_cast<int>(i)), qp.input_box.hi(static_cast<int>(i))}) {
      const double nu = (bound - qp.u_nom[i]) / qp.a[i];
      if (nu > 0.0) knots.push_back(nu);
    }
  }
  std::sort(knots.begin(), knots.end());
  auto phi = [&](double nu) { return constraint_value(qp, clip(qp, qp.u_nom + nu * qp.a)); };

  double lo = knots.front();
  double phi_lo = phi(lo);
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const double hi = knots[k];
    const double phi_hi = phi(hi);
    if (phi_hi >= 0.0) {
      const double nu = phi_hi > phi_lo ? lo + (hi - lo) * (-phi_lo) / (phi_hi - phi_lo) : hi;
      return clip(qp, qp.u_nom + nu * qp.a);
    }
    lo = hi;
    phi_lo = phi_hi;
  }
  // Past the last knot every component with a_i != 0 is saturated.
  return constraint_maximizer(qp);
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

RealVector nominal_controller(const RealVector& x, const RealVector& goal, double gain,
                              const Box& input_box) {
  if (x.size() < 3 || goal.size() != 2) throw ShapeError("nominal_controller: expects (x, y, theta) and 2-D goal");
  const double bearing = std::atan2(goal[0] - x[0], goal[1] - x[1]);
  RealVector u = RealVector::Constant(input_box.dim(), gain * wrap_angle(bearing - x[2]));
  return u.cwiseMax(input_box.lo()).cwiseMin(input_box.hi());
}

}  // namespace koopcbf::safectrl
