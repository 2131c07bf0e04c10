#pragma once

#include <functional>

#include "koopcbf/box.hpp"
#include "koopcbf/linalg.hpp"

namespace koopcbf::plant {

// x_dot = F(x, u)
using VectorField = std::function<RealVector(const RealVector& x, const RealVector& u)>;

struct DiffDriveParams {
  double wheel_radius = 0.1;      // m
  double wheel_separation = 0.1;  // m
};

// State (x, y, theta), input (omega):
//   x_dot = r sin(theta), y_dot = r cos(theta), theta_dot = (r / L) omega.
RealVector diffdrive_field(const RealVector& x, const RealVector& u, const DiffDriveParams& p);

// Supremum of the Jacobian spectral norm of the diff-drive field over any
// state/input box: the columns d/dtheta and d/domega are orthogonal with
// norms r and r/L.
double diffdrive_lipschitz(const DiffDriveParams& p);

// Ground-truth dynamics. Learning code never sees this type; it only
// consumes Datasets generated from it.
class PlantModel {
 public:
  PlantModel(int n, int m, VectorField field, Box state_box, Box input_box, double lipschitz);

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  const Box& state_box() const { return state_box_; }
  const Box& input_box() const { return input_box_; }
  double lipschitz() const { return lipschitz_; }

  RealVector field(const RealVector& x, const RealVector& u) const;

 private:
  int n_;
  int m_;
  VectorField field_;
  Box state_box_;
  Box input_box_;
  double lipschitz_;
};

PlantModel make_diffdrive(const DiffDriveParams& p, Box state_box, Box input_box);

// Classical fourth-order Runge-Kutta step with u held constant over [0, dt].
RealVector rk4_step(const PlantModel& plant, const RealVector& x, const RealVector& u, double dt);

}  // namespace koopcbf::plant
