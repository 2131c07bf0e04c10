#include "koopcbf/plant/plant.hpp"

#include <algorithm>
#include <cmath>

#include "koopcbf/errors.hpp"

namespace koopcbf::plant {

RealVector diffdrive_field(const RealVector& x, const RealVector& u, const DiffDriveParams& p) {
  if (x.size() != 3 || u.size() != 1) throw ShapeError("diff-drive expects x in R^3 and u in R^1");
  RealVector dx(3);
  dx << p.wheel_radius * std::sin(x[2]), p.wheel_radius * std::cos(x[2]),
      (p.wheel_radius / p.wheel_separation) * u[0];
  return dx;
}

double diffdrive_lipschitz(const DiffDriveParams& p) {
  return std::max(p.wheel_radius, p.wheel_radius / p.wheel_separation);
}

PlantModel::PlantModel(int n, int m, VectorField field, Box state_box, Box input_box,
                       double lipschitz)
    : n_(n),
      m_(m),
      field_(std::move(field)),
      state_box_(std::move(state_box)),
      input_box_(std::move(input_box)),
      lipschitz_(lipschitz) {
  if (n_ <= 0 || m_ <= 0) throw ConfigError("plant dimensions must be positive");
  if (state_box_.dim() != n_ || input_box_.dim() != m_) {
    throw ConfigError("plant boxes do not match the state/input dimensions");
  }
  if (!(lipschitz_ > 0.0)) throw ConfigError("plant Lipschitz constant must be positive");
  if (!field_) throw ConfigError("plant vector field is empty");
}

RealVector PlantModel::field(const RealVector& x, const RealVector& u) const {
  if (x.size() != n_ || u.size() != m_) throw ShapeError("plant field: dimension mismatch");
  return field_(x, u);
}

PlantModel make_diffdrive(const DiffDriveParams& p, Box state_box, Box input_box) {
  if (!(p.wheel_radius > 0.0) || !(p.wheel_separation > 0.0)) {
    throw ConfigError("diff-drive wheel radius and separation must be positive");
  }
  return PlantModel(
      3, 1, [p](const RealVector& x, const RealVector& u) { return diffdrive_field(x, u, p); },
      std::move(state_box), std::move(input_box), diffdrive_lipschitz(p));
}

RealVector rk4_step(const PlantModel& plant, const RealVector& x, const RealVector& u, double dt) {
  if (!(dt > 0.0)) throw ConfigError("rk4_step: dt must be positive");
  const RealVector k1 = plant.field(x, u);
  const RealVector k2 = plant.field(x + 0.5 * dt * k1, u);
  const RealVector k3 = plant.field(x + 0.5 * dt * k2, u);
  const RealVector k4 = plant.field(x + dt * k3, u);
  RealVector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw IntegrationError("rk4_step: non-finite state");
  return next;
}

}  // namespace koopcbf::plant
