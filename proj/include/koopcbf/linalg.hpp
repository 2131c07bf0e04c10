#pragma once

#include <Eigen/Dense>

namespace koopcbf {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline bool all_finite(const RealMatrix& m) { return m.allFinite(); }

}  // namespace koopcbf
