#include "koopcbf/koopman/edmd.hpp"

#include <Eigen/Cholesky>

#include "koopcbf/errors.hpp"

namespace koopcbf::koopman {

namespace {

SnapshotPairs pairs_from(const plant::Dataset& data, const RealMatrix& lifted) {
  const auto idx = data.transition_pairs();
  const auto P = static_cast<Eigen::Index>(idx.size());
  SnapshotPairs out;
  out.z.resize(lifted.rows(), P);
  out.z_next.resize(lifted.rows(), P);
  out.u.resize(data.input_dim, P);
  for (Eigen::Index c = 0; c < P; ++c) {
    const auto [i, j] = idx[static_cast<std::size_t>(c)];
    out.z.col(c) = lifted.col(static_cast<Eigen::Index>(i));
    out.z_next.col(c) = lifted.col(static_cast<Eigen::Index>(j));
    out.u.col(c) = data.snapshots[i].u;
  }
  return out;
}

RealMatrix state_matrix(const plant::Dataset& data) {
  RealMatrix X(data.state_dim, static_cast<Eigen::Index>(data.size()));
  for (std::size_t k = 0; k < data.size(); ++k) X.col(static_cast<Eigen::Index>(k)) = data.snapshots[k].x;
  return X;
}

}  // namespace

SnapshotPairs build_pairs(const plant::Dataset& data, const netcore::FeedforwardNet& encoder) {
  if (encoder.in_dim() != data.state_dim) throw ShapeError("encoder input does not match dataset");
  return pairs_from(data, encoder.forward_batch(state_matrix(data)));
}

SnapshotPairs build_state_pairs(const plant::Dataset& data) {
  return pairs_from(data, state_matrix(data));
}

RealMatrix lifted_regressors(const RealMatrix& z, const RealMatrix& u) {
  if (z.cols() != u.cols()) throw ShapeError("lifted_regressors: z and u column counts differ");
  const Eigen::Index N = z.rows();
  const Eigen::Index m = u.rows();
  RealMatrix eta(N * (m + 1), z.cols());
  eta.topRows(N) = z;
  for (Eigen::Index i = 0; i < m; ++i) {
    eta.middleRows(N * (i + 1), N) = z.array().rowwise() * u.row(i).array();
  }
  return eta;
}

RealMatrix EdmdFit::stacked() const {
  RealMatrix M(Kd.rows(), Kd.cols() * static_cast<Eigen::Index>(D.size() + 1));
  M.leftCols(Kd.cols()) = Kd;
  for (std::size_t i = 0; i < D.size(); ++i) {
    M.middleCols(Kd.cols() * static_cast<Eigen::Index>(i + 1), Kd.cols()) = D[i];
  }
  return M;
}

EdmdFit edmd_fit(const SnapshotPairs& pairs, double ridge) {
  const Eigen::Index N = pairs.z.rows();
  const Eigen::Index m = pairs.u.rows();
  if (N == 0 || pairs.z_next.rows() != N || pairs.z_next.cols() != pairs.z.cols() ||
      pairs.u.cols() != pairs.z.cols()) {
    throw ShapeError("edmd_fit: inconsistent snapshot shapes");
  }
  if (pairs.count() == 0) throw RankDeficiencyError("edmd_fit: no snapshot pairs");
  if (!(ridge >= 0.0)) throw ConfigError("edmd_fit: ridge must be nonnegative");

  const RealMatrix eta = lifted_regressors(pairs.z, pairs.u);
  RealMatrix gram = eta * eta.transpose();
  gram.diagonal().array() += ridge;
  const RealMatrix rhs = eta * pairs.z_next.transpose();

  Eigen::LLT<RealMatrix> llt(gram);
  const double scale = gram.diagonal().maxCoeff();
  const bool singular = llt.info() != Eigen::Success || !(scale > 0.0) ||
                        llt.rcond() < 1e3 * std::numeric_limits<double>::epsilon();
  RealMatrix Mt;
  if (singular) {
    if (ridge == 0.0) {
      throw RankDeficiencyError("edmd_fit: eta eta^T is singular (" +
                                std::to_string(pairs.count()) + " pairs, " +
                                std::to_string(eta.rows()) + " regressors); use ridge > 0");
    }
    Mt = gram.completeOrthogonalDecomposition().solve(rhs);
  } else {
    Mt = llt.solve(rhs);
  }
  if (!all_finite(Mt)) throw NumericError("edmd_fit: non-finite solution");

  const RealMatrix M = Mt.transpose();
  EdmdFit fit;
  fit.Kd = M.leftCols(N);
  for (Eigen::Index i = 0; i < m; ++i) fit.D.push_back(M.middleCols(N * (i + 1), N));
  return fit;
}

double edmd_residual(const SnapshotPairs& pairs, const RealMatrix& stacked) {
  return (pairs.z_next - stacked * lifted_regressors(pairs.z, pairs.u)).norm();
}

}  // namespace koopcbf::koopman
