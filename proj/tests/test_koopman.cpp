#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "koopcbf/errors.hpp"
#include "koopcbf/koopman/bilinear.hpp"
#include "koopcbf/koopman/edmd.hpp"
#include "koopcbf/koopman/learned_system.hpp"
#include "koopcbf/koopman/rollout.hpp"
#include "koopcbf/netcore/spectral.hpp"
#include "koopcbf/plant/dataset.hpp"
#include "support/oracles.hpp"

using namespace koopcbf;
using namespace koopcbf::koopman;

namespace {

RealMatrix mat1(double v) { return RealMatrix::Constant(1, 1, v); }

BilinearModel random_model(int N, int m, std::mt19937_64& rng, double dt = 0.1) {
  std::vector<RealMatrix> D;
  for (int i = 0; i < m; ++i) D.push_back(oracle::random_matrix(N, N, rng, -0.2, 0.2));
  return BilinearModel::from_discrete(
      RealMatrix::Identity(N, N) + oracle::random_matrix(N, N, rng, -0.2, 0.2), D, dt);
}

// Pairs generated exactly by `model` from random (z, u).
SnapshotPairs synth_pairs(const BilinearModel& model, int P, std::mt19937_64& rng) {
  SnapshotPairs s;
  s.z = oracle::random_matrix(model.lifted_dim(), P, rng);
  s.u = oracle::random_matrix(model.input_dim(), P, rng);
  s.z_next.resize(model.lifted_dim(), P);
  for (int k = 0; k < P; ++k) s.z_next.col(k) = bilinear_step(model, s.z.col(k), s.u.col(k));
  return s;
}

RealMatrix padded_identity(int N, int n) { return RealMatrix::Identity(N, n); }

}  // namespace

TEST_CASE("lift and decode with linear nets") {
  const auto enc = oracle::affine_net(padded_identity(5, 3));
  RealVector x(3);
  x << 1, 2, 3;
  const RealVector z = lift(enc, x);
  REQUIRE(z.size() == 5);
  CHECK(z[0] == 1);
  CHECK(z[1] == 2);
  CHECK(z[2] == 3);
  CHECK(z[3] == 0);
  CHECK(z[4] == 0);
  CHECK(lift(enc, x) == z);
  const auto dec = oracle::affine_net(padded_identity(3, 5));
  CHECK(decode(dec, z) == x);
  const auto zero = oracle::affine_net(RealMatrix::Zero(3, 5));
  CHECK(decode(zero, z) == RealVector::Zero(3));
  CHECK_THROWS_AS(lift(enc, RealVector::Zero(2)), ShapeError);
}

TEST_CASE("lift obeys the spectral-normalization Lipschitz bound") {
  std::mt19937_64 rng(5);
  auto enc = oracle::random_net({3, 32, 32, 5}, rng);
  netcore::spectral_normalize(enc, 2.0);
  const RealVector z0 = enc.forward(RealVector::Zero(3));
  for (int k = 0; k < 200; ++k) {
    const RealVector x = oracle::random_vector(3, rng, -5, 5);
    CHECK(lift(enc, x).norm() <= 2.0 * x.norm() + z0.norm() + 1e-9);
  }
}

TEST_CASE("bilinear model algebraic consistency") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const BilinearModel a = random_model(4, 2, rng, 0.05);
    CHECK((a.Kd() - (a.K() * a.dt() + RealMatrix::Identity(4, 4))).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < 2; ++i) CHECK((a.D(i) - a.C(i) * a.dt()).cwiseAbs().maxCoeff() < 1e-12);
    const BilinearModel b = BilinearModel::from_continuous(a.K(), a.C(), a.dt());
    CHECK((b.Kd() - a.Kd()).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(BilinearModel::from_discrete(RealMatrix::Identity(2, 3), {}, 0.1), ShapeError);
  CHECK_THROWS_AS(BilinearModel::from_discrete(RealMatrix::Identity(2, 2), {}, 0.0), ConfigError);
  CHECK_THROWS_AS(
      BilinearModel::from_discrete(RealMatrix::Identity(2, 2), {RealMatrix::Identity(3, 3)}, 0.1),
      ShapeError);
}

TEST_CASE("psi_continuous and bilinear_step examples") {
  std::mt19937_64 rng(9);
  const BilinearModel r = random_model(3, 1, rng);
  const RealVector z = oracle::random_vector(3, rng);
  CHECK(psi_continuous(r, z, RealVector::Zero(1)).isApprox(r.K() * z, 1e-14));
  CHECK(bilinear_step(r, z, RealVector::Zero(1)).isApprox(r.Kd() * z, 1e-14));

  const BilinearModel m = BilinearModel::from_continuous(RealMatrix::Zero(2, 2), {RealMatrix::Identity(2, 2)}, 0.1);
  const RealVector dz = psi_continuous(m, RealVector::Ones(2), RealVector::Constant(1, 2.0));
  CHECK(dz[0] == 2.0);
  CHECK(dz[1] == 2.0);

  const BilinearModel id = BilinearModel::from_discrete(RealMatrix::Identity(3, 3), {RealMatrix::Zero(3, 3)}, 0.1);
  CHECK(bilinear_step(id, z, RealVector::Constant(1, 0.7)) == z);

  for (int trial = 0; trial < 50; ++trial) {
    const BilinearModel q = random_model(5, 2, rng, 0.02);
    const RealVector zz = oracle::random_vector(5, rng);
    const RealVector u = oracle::random_vector(2, rng);
    const RealVector fd = (bilinear_step(q, zz, u) - zz) / q.dt();
    CHECK((psi_continuous(q, zz, u) - fd).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(psi_continuous(r, RealVector::Zero(2), RealVector::Zero(1)), ShapeError);
  CHECK_THROWS_AS(bilinear_step(BilinearModel{}, z, RealVector::Zero(1)), StateError);
}

TEST_CASE("edmd scalar autonomous example") {
  SnapshotPairs s;
  s.z.resize(1, 2);
  s.z << 1, 2;
  s.z_next.resize(1, 2);
  s.z_next << 2, 4;
  s.u.resize(0, 2);
  const EdmdFit fit = edmd_fit(s, 0.0);
  CHECK(fit.D.empty());
  CHECK(fit.Kd(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("edmd recovers an exactly bilinear system") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const BilinearModel truth = random_model(2, 1, rng);
    const SnapshotPairs s = synth_pairs(truth, 50, rng);
    const EdmdFit fit = edmd_fit(s, 0.0);
    CHECK((fit.Kd - truth.Kd()).norm() < 1e-8);
    CHECK((fit.D[0] - truth.D(0)).norm() < 1e-8);
    const EdmdFit ridged = edmd_fit(s);
    CHECK((ridged.stacked() - fit.stacked()).norm() < 1e-6);
  }
}

TEST_CASE("edmd degenerate and rank-deficient data") {
  SnapshotPairs s;
  s.z = RealMatrix::Ones(2, 10);
  s.z_next = RealMatrix::Ones(2, 10);
  s.u = RealMatrix::Zero(1, 10);
  EdmdFit fit;
  REQUIRE_NOTHROW(fit = edmd_fit(s, 1e-8));
  CHECK(edmd_residual(s, fit.stacked()) < 1e-6);
  CHECK_THROWS_AS(edmd_fit(s, 0.0), RankDeficiencyError);
  CHECK_THROWS_AS(edmd_fit(s, -1.0), ConfigError);
}

TEST_CASE("edmd fit is a least-squares minimizer") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    SnapshotPairs s;
    s.z = oracle::random_matrix(4, 80, rng);
    s.u = oracle::random_matrix(2, 80, rng);
    s.z_next = oracle::random_matrix(4, 80, rng);
    const RealMatrix M = edmd_fit(s, 0.0).stacked();
    const double base = edmd_residual(s, M);
    for (int k = 0; k < 10; ++k) {
      RealMatrix dM = oracle::random_matrix(M.rows(), M.cols(), rng);
      dM *= 1e-3 / dM.norm();
      CHECK(edmd_residual(s, M + dM) >= base);
    }
  }
}

TEST_CASE("snapshot pairs never straddle trajectories") {
  plant::Dataset d;
  d.state_dim = 1;
  d.input_dim = 1;
  d.dt = 0.1;
  // traj 0: 0,1,2   traj 1: 10,11
  for (int k = 0; k < 3; ++k) d.snapshots.push_back({RealVector::Constant(1, k), RealVector::Constant(1, 0.5), 0, k});
  for (int k = 0; k < 2; ++k) d.snapshots.push_back({RealVector::Constant(1, 10 + k), RealVector::Constant(1, -0.5), 1, k});
  const SnapshotPairs s = build_state_pairs(d);
  REQUIRE(s.count() == 3);
  for (Eigen::Index c = 0; c < s.count(); ++c) CHECK(s.z_next(0, c) - s.z(0, c) == 1.0);
  CHECK(s.u(0, 2) == -0.5);

  const auto enc = oracle::affine_net(RealMatrix::Constant(2, 1, 2.0));
  const SnapshotPairs e = build_pairs(d, enc);
  CHECK(e.z.rows() == 2);
  CHECK(e.z(1, 2) == 20.0);
}

TEST_CASE("rollout") {
  std::mt19937_64 rng(19);
  const auto enc = oracle::affine_net(RealMatrix::Identity(2, 2));
  const BilinearModel truth = random_model(2, 1, rng);
  const RealVector x0 = oracle::random_vector(2, rng);

  const auto empty = rollout(truth, enc, enc, x0, {});
  REQUIRE(empty.size() == 1);
  CHECK(empty[0] == x0);

  std::vector<RealVector> us;
  for (int k = 0; k < 20; ++k) us.push_back(oracle::random_vector(1, rng));
  const auto xs = rollout(truth, enc, enc, x0, us);
  RealVector x = x0;
  for (int k = 0; k < 20; ++k) {
    x = truth.Kd() * x + us[k][0] * (truth.D(0) * x);
    CHECK((xs[k + 1] - x).norm() < 1e-10);
  }

  const BilinearModel unstable = BilinearModel::from_discrete(RealMatrix::Identity(2, 2) * 10.0, {RealMatrix::Zero(2, 2)}, 0.1);
  std::vector<RealVector> many(20, RealVector::Zero(1));
  CHECK_THROWS_AS(rollout(unstable, enc, enc, RealVector::Ones(2), many), InstabilityError);
}

TEST_CASE("model checkpoint round-trip") {
  std::mt19937_64 rng(23);
  const BilinearModel m = random_model(5, 2, rng, 0.1);
  std::stringstream ss;
  io::TextWriter w(ss);
  write_model(w, m);
  io::TextReader r(ss);
  const BilinearModel back = read_model(r);
  CHECK(back.Kd() == m.Kd());
  CHECK(back.D() == m.D());
  CHECK(back.dt() == m.dt());

  std::stringstream bad("koopcbf-model 2\n");
  io::TextReader rb(bad);
  CHECK_THROWS_AS(read_model(rb), ParseError);

  std::string text = ss.str();
  std::stringstream trunc(text.substr(0, text.size() / 2));
  io::TextReader rt(trunc);
  CHECK_THROWS_AS(read_model(rt), ParseError);
}

TEST_CASE("barrier point matches finite differences") {
  std::mt19937_64 rng(29);
  LearnedSystem sys{oracle::random_net({3, 8, 4}, rng), oracle::random_net({4, 8, 3}, rng),
                    oracle::random_net({4, 6, 1}, rng), random_model(4, 1, rng)};
  REQUIRE_NOTHROW(sys.validate());
  const double lambda = 0.7;
  for (int k = 0; k < 20; ++k) {
    const RealVector x = oracle::random_vector(3, rng, -2, 2);
    const BarrierPoint p = barrier_point(sys, x, lambda);
    const RealVector g = oracle::central_gradient(
        [&](const RealVector& z) { return sys.cbf_net.forward(z)[0]; }, p.z);
    CHECK(oracle::max_rel_err(p.grad_z, g) < 1e-6);
    const RealVector u = oracle::random_vector(1, rng);
    const double expect = g.dot(psi_continuous(sys.model, p.z, u)) + lambda * p.h;
    CHECK(lie_expression(sys, x, u, lambda) == doctest::Approx(expect).epsilon(1e-6));
    CHECK(barrier_value(sys, x) == p.h);
  }
  LearnedSystem bad = sys;
  bad.cbf_net = oracle::random_net({4, 2}, rng);
  CHECK_THROWS_AS(bad.validate(), ShapeError);
}
