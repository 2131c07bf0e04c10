#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "koopcbf/errors.hpp"
#include "koopcbf/falsifier/enclosure.hpp"
#include "koopcbf/falsifier/falsifier.hpp"
#include "koopcbf/falsifier/interval.hpp"
#include "support/oracles.hpp"
#include "support/planted.hpp"

using namespace koopcbf;
using namespace koopcbf::falsifier;

namespace {

RealVector vec(std::initializer_list<double> v) {
  RealVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

Box random_box(int n, std::mt19937_64& rng, double extent, double max_width) {
  std::uniform_real_distribution<double> c(-extent, extent), w(0.0, max_width);
  RealVector lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    const double a = c(rng), b = w(rng);
    lo[i] = a - 0.5 * b;
    hi[i] = a + 0.5 * b;
  }
  return Box(lo, hi);
}

RealVector point_in(const Box& b, std::mt19937_64& rng) { return b.sample(rng); }

koopman::BilinearModel random_model(int N, std::mt19937_64& rng) {
  return koopman::BilinearModel::from_discrete(
      RealMatrix::Identity(N, N) + oracle::random_matrix(N, N, rng, -0.1, 0.1),
      {oracle::random_matrix(N, N, rng, -0.1, 0.1)}, 0.1);
}

koopman::LearnedSystem random_system(std::mt19937_64& rng) {
  return {oracle::random_net({3, 8, 8, 4}, rng), oracle::random_net({4, 3}, rng),
          oracle::random_net({4, 6, 6, 1}, rng), random_model(4, rng)};
}

}  // namespace

TEST_CASE("interval arithmetic") {
  const Interval a{-1, 2}, b{3, 4};
  CHECK((a + b).lo == 2);
  CHECK((a - b).hi == -1);
  CHECK((a * b).lo == -4);
  CHECK((a * b).hi == 8);
  CHECK(sqr(a).lo == 0);
  CHECK(sqr(a).hi == 4);
  CHECK((-2.0 * a).lo == -4);
  CHECK(intersect(a, Interval{1, 5}).lo == 1);
  CHECK(intersect(a, Interval{3, 5}).lo == a.lo);  // empty -> first argument

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-0.999, 0.999);
  for (int k = 0; k < 2000; ++k) {
    double x = d(rng), y = d(rng);
    const Interval t{std::min(x, y), std::max(x, y)};
    const Interval e = tanh_d2(t);
    const Interval e1 = tanh_d1(t);
    for (int j = 0; j <= 20; ++j) {
      const double s = std::clamp(t.lo + (t.hi - t.lo) * j / 20.0, t.lo, t.hi);
      CHECK(e.contains(tanh_d2(s)));
      CHECK(e1.contains(tanh_d1(s)));
    }
  }
}

TEST_CASE("interval_forward examples") {
  const auto lin = oracle::affine_net(RealMatrix{{1, -1}});
  const IntervalVector r = interval_forward(lin, Box(vec({0, 0}), vec({1, 1})));
  CHECK(r[0].lo == -1);
  CHECK(r[0].hi == 1);

  const netcore::FeedforwardNet t({netcore::DenseLayer{RealMatrix::Ones(1, 1), RealVector::Zero(1)},
                                   netcore::DenseLayer{RealMatrix::Ones(1, 1), RealVector::Zero(1)}});
  const IntervalVector r2 = interval_forward(t, Box(vec({0}), vec({1})));
  CHECK(r2[0].lo == 0.0);
  CHECK(r2[0].hi == doctest::Approx(0.761594).epsilon(1e-6));

  std::mt19937_64 rng(2);
  const auto net = oracle::random_net({3, 7, 2}, rng);
  const RealVector x = oracle::random_vector(3, rng);
  const IntervalVector r3 = interval_forward(net, Box(x, x));
  const RealVector y = net.forward(x);
  for (int i = 0; i < 2; ++i) {
    CHECK(r3[static_cast<std::size_t>(i)].width() == 0.0);
    CHECK(r3[static_cast<std::size_t>(i)].lo == doctest::Approx(y[i]).epsilon(1e-14));
  }
}

TEST_CASE("second-order jet matches finite differences") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = oracle::random_net({4, 6, 5, 1}, rng);
    const RealVector z = oracle::random_vector(4, rng);
    const auto jet = jet_forward(net, seed_identity(std::vector<double>(z.data(), z.data() + 4), true), true);
    const RealMatrix J = netcore::input_jacobian(net, z);
    const RealMatrix H = oracle::central_jacobian(
        [&](const RealVector& p) -> RealVector { return netcore::input_jacobian(net, p).row(0).transpose(); }, z);
    for (int a = 0; a < 4; ++a) {
      CHECK(jet.d(0, a) == doctest::Approx(J(0, a)).epsilon(1e-12));
      for (int b = 0; b < 4; ++b) CHECK(oracle::rel_err(jet.dd(0, a, b), H(a, b)) < 1e-6);
    }
  }
}

TEST_CASE("enclosure soundness on random boxes") {
  std::mt19937_64 rng(4);
  const double lambda = 0.8;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto sys = random_system(rng);
    const Box box = random_box(3, rng, 2.0, trial % 2 ? 0.5 : 2.0);
    const IntervalVector zf = interval_forward(sys.encoder, box);
    const IntervalVector jac = interval_jacobian(sys.encoder, box);
    const BoxAnalysis lie(sys, box, lambda, true);
    const BoxAnalysis bar(sys, box, lambda, false);
    const RealVector u = oracle::random_vector(1, rng);
    const Interval e = lie.lie(u);
    for (int k = 0; k < 100; ++k, ++checked) {
      const RealVector x = point_in(box, rng);
      const RealVector z = sys.encoder.forward(x);
      const RealMatrix J = netcore::input_jacobian(sys.encoder, x);
      for (int i = 0; i < 4; ++i) {
        CHECK(zf[static_cast<std::size_t>(i)].contains(z[i]));
        CHECK(lie.lifted()[static_cast<std::size_t>(i)].contains(z[i]));
        for (int j = 0; j < 3; ++j) CHECK(jac[static_cast<std::size_t>(i * 3 + j)].contains(J(i, j)));
      }
      const double h = koopman::barrier_value(sys, x);
      CHECK(bar.barrier().contains(h));
      CHECK(lie.barrier().contains(h));
      CHECK(e.contains(koopman::lie_expression(sys, x, u, lambda)));
    }
  }
  CHECK(checked == 10000);
}

TEST_CASE("interval_lie on point boxes and zero networks") {
  std::mt19937_64 rng(5);
  const auto sys = random_system(rng);
  const RealVector x = oracle::random_vector(3, rng);
  const RealVector u = oracle::random_vector(1, rng);
  const Interval e = interval_lie(sys, Box(x, x), u, 0.5);
  const double exact = koopman::lie_expression(sys, x, u, 0.5);
  CHECK(std::abs(e.lo - exact) < 1e-12);
  CHECK(std::abs(e.hi - exact) < 1e-12);

  koopman::LearnedSystem zero = sys;
  for (auto* net : {&zero.encoder, &zero.cbf_net}) {
    for (std::size_t l = 0; l < net->num_layers(); ++l) {
      net->layer(l).weight.setZero();
      net->layer(l).bias.setZero();
    }
  }
  zero.cbf_net.layer(zero.cbf_net.num_layers() - 1).bias[0] = 0.3;
  const Interval ez = interval_lie(zero, Box(vec({-1, -1, -1}), vec({1, 1, 1})), u, 2.0);
  CHECK(ez.lo == doctest::Approx(0.6));
  CHECK(ez.hi == doctest::Approx(0.6));
}

TEST_CASE("violation bounds cover concrete margins") {
  std::mt19937_64 rng(6);
  auto spec = planted::spec();
  spec.safe_margin = 0.3;
  for (int trial = 0; trial < 30; ++trial) {
    const auto sys = random_system(rng);
    const Box box = random_box(3, rng, 2.0, 1.0);
    for (Clause c : {Clause::SafeSign, Clause::UnsafeSign, Clause::LieDerivative}) {
      const auto ub = violation_bound(sys, spec, c, box);
      for (int k = 0; k < 50; ++k) {
        const RealVector x = point_in(box, rng);
        const bool in = c == Clause::SafeSign     ? spec.in_safe_set(x)
                        : c == Clause::UnsafeSign ? spec.in_unsafe_set(x)
                                                  : true;
        if (!in) continue;
        const double m = clause_margin(sys, spec, c, x);
        if (ub) {
          CHECK(m <= *ub + 1e-12);
        } else {
          CHECK_FALSE(violates(c, m));
        }
      }
    }
  }
}

TEST_CASE("constant positive barrier violates the unsafe clause") {
  auto sys = planted::system();
  for (std::size_t l = 0; l < sys.cbf_net.num_layers(); ++l) {
    sys.cbf_net.layer(l).weight.setZero();
    sys.cbf_net.layer(l).bias.setZero();
  }
  sys.cbf_net.layer(1).bias[0] = 1.0;
  std::vector<Counterexample> out;
  const ClauseStats st = falsify_clause(sys, planted::spec(), Clause::UnsafeSign, {}, out);
  CHECK_FALSE(st.unsat);
  REQUIRE(out.size() == 1);
  CHECK(out[0].clause == Clause::UnsafeSign);
  CHECK(out[0].margin == doctest::Approx(1.0));
  CHECK(planted::spec().in_unsafe_set(out[0].point));
}

TEST_CASE("planted barrier signs hold on a grid") {
  const auto sys = planted::system();
  const auto spec = planted::spec();
  for (double x = -5; x <= 5; x += 0.05) {
    for (double y = -5; y <= 5; y += 0.05) {
      for (double th : {-3.14159, 0.0, 3.14159}) {
        const RealVector p = vec({x, y, th});
        const double h = koopman::barrier_value(sys, p);
        if (spec.in_safe_set(p)) CHECK(h > 0.5);
        if (spec.in_unsafe_set(p)) CHECK(h < -0.5);
      }
    }
  }
}

TEST_CASE("planted barrier is verified and stays verified under refinement") {
  const auto sys = planted::system();
  const FalsifierResult coarse = falsify(sys, planted::spec(0.1));
  CHECK(coarse.unsat);
  CHECK(coarse.counterexamples.empty());
  const FalsifierResult fine = falsify(sys, planted::spec(0.01));
  CHECK(fine.unsat);
  MESSAGE("planted instance boxes: " << coarse.total_boxes() << " / " << fine.total_boxes());
}

TEST_CASE("corrupted barriers yield sound counterexamples") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(1.0, 5.0);
  FalsifierOptions opts;
  opts.max_counterexamples = 3;
  for (int trial = 0; trial < 20; ++trial) {
    planted::Params p;
    p.bias_shift = (trial % 2 ? 1.0 : -1.0) * mag(rng);
    const auto sys = planted::system(p);
    const auto spec = planted::spec();
    const FalsifierResult r = falsify(sys, spec, opts);
    CHECK_FALSE(r.unsat);
    REQUIRE_FALSE(r.counterexamples.empty());
    for (const auto& c : r.counterexamples) {
      const double m = clause_margin(sys, spec, c.clause, c.point);
      CHECK(m == c.margin);
      CHECK(m > 0.0);
    }
  }
}

TEST_CASE("sign flip inside the obstacle is caught") {
  planted::Params p;
  auto sys = planted::system(p);
  // Negating every output weight and the bias flips h everywhere.
  sys.cbf_net.layer(1).weight *= -1.0;
  sys.cbf_net.layer(1).bias *= -1.0;
  const auto spec = planted::spec();
  std::vector<Counterexample> out;
  falsify_clause(sys, spec, Clause::UnsafeSign, {}, out);
  REQUIRE(out.size() == 1);
  CHECK(spec.in_unsafe_set(out[0].point));
  CHECK(koopman::barrier_value(sys, out[0].point) >= 0.0);
}

TEST_CASE("refinement never turns a counterexample into unsat") {
  planted::Params p;
  p.bias_shift = 1.5;
  const auto sys = planted::system(p);
  for (double db : {0.1, 0.05, 0.02, 0.01}) CHECK_FALSE(falsify(sys, planted::spec(db)).unsat);
}

TEST_CASE("work limit raises a resource error") {
  const auto sys = planted::system();
  FalsifierOptions opts;
  opts.max_boxes = 10;
  CHECK_THROWS_AS(falsify(sys, planted::spec(), opts), ResourceError);
}

TEST_CASE("classify appends to the matching set") {
  const auto spec = planted::spec();
  plant::Dataset d;
  classify({vec({3, 3, 0}), Clause::SafeSign, 0.1}, spec, d);
  CHECK(d.labeled_safe.size() == 1);
  classify({vec({0.1, 0, 0}), Clause::UnsafeSign, 0.1}, spec, d);
  CHECK(d.labeled_unsafe.size() == 1);
  classify({vec({0.5, 2, 0}), Clause::LieDerivative, 0.1}, spec, d);
  CHECK(d.labeled_interior.size() == 10);
  CHECK_THROWS_AS(classify({vec({0.1, 0, 0}), Clause::SafeSign, 0.1}, spec, d), StateError);
}

TEST_CASE("candidate input grid and report") {
  const auto u = grid_inputs(Box(vec({-1}), vec({1})), 10);
  REQUIRE(u.size() == 10);
  CHECK(u.front()[0] == -1.0);
  CHECK(u.back()[0] == 1.0);
  CHECK(u[1][0] == doctest::Approx(-7.0 / 9.0));
  CHECK(grid_inputs(Box(vec({-1, 0}), vec({1, 1})), 3).size() == 9);

  planted::Params p;
  p.bias_shift = 2.0;
  const auto r = falsify(planted::system(p), planted::spec());
  const auto j = nlohmann::json::parse(falsifier_report_json(r));
  CHECK(j["result"] == "sat");
  CHECK(j["clauses"].size() == 3);
  CHECK(j["counterexamples"][0]["clause"] == "UnsafeSign");
}
