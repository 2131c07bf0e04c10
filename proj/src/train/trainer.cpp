#include "koopcbf/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "koopcbf/errors.hpp"
#include "koopcbf/io/text_format.hpp"
#include "koopcbf/koopman/edmd.hpp"
#include "koopcbf/netcore/spectral.hpp"

namespace koopcbf::train {

using netcore::FeedforwardNet;

void TrainOptions::validate() const {
  weights.validate();
  if (!(lipschitz_target > 0.0)) throw ConfigError("lipschitz target must be positive");
  if (!(ridge >= 0.0)) throw ConfigError("ridge must be nonnegative");
  if (!(class_margin >= 0.0) || !(lie_margin >= 0.0)) throw ConfigError("training margins must be >= 0");
  if (max_epochs_per_round < 0) throw ConfigError("epoch cap must be >= 0");
  if (plateau_window < 1 || !(plateau_tol >= 0.0)) throw ConfigError("invalid plateau criterion");
  if (initial_safe_samples < 0 || initial_unsafe_samples < 0 || interior_samples < 0) {
    throw ConfigError("sample counts must be >= 0");
  }
  if (counterexample_neighbors < 0 || !(neighbor_radius >= 0.0)) {
    throw ConfigError("counterexample neighborhood must be nonnegative");
  }
  if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
}

namespace {

std::vector<int> dims_of(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> d{in};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(out);
  return d;
}

// Rejection sampling inside X with a geometric predicate.
template <class Pred>
std::vector<RealVector> sample_region(const Box& X, int count, std::mt19937_64& rng, Pred pred) {
  std::vector<RealVector> out;
  long long tries = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++tries > 1000LL * (count + 1)) throw ConfigError("region too small to sample");
    RealVector x = X.sample(rng);
    if (pred(x)) out.push_back(std::move(x));
  }
  return out;
}

// Deterministic per-purpose seeds derived from the master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  std::uint64_t out[1];
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out[0];
}

RealMatrix states_matrix(const std::vector<RealVector>& xs, int n) {
  RealMatrix X(n, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t k = 0; k < xs.size(); ++k) X.col(static_cast<Eigen::Index>(k)) = xs[k];
  return X;
}

}  // namespace

TrainState make_train_state(koopman::LearnedSystem sys, plant::Dataset data, const TrainOptions& opts) {
  opts.validate();
  sys.validate();
  TrainState s;
  s.sys = std::move(sys);
  s.data = std::move(data);
  s.opts = opts;
  s.encoder_opt = netcore::OptimizerState::for_net(s.sys.encoder, opts.optimizer);
  s.decoder_opt = netcore::OptimizerState::for_net(s.sys.decoder, opts.optimizer);
  s.cbf_opt = netcore::OptimizerState::for_net(s.sys.cbf_net, opts.optimizer);
  return s;
}

TrainState make_train_state(plant::Dataset data, const falsifier::SafetySpec& spec,
                            const NetShapes& shapes, int lifted_dim, const TrainOptions& opts) {
  opts.validate();
  spec.validate();
  if (lifted_dim < 1) throw ConfigError("lifted dimension must be >= 1");
  if (data.size() == 0) throw ConfigError("training dataset is empty");
  const int n = data.state_dim;
  koopman::LearnedSystem sys;
  const auto enc_dims = dims_of(n, shapes.encoder_hidden, lifted_dim);
  const auto dec_dims = dims_of(lifted_dim, shapes.decoder_hidden, n);
  const auto cbf_dims = dims_of(lifted_dim, shapes.cbf_hidden, 1);
  sys.encoder = FeedforwardNet::glorot(enc_dims, derive_seed(opts.seed, 1));
  sys.decoder = FeedforwardNet::glorot(dec_dims, derive_seed(opts.seed, 2));
  sys.cbf_net = FeedforwardNet::glorot(cbf_dims, derive_seed(opts.seed, 3));
  netcore::spectral_normalize(sys.encoder, opts.lipschitz_target);

  std::mt19937_64 rng(derive_seed(opts.seed, 4));
  auto safe = sample_region(spec.state_box, opts.initial_safe_samples, rng,
                            [&](const RealVector& x) { return spec.in_safe_set(x); });
  auto unsafe = sample_region(spec.state_box, opts.initial_unsafe_samples, rng,
                              [&](const RealVector& x) { return spec.in_unsafe_set(x); });
  data.labeled_safe.insert(data.labeled_safe.end(), safe.begin(), safe.end());
  data.labeled_unsafe.insert(data.labeled_unsafe.end(), unsafe.begin(), unsafe.end());

  const koopman::SnapshotPairs pairs = koopman::build_pairs(data, sys.encoder);
  const koopman::EdmdFit fit = koopman::edmd_fit(pairs, opts.ridge);
  sys.model = koopman::BilinearModel::from_discrete(fit.Kd, fit.D, data.dt);
  return make_train_state(std::move(sys), std::move(data), opts);
}

void refit_model(TrainState& state) {
  const koopman::SnapshotPairs pairs = koopman::build_pairs(state.data, state.sys.encoder);
  const koopman::EdmdFit fit = koopman::edmd_fit(pairs, state.opts.ridge);
  state.sys.model = koopman::BilinearModel::from_discrete(fit.Kd, fit.D, state.data.dt);
}

BarrierLossOptions training_barrier_options(const TrainState& state, const falsifier::SafetySpec& spec) {
  return {state.opts.class_margin, spec.beta + state.opts.lie_margin};
}

LossGradients loss_gradients(const koopman::LearnedSystem& sys, const plant::Dataset& data,
                             const std::vector<RealVector>& extra_interior,
                             const falsifier::SafetySpec& spec, const LossWeights& w,
                             const BarrierLossOptions& bo) {
  const int n = data.state_dim;
  const int N = sys.lifted_dim();
  const int m = data.input_dim;
  const auto& model = sys.model;

  std::vector<RealVector> xs;
  xs.reserve(data.size());
  for (const auto& s : data.snapshots) xs.push_back(s.x);
  const RealMatrix X = states_matrix(xs, n);
  const netcore::ForwardCache enc_cache = netcore::forward_cached(sys.encoder, X);
  const RealMatrix& Z = enc_cache.output();

  LossGradients out;
  LossRecord& rec = out.record;
  RealMatrix GZ = RealMatrix::Zero(N, Z.cols());

  // Dynamics residuals.
  for (const auto& [i, j] : data.transition_pairs()) {
    const auto ci = static_cast<Eigen::Index>(i);
    const auto cj = static_cast<Eigen::Index>(j);
    RealMatrix M = model.Kd();
    for (int l = 0; l < m; ++l) M += data.snapshots[i].u[l] * model.D(l);
    const RealVector r = Z.col(cj) - M * Z.col(ci);
    rec.dyn += r.squaredNorm();
    GZ.col(cj) += 2.0 * w.dyn * r;
    GZ.col(ci) -= 2.0 * w.dyn * (M.transpose() * r);
  }

  // Reconstruction.
  const netcore::ForwardCache dec_cache = netcore::forward_cached(sys.decoder, Z);
  const RealMatrix E = X - dec_cache.output();
  rec.recons = E.squaredNorm();
  netcore::Backprop dec_bp = netcore::grad_params(sys.decoder, -2.0 * w.recons * E, dec_cache);
  GZ += dec_bp.input_grad;
  out.decoder = std::move(dec_bp.params);

  // Barrier terms.
  const auto interior = interior_states(data, extra_interior);
  const std::size_t ns = data.labeled_safe.size();
  const std::size_t nu = data.labeled_unsafe.size();
  std::vector<RealVector> sign_pts = data.labeled_safe;
  sign_pts.insert(sign_pts.end(), data.labeled_unsafe.begin(), data.labeled_unsafe.end());

  out.cbf = netcore::ParamGrads::zeros_like(sys.cbf_net);
  out.encoder = X.cols() > 0 ? netcore::grad_params(sys.encoder, GZ, enc_cache).params
                             : netcore::ParamGrads::zeros_like(sys.encoder);

  if (!sign_pts.empty()) {
    const RealMatrix Xs = states_matrix(sign_pts, n);
    const netcore::ForwardCache ec = netcore::forward_cached(sys.encoder, Xs);
    const netcore::ForwardCache hc = netcore::forward_cached(sys.cbf_net, ec.output());
    RealMatrix gh = RealMatrix::Zero(1, Xs.cols());
    for (Eigen::Index c = 0; c < Xs.cols(); ++c) {
      const double h = hc.output()(0, c);
      if (static_cast<std::size_t>(c) < ns) {
        const double v = bo.class_margin - h;
        if (v > 0.0) {
          rec.barr += v / static_cast<double>(ns);
          gh(0, c) = -w.barr / static_cast<double>(ns);
        }
      } else {
        const double v = h + bo.class_margin;
        if (v > 0.0) {
          rec.barr += v / static_cast<double>(nu);
          gh(0, c) = w.barr / static_cast<double>(nu);
        }
      }
    }
    const netcore::Backprop hb = netcore::grad_params(sys.cbf_net, gh, hc);
    out.cbf += hb.params;
    out.encoder += netcore::grad_params(sys.encoder, hb.input_grad, ec).params;
  }

  if (!interior.empty()) {
    const RealMatrix Xi = states_matrix(interior, n);
    const netcore::ForwardCache ec = netcore::forward_cached(sys.encoder, Xi);
    const RealMatrix& Zi = ec.output();
    const auto cols = Zi.cols();
    // e(u) = hdot(K z) + sum_l u_l hdot(C_l z) + lambda h is affine in u.
    const netcore::TangentCache tk = netcore::forward_tangent(sys.cbf_net, Zi, model.K() * Zi);
    std::vector<RealMatrix> hdot_c;
    for (int l = 0; l < m; ++l) {
      hdot_c.push_back(netcore::forward_tangent(sys.cbf_net, Zi, model.C(l) * Zi).output_tangent());
    }
    std::vector<std::size_t> choice(static_cast<std::size_t>(cols), 0);
    for (Eigen::Index c = 0; c < cols; ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < spec.candidate_inputs.size(); ++q) {
        const RealVector& u = spec.candidate_inputs[q];
        double e = tk.output_tangent()(0, c) + spec.lambda * tk.output()(0, c);
        for (int l = 0; l < m; ++l) e += u[l] * hdot_c[static_cast<std::size_t>(l)](0, c);
        if (e > best) {
          best = e;
          choice[static_cast<std::size_t>(c)] = q;
        }
      }
    }
    RealMatrix V(N, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      V.col(c) = model.generator(spec.candidate_inputs[choice[static_cast<std::size_t>(c)]]) * Zi.col(c);
    }
    const netcore::TangentCache tc = netcore::forward_tangent(sys.cbf_net, Zi, V);
    RealMatrix gdot = RealMatrix::Zero(1, cols);
    const double scale = w.barr / static_cast<double>(cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double e = tc.output_tangent()(0, c) + spec.lambda * tc.output()(0, c);
      const double v = bo.lie_threshold - e;
      if (v > 0.0) {
        rec.barr += v / static_cast<double>(cols);
        gdot(0, c) = -scale;
      }
    }
    const netcore::TangentBackprop tb = netcore::grad_tangent(sys.cbf_net, spec.lambda * gdot, gdot, tc);
    out.cbf += tb.params;
    RealMatrix gz = tb.input_grad;
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (gdot(0, c) == 0.0) continue;
      const RealMatrix A = model.generator(spec.candidate_inputs[choice[static_cast<std::size_t>(c)]]);
      gz.col(c) += A.transpose() * tb.tangent_grad.col(c);
    }
    out.encoder += netcore::grad_params(sys.encoder, gz, ec).params;
  }

  rec.total = w.dyn * rec.dyn + w.recons * rec.recons + w.barr * rec.barr;
  return out;
}

LossRecord train_epoch(TrainState& state, const falsifier::SafetySpec& spec) {
  auto& sys = state.sys;
  refit_model(state);
  LossGradients g = loss_gradients(sys, state.data, state.interior, spec, state.opts.weights,
                                   training_barrier_options(state, spec));
  LossRecord rec = g.record;
  rec.round = state.round;
  rec.epoch = state.epoch;
  if (!std::isfinite(rec.total)) {
    throw NumericError("train_epoch: non-finite loss at round " + std::to_string(state.round) + " epoch " +
                       std::to_string(state.epoch) + " (dyn " + std::to_string(rec.dyn) + ", recons " +
                       std::to_string(rec.recons) + ", barr " + std::to_string(rec.barr) + ")");
  }

  // (2) gradient step, (3) spectral normalization.
  netcore::optimizer_step(state.encoder_opt, sys.encoder, g.encoder);
  netcore::optimizer_step(state.decoder_opt, sys.decoder, g.decoder);
  netcore::optimizer_step(state.cbf_opt, sys.cbf_net, g.cbf);
  netcore::spectral_normalize(sys.encoder, state.opts.lipschitz_target);

  state.history.push_back(rec);
  ++state.epoch;
  return rec;
}

int train_round(TrainState& state, const falsifier::SafetySpec& spec) {
  const int cap = state.opts.max_epochs_per_round;
  if (cap == 0) return 0;
  const std::size_t start = state.history.size();
  int epochs = 0;
  for (; epochs < cap; ++epochs) {
    train_epoch(state, spec);
    const std::size_t k = state.history.size() - 1;
    const auto window = static_cast<std::size_t>(state.opts.plateau_window);
    if (k - start >= window) {
      const double prev = state.history[k - window].total;
      const double cur = state.history[k].total;
      if (std::abs(cur - prev) <= state.opts.plateau_tol * std::abs(prev)) {
        ++epochs;
        break;
      }
    }
  }
  refit_model(state);
  return epochs;
}

namespace {

// Labels jittered copies of a counterexample that stay in the clause's region.
void add_neighbors(const falsifier::Counterexample& c, const falsifier::SafetySpec& spec, TrainState& state,
                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-state.opts.neighbor_radius, state.opts.neighbor_radius);
  const Box& X = spec.state_box;
  for (int k = 0; k < state.opts.counterexample_neighbors; ++k) {
    falsifier::Counterexample n = c;
    for (Eigen::Index i = 0; i < n.point.size(); ++i) {
      n.point[i] = std::clamp(n.point[i] + jitter(rng), X.lo(i), X.hi(i));
    }
    const bool in_region = c.clause == falsifier::Clause::SafeSign     ? spec.in_safe_set(n.point)
                           : c.clause == falsifier::Clause::UnsafeSign ? spec.in_unsafe_set(n.point)
                                                                       : true;
    if (in_region) falsifier::classify(n, spec, state.data);
  }
}

}  // namespace

std::string to_string(CegisStatus s) {
  return s == CegisStatus::Verified ? "Verified" : "MaxRoundsExceeded";
}

CegisReport cegis(TrainState& state, const falsifier::SafetySpec& spec, const CegisOptions& opts) {
  if (opts.max_rounds < 1) throw ConfigError("cegis: max_rounds must be >= 1");
  spec.validate();
  CegisReport report;
  for (int r = 1; r <= opts.max_rounds; ++r) {
    state.round = r;
    std::mt19937_64 rng(derive_seed(state.opts.seed, 100 + static_cast<std::uint64_t>(r)));
    state.interior.clear();
    for (int k = 0; k < state.opts.interior_samples; ++k) state.interior.push_back(spec.state_box.sample(rng));

    train_round(state, spec);
    falsifier::FalsifierResult res = falsifier::falsify(state.sys, spec, opts.falsifier);
    report.rounds = r;
    report.counterexamples_per_round.push_back(static_cast<int>(res.counterexamples.size()));
    if (!state.history.empty() && state.history.back().round == r) {
      state.history.back().counterexamples = static_cast<int>(res.counterexamples.size());
    }
    for (const auto& c : res.counterexamples) {
      falsifier::classify(c, spec, state.data);
      add_neighbors(c, spec, state, rng);
    }
    if (opts.on_round) opts.on_round(state, res);
    const bool unsat = res.unsat;
    report.falsifier_results.push_back(std::move(res));
    if (unsat) {
      report.final_status = CegisStatus::Verified;
      break;
    }
  }
  return report;
}

void write_training_log_csv(std::ostream& out, const std::vector<LossRecord>& history) {
  out << "round,epoch,loss_total,loss_dyn,loss_recons,loss_barr,counterexamples\n";
  for (const auto& r : history) {
    out << r.round << ',' << r.epoch << ',' << io::format_real(r.total) << ',' << io::format_real(r.dyn) << ','
        << io::format_real(r.recons) << ',' << io::format_real(r.barr) << ',' << r.counterexamples << '\n';
  }
}

}  // namespace koopcbf::train
