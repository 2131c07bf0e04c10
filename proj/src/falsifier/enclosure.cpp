#include "koopcbf/falsifier/enclosure.hpp"

#include "koopcbf/errors.hpp"

namespace koopcbf::falsifier {

template <class T>
Jet<T> seed_identity(std::vector<T> v, bool second) {
  Jet<T> j;
  j.dim = static_cast<int>(v.size());
  j.k = j.dim;
  j.v = std::move(v);
  j.J.assign(static_cast<std::size_t>(j.dim * j.k), T(0.0));
  for (int i = 0; i < j.dim; ++i) j.d(i, i) = T(1.0);
  if (second) j.S.assign(static_cast<std::size_t>(j.dim * j.k * j.k), T(0.0));
  return j;
}

template <class T>
Jet<T> jet_forward(const netcore::FeedforwardNet& net, const Jet<T>& in, bool second) {
  if (in.dim != net.in_dim()) throw ShapeError("jet_forward: input dimension mismatch");
  if (second && in.S.size() != static_cast<std::size_t>(in.dim * in.k * in.k)) {
    throw StateError("jet_forward: second-order pass needs second-order input");
  }
  Jet<T> cur = in;
  const int k = in.k;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& W = net.layer(l).weight;
    const auto& b = net.layer(l).bias;
    const int rows = static_cast<int>(W.rows());
    const int cols = static_cast<int>(W.cols());
    Jet<T> out;
    out.dim = rows;
    out.k = k;
    out.v.assign(static_cast<std::size_t>(rows), T(0.0));
    out.J.assign(static_cast<std::size_t>(rows * k), T(0.0));
    if (second) out.S.assign(static_cast<std::size_t>(rows * k * k), T(0.0));
    for (int j = 0; j < rows; ++j) {
      T acc = T(b[j]);
      for (int c = 0; c < cols; ++c) acc += W(j, c) * cur.v[static_cast<std::size_t>(c)];
      out.v[static_cast<std::size_t>(j)] = acc;
      for (int a = 0; a < k; ++a) {
        T s = T(0.0);
        for (int c = 0; c < cols; ++c) s += W(j, c) * cur.d(c, a);
        out.d(j, a) = s;
      }
      if (second) {
        for (int a = 0; a < k; ++a) {
          for (int bb = a; bb < k; ++bb) {
            T s = T(0.0);
            for (int c = 0; c < cols; ++c) s += W(j, c) * cur.dd(c, a, bb);
            out.dd(j, a, bb) = s;
          }
        }
      }
    }
    if (l + 1 < net.num_layers()) {
      using std::tanh;
      for (int j = 0; j < rows; ++j) {
        const T t = tanh(out.v[static_cast<std::size_t>(j)]);
        const T d1 = tanh_d1(t);
        if (second) {
          const T d2 = tanh_d2(t);
          for (int a = 0; a < k; ++a) {
            for (int bb = a; bb < k; ++bb) {
              const T jj = a == bb ? sqr(out.d(j, a)) : out.d(j, a) * out.d(j, bb);
              out.dd(j, a, bb) = d1 * out.dd(j, a, bb) + d2 * jj;
            }
          }
        }
        for (int a = 0; a < k; ++a) out.d(j, a) = d1 * out.d(j, a);
        out.v[static_cast<std::size_t>(j)] = t;
      }
    }
    if (second) {
      for (int j = 0; j < rows; ++j) {
        for (int a = 0; a < k; ++a) {
          for (int bb = 0; bb < a; ++bb) out.dd(j, a, bb) = out.dd(j, bb, a);
        }
      }
    }
    cur = std::move(out);
  }
  return cur;
}

template Jet<double> seed_identity(std::vector<double>, bool);
template Jet<Interval> seed_identity(IntervalVector, bool);
template Jet<double> jet_forward(const netcore::FeedforwardNet&, const Jet<double>&, bool);
template Jet<Interval> jet_forward(const netcore::FeedforwardNet&, const Jet<Interval>&, bool);

IntervalVector interval_forward(const netcore::FeedforwardNet& net, const IntervalVector& x) {
  Jet<Interval> in;
  in.dim = static_cast<int>(x.size());
  in.k = 0;
  in.v = x;
  return jet_forward(net, in, false).v;
}

IntervalVector interval_forward(const netcore::FeedforwardNet& net, const Box& box) {
  return interval_forward(net, to_intervals(box));
}

IntervalVector interval_jacobian(const netcore::FeedforwardNet& net, const Box& box) {
  return jet_forward(net, seed_identity(to_intervals(box), false), false).J;
}

namespace {

Interval dot(const IntervalVector& a, const IntervalVector& b) {
  Interval s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

BoxAnalysis::BoxAnalysis(const koopman::LearnedSystem& sys, const Box& box, double lambda,
                         bool with_lie)
    : sys_(&sys), lambda_(lambda), with_lie_(with_lie) {
  n_ = sys.state_dim();
  N_ = sys.lifted_dim();
  if (box.dim() != n_) throw ShapeError("BoxAnalysis: box dimension mismatch");
  const RealVector c = box.center();
  dx_.resize(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) dx_[static_cast<std::size_t>(i)] = Interval(box.lo(i), box.hi(i)) - Interval(c[i]);
  center_ = koopman::barrier_point(sys, c, lambda);

  const Jet<Interval> enc = jet_forward(sys.encoder, seed_identity(to_intervals(box), false), false);
  jphi_ = enc.J;
  z_.resize(static_cast<std::size_t>(N_));
  for (int j = 0; j < N_; ++j) {
    Interval mv(center_.z[j]);
    for (int i = 0; i < n_; ++i) mv += jphi_[static_cast<std::size_t>(j * n_ + i)] * dx_[static_cast<std::size_t>(i)];
    z_[static_cast<std::size_t>(j)] = intersect(enc.v[static_cast<std::size_t>(j)], mv);
  }

  IntervalVector dz(static_cast<std::size_t>(N_));
  for (int j = 0; j < N_; ++j) dz[static_cast<std::size_t>(j)] = z_[static_cast<std::size_t>(j)] - Interval(center_.z[j]);

  if (with_lie_) {
    const Jet<Interval> hj = jet_forward(sys.cbf_net, seed_identity(z_, true), true);
    g_.assign(hj.J.begin(), hj.J.begin() + N_);
    hess_.assign(hj.S.begin(), hj.S.begin() + N_ * N_);
    Interval grad_x_dot(center_.h);
    for (int i = 0; i < n_; ++i) {
      Interval gx(0.0);
      for (int j = 0; j < N_; ++j) gx += jphi_[static_cast<std::size_t>(j * n_ + i)] * g_[static_cast<std::size_t>(j)];
      grad_x_dot += gx * dx_[static_cast<std::size_t>(i)];
    }
    const Interval mvz = Interval(center_.h) + dot(g_, dz);
    h_ = intersect(intersect(hj.v[0], grad_x_dot), mvz);
  } else {
    // Composite pass h(Phi(x)) with tangents d/dx.
    Jet<Interval> in;
    in.dim = N_;
    in.k = n_;
    in.v = z_;
    in.J = jphi_;
    const Jet<Interval> hj = jet_forward(sys.cbf_net, in, false);
    Interval mv(center_.h);
    for (int i = 0; i < n_; ++i) mv += hj.J[static_cast<std::size_t>(i)] * dx_[static_cast<std::size_t>(i)];
    h_ = intersect(hj.v[0], mv);
  }
}

Interval BoxAnalysis::lie(const RealVector& u) const {
  if (!with_lie_) throw StateError("BoxAnalysis: lie enclosure was not requested");
  const auto& model = sys_->model;
  const RealMatrix A = model.generator(u);
  const auto N = static_cast<std::size_t>(N_);
  IntervalVector Az(N, Interval(0.0));
  for (int r = 0; r < N_; ++r) {
    for (int c = 0; c < N_; ++c) Az[static_cast<std::size_t>(r)] += A(r, c) * z_[static_cast<std::size_t>(c)];
  }
  const Interval naive = dot(g_, Az) + lambda_ * h_;

  // grad_z e = H A z + A^T g + lambda g
  IntervalVector grad_z(N, Interval(0.0));
  for (int r = 0; r < N_; ++r) {
    Interval s = lambda_ * g_[static_cast<std::size_t>(r)];
    for (int c = 0; c < N_; ++c) {
      s += hess_[static_cast<std::size_t>(r * N_ + c)] * Az[static_cast<std::size_t>(c)];
      s += A(c, r) * g_[static_cast<std::size_t>(c)];
    }
    grad_z[static_cast<std::size_t>(r)] = s;
  }
  const double ec = koopman::lie_expression(center_, u);
  Interval mvx(ec);
  for (int i = 0; i < n_; ++i) {
    Interval gx(0.0);
    for (int j = 0; j < N_; ++j) gx += jphi_[static_cast<std::size_t>(j * n_ + i)] * grad_z[static_cast<std::size_t>(j)];
    mvx += gx * dx_[static_cast<std::size_t>(i)];
  }
  Interval mvz(ec);
  for (int j = 0; j < N_; ++j) mvz += grad_z[static_cast<std::size_t>(j)] * (z_[static_cast<std::size_t>(j)] - Interval(center_.z[j]));
  return intersect(intersect(naive, mvx), mvz);
}

Interval interval_lie(const koopman::LearnedSystem& sys, const Box& box, const RealVector& u,
                      double lambda) {
  return BoxAnalysis(sys, box, lambda, true).lie(u);
}

}  // namespace koopcbf::falsifier
