#pragma once

#include <vector>

#include "koopcbf/box.hpp"
#include "koopcbf/falsifier/interval.hpp"
#include "koopcbf/koopman/learned_system.hpp"
#include "koopcbf/netcore/network.hpp"

namespace koopcbf::falsifier {

// Values, first and (optionally) second derivatives of every unit with
// respect to k seed directions. T is double for point evaluation or
// Interval for enclosures.
template <class T>
struct Jet {
  int dim = 0;
  int k = 0;
  std::vector<T> v;  // dim
  std::vector<T> J;  // dim x k, row-major
  std::vector<T> S;  // dim x k x k; empty for first-order passes

  T& d(int i, int a) { return J[static_cast<std::size_t>(i * k + a)]; }
  const T& d(int i, int a) const { return J[static_cast<std::size_t>(i * k + a)]; }
  T& dd(int i, int a, int b) { return S[static_cast<std::size_t>((i * k + a) * k + b)]; }
  const T& dd(int i, int a, int b) const { return S[static_cast<std::size_t>((i * k + a) * k + b)]; }
};

// Seeds an input jet with the identity (k = dim).
template <class T>
Jet<T> seed_identity(std::vector<T> v, bool second);

template <class T>
Jet<T> jet_forward(const netcore::FeedforwardNet& net, const Jet<T>& in, bool second);

extern template Jet<double> seed_identity(std::vector<double>, bool);
extern template Jet<Interval> seed_identity(IntervalVector, bool);
extern template Jet<double> jet_forward(const netcore::FeedforwardNet&, const Jet<double>&, bool);
extern template Jet<Interval> jet_forward(const netcore::FeedforwardNet&, const Jet<Interval>&, bool);

// Sound enclosure of net(box): affine layers by interval matrix-vector
// rules, tanh by monotonicity.
IntervalVector interval_forward(const netcore::FeedforwardNet& net, const Box& box);
IntervalVector interval_forward(const netcore::FeedforwardNet& net, const IntervalVector& x);

// Enclosure of the input Jacobian over the box (out_dim x in_dim, row-major).
IntervalVector interval_jacobian(const netcore::FeedforwardNet& net, const Box& box);

// Enclosures of h and of the lifted CBF expression over one state box.
// Naive interval forms are intersected with mean-value forms in x and z.
class BoxAnalysis {
 public:
  BoxAnalysis(const koopman::LearnedSystem& sys, const Box& box, double lambda, bool with_lie);

  const IntervalVector& lifted() const { return z_; }
  Interval barrier() const { return h_; }

  // grad_z h . psi(z, u) + lambda h over the box; requires with_lie.
  Interval lie(const RealVector& u) const;

 private:
  const koopman::LearnedSystem* sys_;
  double lambda_;
  bool with_lie_;
  int n_ = 0;
  int N_ = 0;
  IntervalVector dx_;       // box - center
  IntervalVector z_;        // Phi(box)
  IntervalVector jphi_;     // N x n
  Interval h_;
  IntervalVector g_;        // dh/dz over z_
  IntervalVector hess_;     // N x N
  koopman::BarrierPoint center_;
};

Interval interval_lie(const koopman::LearnedSystem& sys, const Box& box, const RealVector& u,
                      double lambda);

}  // namespace koopcbf::falsifier
