#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "koopcbf/linalg.hpp"

namespace koopcbf::io {
class TextWriter;
class TextReader;
}  // namespace koopcbf::io

namespace koopcbf::netcore {

// Activation applied after every layer except the last, which is affine.
enum class Activation { Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseLayer {
  RealMatrix weight;  // out x in
  RealVector bias;    // out
};

// Multilayer perceptron y = W_{L+1} tanh(W_L ... tanh(W_1 x + b_1) ... + b_L) + b_{L+1}.
class FeedforwardNet {
 public:
  FeedforwardNet() = default;
  explicit FeedforwardNet(std::vector<DenseLayer> layers, Activation hidden = Activation::Tanh);

  // Glorot-uniform weights, zero biases. `dims` = {in, hidden..., out}.
  static FeedforwardNet glorot(std::span<const int> dims, std::uint64_t seed);

  int in_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
  int out_dim() const { return static_cast<int>(layers_.back().weight.rows()); }
  std::size_t num_layers() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  Activation activation() const { return hidden_; }
  std::vector<int> dims() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  DenseLayer& layer(std::size_t i) { return layers_.at(i); }

  std::size_t parameter_count() const;

  RealVector forward(const RealVector& x) const;
  // Column-wise evaluation: X is in_dim x batch.
  RealMatrix forward_batch(const RealMatrix& X) const;

  friend bool operator==(const FeedforwardNet& a, const FeedforwardNet& b);

 private:
  std::vector<DenseLayer> layers_;
  Activation hidden_ = Activation::Tanh;
};

struct ForwardCache {
  // values[0] is the input batch, values[i + 1] the output of layer i.
  std::vector<RealMatrix> values;

  bool empty() const { return values.empty(); }
  const RealMatrix& output() const { return values.back(); }
};

ForwardCache forward_cached(const FeedforwardNet& net, const RealMatrix& X);

struct ParamGrads {
  std::vector<RealMatrix> weight;
  std::vector<RealVector> bias;

  static ParamGrads zeros_like(const FeedforwardNet& net);
  ParamGrads& operator+=(const ParamGrads& other);
  ParamGrads& operator*=(double s);
  bool all_finite() const;
  double squared_norm() const;
};

struct Backprop {
  ParamGrads params;
  RealMatrix input_grad;  // in_dim x batch
};

// Reverse-mode gradient of sum_j <out_grad[:, j], net(X[:, j])> with
// respect to every parameter and to the inputs. Throws StateError when
// `cache` is empty or was produced by a differently shaped net.
Backprop grad_params(const FeedforwardNet& net, const RealMatrix& out_grad,
                     const ForwardCache& cache);

// Input gradient only (no parameter gradients are formed).
RealMatrix backprop_input(const FeedforwardNet& net, const RealMatrix& out_grad,
                          const ForwardCache& cache);

// d net / d x at a single point (out_dim x in_dim).
RealMatrix input_jacobian(const FeedforwardNet& net, const RealVector& x);

// Forward pass that also pushes a tangent direction through the net, so that
// tangents.back() = J(x) * xdot column-wise.
struct TangentCache {
  ForwardCache primal;
  std::vector<RealMatrix> tangents;

  const RealMatrix& output() const { return primal.output(); }
  const RealMatrix& output_tangent() const { return tangents.back(); }
};

TangentCache forward_tangent(const FeedforwardNet& net, const RealMatrix& X,
                             const RealMatrix& Xdot);

struct TangentBackprop {
  ParamGrads params;
  RealMatrix input_grad;
  RealMatrix tangent_grad;
};

// Reverse pass through forward_tangent: gradients of
// sum <gy, y> + sum <gydot, ydot> w.r.t. parameters, x and xdot.
TangentBackprop grad_tangent(const FeedforwardNet& net, const RealMatrix& gy,
                             const RealMatrix& gydot, const TangentCache& cache);

// Versioned text checkpoint ("koopcbf-net 1").
void write_net(io::TextWriter& w, const FeedforwardNet& net);
FeedforwardNet read_net(io::TextReader& r);
void save_net(const std::string& path, const FeedforwardNet& net);
FeedforwardNet load_net(const std::string& path);

}  // namespace koopcbf::netcore
