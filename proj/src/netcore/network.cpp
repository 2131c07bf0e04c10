#include "koopcbf/netcore/network.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "koopcbf/errors.hpp"
#include "koopcbf/io/text_format.hpp"

namespace koopcbf::netcore {

namespace {

constexpr int kNetFormatVersion = 1;

void check_batch(const FeedforwardNet& net, const RealMatrix& X) {
  if (net.empty()) throw StateError("network has no layers");
  if (X.rows() != net.in_dim()) {
    throw ShapeError("network expects input dimension " + std::to_string(net.in_dim()) +
                     ", got " + std::to_string(X.rows()));
  }
}

void check_cache(const FeedforwardNet& net, const ForwardCache& cache) {
  if (cache.empty()) throw StateError("backprop requires a cached forward pass");
  if (cache.values.size() != net.num_layers() + 1 || cache.values.front().rows() != net.in_dim()) {
    throw StateError("cached forward pass does not match the network");
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  throw ParseError("unknown activation '" + s + "'");
}

FeedforwardNet::FeedforwardNet(std::vector<DenseLayer> layers, Activation hidden)
    : layers_(std::move(layers)), hidden_(hidden) {
  if (layers_.empty()) throw ShapeError("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() != l.bias.size()) {
      throw ShapeError("layer " + std::to_string(i) + ": bias length does not match weight rows");
    }
    if (l.weight.rows() == 0 || l.weight.cols() == 0) {
      throw ShapeError("layer " + std::to_string(i) + ": empty weight matrix");
    }
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) {
      throw ShapeError("layer " + std::to_string(i) + ": input dimension does not chain");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw NumericError("layer " + std::to_string(i) + ": non-finite parameters");
    }
  }
}

FeedforwardNet FeedforwardNet::glorot(std::span<const int> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ShapeError("glorot: need at least input and output dimension");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int fan_in = dims[i];
    const int fan_out = dims[i + 1];
    if (fan_in <= 0 || fan_out <= 0) throw ShapeError("glorot: dimensions must be positive");
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer l{RealMatrix(fan_out, fan_in), RealVector::Zero(fan_out)};
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) l.weight(r, c) = dist(rng);
    layers.push_back(std::move(l));
  }
  return FeedforwardNet(std::move(layers));
}

std::vector<int> FeedforwardNet::dims() const {
  std::vector<int> d;
  if (layers_.empty()) return d;
  d.push_back(in_dim());
  for (const auto& l : layers_) d.push_back(static_cast<int>(l.weight.rows()));
  return d;
}

std::size_t FeedforwardNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

RealVector FeedforwardNet::forward(const RealVector& x) const {
  return forward_batch(x);
}

RealMatrix FeedforwardNet::forward_batch(const RealMatrix& X) const {
  check_batch(*this, X);
  RealMatrix a = X;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    RealMatrix pre = layers_[i].weight * a;
    pre.colwise() += layers_[i].bias;
    a = (i + 1 < layers_.size()) ? RealMatrix(pre.array().tanh()) : pre;
  }
  return a;
}

bool operator==(const FeedforwardNet& a, const FeedforwardNet& b) {
  if (a.hidden_ != b.hidden_ || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& la = a.layers_[i];
    const auto& lb = b.layers_[i];
    if (la.weight.rows() != lb.weight.rows() || la.weight.cols() != lb.weight.cols()) return false;
    if (la.weight != lb.weight || la.bias != lb.bias) return false;
  }
  return true;
}

ForwardCache forward_cached(const FeedforwardNet& net, const RealMatrix& X) {
  check_batch(net, X);
  ForwardCache cache;
  cache.values.reserve(net.num_layers() + 1);
  cache.values.push_back(X);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    RealMatrix pre = net.layer(i).weight * cache.values.back();
    pre.colwise() += net.layer(i).bias;
    if (i + 1 < net.num_layers()) pre = pre.array().tanh();
    cache.values.push_back(std::move(pre));
  }
  return cache;
}

ParamGrads ParamGrads::zeros_like(const FeedforwardNet& net) {
  ParamGrads g;
  for (const auto& l : net.layers()) {
    g.weight.push_back(RealMatrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(RealVector::Zero(l.bias.size()));
  }
  return g;
}

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
  if (other.weight.size() != weight.size()) throw ShapeError("ParamGrads: layer count mismatch");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

ParamGrads& ParamGrads::operator*=(double s) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] *= s;
    bias[i] *= s;
  }
  return *this;
}

bool ParamGrads::all_finite() const {
  for (std::size_t i = 0; i < weight.size(); ++i)
    if (!weight[i].allFinite() || !bias[i].allFinite()) return false;
  return true;
}

double ParamGrads::squared_norm() const {
  double s = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i)
    s += weight[i].squaredNorm() + bias[i].squaredNorm();
  return s;
}

Backprop grad_params(const FeedforwardNet& net, const RealMatrix& out_grad,
                     const ForwardCache& cache) {
  check_cache(net, cache);
  if (out_grad.rows() != net.out_dim() || out_grad.cols() != cache.output().cols()) {
    throw ShapeError("grad_params: upstream gradient shape does not match the output");
  }
  Backprop result{ParamGrads::zeros_like(net), {}};
  RealMatrix delta = out_grad;
  for (std::size_t i = net.num_layers(); i-- > 0;) {
    if (i + 1 < net.num_layers()) {
      const RealMatrix& y = cache.values[i + 1];
      delta = (delta.array() * (1.0 - y.array().square())).matrix();
    }
    result.params.weight[i] = delta * cache.values[i].transpose();
    result.params.bias[i] = delta.rowwise().sum();
    delta = net.layer(i).weight.transpose() * delta;
  }
  result.input_grad = std::move(delta);
  return result;
}

RealMatrix backprop_input(const FeedforwardNet& net, const RealMatrix& out_grad,
                          const ForwardCache& cache) {
  check_cache(net, cache);
  if (out_grad.rows() != net.out_dim() || out_grad.cols() != cache.output().cols()) {
    throw ShapeError("backprop_input: upstream gradient shape does not match the output");
  }
  RealMatrix delta = out_grad;
  for (std::size_t i = net.num_layers(); i-- > 0;) {
    if (i + 1 < net.num_layers()) {
      const RealMatrix& y = cache.values[i + 1];
      delta = (delta.array() * (1.0 - y.array().square())).matrix();
    }
    delta = net.layer(i).weight.transpose() * delta;
  }
  return delta;
}

RealMatrix input_jacobian(const FeedforwardNet& net, const RealVector& x) {
  const ForwardCache cache = forward_cached(net, x);
  // Forward-mode: carry d(layer output)/dx as a matrix.
  RealMatrix J = RealMatrix::Identity(net.in_dim(), net.in_dim());
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    J = net.layer(i).weight * J;
    if (i + 1 < net.num_layers()) {
      const RealVector slope = 1.0 - cache.values[i + 1].col(0).array().square();
      J = slope.asDiagonal() * J;
    }
  }
  return J;
}

TangentCache forward_tangent(const FeedforwardNet& net, const RealMatrix& X,
                             const RealMatrix& Xdot) {
  check_batch(net, X);
  if (Xdot.rows() != X.rows() || Xdot.cols() != X.cols()) {
    throw ShapeError("forward_tangent: tangent shape must match the input batch");
  }
  TangentCache cache;
  cache.primal = forward_cached(net, X);
  cache.tangents.reserve(net.num_layers() + 1);
  cache.tangents.push_back(Xdot);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    RealMatrix t = net.layer(i).weight * cache.tangents.back();
    if (i + 1 < net.num_layers()) {
      const RealMatrix& y = cache.primal.values[i + 1];
      t = (t.array() * (1.0 - y.array().square())).matrix();
    }
    cache.tangents.push_back(std::move(t));
  }
  return cache;
}

TangentBackprop grad_tangent(const FeedforwardNet& net, const RealMatrix& gy,
                             const RealMatrix& gydot, const TangentCache& cache) {
  check_cache(net, cache.primal);
  if (cache.tangents.size() != cache.primal.values.size()) {
    throw StateError("grad_tangent: tangent cache is incomplete");
  }
  const auto batch = cache.output().cols();
  if (gy.rows() != net.out_dim() || gy.cols() != batch || gydot.rows() != net.out_dim() ||
      gydot.cols() != batch) {
    throw ShapeError("grad_tangent: upstream gradient shape does not match the output");
  }
  TangentBackprop result{ParamGrads::zeros_like(net), {}, {}};
  // Gradients w.r.t. the post-activation value and tangent of the current layer.
  RealMatrix g_val = gy;
  RealMatrix g_tan = gydot;
  for (std::size_t i = net.num_layers(); i-- > 0;) {
    RealMatrix g_pre;
    RealMatrix g_pre_tan;
    if (i + 1 < net.num_layers()) {
      // y = tanh(a), ydot = (1 - y^2) * adot  with  adot = W xdot.
      const auto y = cache.primal.values[i + 1].array();
      const auto slope = 1.0 - y.square();
      // adot is recoverable from the stored tangent of the layer input.
      const RealMatrix adot = net.layer(i).weight * cache.tangents[i];
      g_pre_tan = (g_tan.array() * slope).matrix();
      const auto g_slope = g_tan.array() * adot.array();
      const auto g_y_total = g_val.array() + g_slope * (-2.0 * y);
      g_pre = (g_y_total * slope).matrix();
    } else {
      g_pre = g_val;
      g_pre_tan = g_tan;
    }
    const auto& W = net.layer(i).weight;
    result.params.weight[i] =
        g_pre * cache.primal.values[i].transpose() + g_pre_tan * cache.tangents[i].transpose();
    result.params.bias[i] = g_pre.rowwise().sum();
    g_val = W.transpose() * g_pre;
    g_tan = W.transpose() * g_pre_tan;
  }
  result.input_grad = std::move(g_val);
  result.tangent_grad = std::move(g_tan);
  return result;
}

void write_net(io::TextWriter& w, const FeedforwardNet& net) {
  w.integer("koopcbf-net", kNetFormatVersion);
  w.line("activation", {to_string(net.activation())});
  w.integer("layers", static_cast<long long>(net.num_layers()));
  for (const auto& l : net.layers()) {
    w.matrix("weight", l.weight);
    w.vector("bias", l.bias);
  }
  w.line("end-net");
}

FeedforwardNet read_net(io::TextReader& r) {
  const std::size_t header_line = r.line_number();
  const long long version = r.integer("koopcbf-net");
  if (version != kNetFormatVersion) {
    throw ParseError("line " + std::to_string(header_line) + ": unsupported net format version " +
                     std::to_string(version));
  }
  const Activation act = activation_from_string(r.word("activation"));
  const long long count = r.integer("layers");
  if (count <= 0) throw ParseError("network must have at least one layer");
  std::vector<DenseLayer> layers;
  for (long long i = 0; i < count; ++i) {
    DenseLayer l;
    l.weight = r.matrix("weight");
    l.bias = r.vector("bias");
    layers.push_back(std::move(l));
  }
  r.expect("end-net", 0);
  try {
    return FeedforwardNet(std::move(layers), act);
  } catch (const Error& e) {
    throw ParseError(std::string("invalid network in checkpoint: ") + e.what());
  }
}

void save_net(const std::string& path, const FeedforwardNet& net) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  io::TextWriter w(out);
  write_net(w, net);
}

FeedforwardNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  io::TextReader r(in);
  return read_net(r);
}

}  // namespace koopcbf::netcore
