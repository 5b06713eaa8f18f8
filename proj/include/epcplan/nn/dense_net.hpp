#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "epcplan/errors.hpp"
#include "epcplan/rng.hpp"

namespace epcplan::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { Relu = 0, Identity = 1 };

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::Relu;

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
};

/// Per-layer parameter gradients, same shapes as the net.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  Gradients& operator+=(const Gradients& o) {
    for (std::size_t l = 0; l < weight.size(); ++l) {
      weight[l] += o.weight[l];
      bias[l] += o.bias[l];
    }
    return *this;
  }
};

/// Activations of one batched forward pass: `activations[0]` is the input,
/// `activations[l + 1]` the output of layer l.
struct ForwardCache {
  std::vector<Matrix> activations;
  const Matrix& output() const { return activations.back(); }
};

class DenseNet {
 public:
  DenseNet() = default;

  explicit DenseNet(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw Error(ErrorCode::BadArchitecture, "net needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (layers_[l].bias.size() != layers_[l].weight.rows())
        throw Error(ErrorCode::BadArchitecture, "bias length mismatch at layer " + std::to_string(l));
      if (l > 0 && layers_[l].in_dim() != layers_[l - 1].out_dim())
        throw Error(ErrorCode::BadArchitecture, "layer dims do not chain at layer " + std::to_string(l));
    }
  }

  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t output_dim() const { return layers_.back().out_dim(); }
  std::size_t layer_count() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  /// Layer sizes, input first.
  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d{input_dim()};
    for (const auto& l : layers_) d.push_back(l.out_dim());
    return d;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  Gradients zero_gradients() const {
    Gradients g;
    for (const auto& l : layers_) {
      g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
      g.bias.push_back(Vector::Zero(l.bias.size()));
    }
    return g;
  }

  /// Rows of `x` are samples.
  Matrix forward_batch(const Matrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != input_dim())
      throw Error(ErrorCode::DimMismatch, "input has " + std::to_string(x.cols()) +
                                              " columns, net expects " + std::to_string(input_dim()));
    Matrix a = x;
    for (const auto& l : layers_) a = apply(l, a);
    return a;
  }

  Vector forward(std::span<const double> x) const {
    if (x.size() != input_dim())
      throw Error(ErrorCode::DimMismatch, "input length " + std::to_string(x.size()) +
                                              ", net expects " + std::to_string(input_dim()));
    Matrix row = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
    return forward_batch(row).row(0).transpose();
  }

  Matrix forward_cached(const Matrix& x, ForwardCache& cache) const {
    if (static_cast<std::size_t>(x.cols()) != input_dim())
      throw Error(ErrorCode::DimMismatch, "input width mismatch");
    cache.activations.resize(layers_.size() + 1);
    cache.activations[0] = x;
    for (std::size_t l = 0; l < layers_.size(); ++l)
      cache.activations[l + 1] = apply(layers_[l], cache.activations[l]);
    return cache.activations.back();
  }

  /// Backpropagates d(loss)/d(output) through a cached pass. Layers below
  /// `first_layer` get zero gradients and are not traversed. If `input_grad`
  /// is non-null it receives d(loss)/d(input) (requires first_layer == 0).
  Gradients backward(const ForwardCache& cache, const Matrix& output_grad,
                     std::size_t first_layer = 0, Matrix* input_grad = nullptr) const {
    Gradients g = zero_gradients();
    Matrix delta = output_grad;
    for (std::size_t l = layers_.size(); l-- > first_layer;) {
      const auto& layer = layers_[l];
      if (layer.activation == Activation::Relu)
        delta = delta.cwiseProduct((cache.activations[l + 1].array() > 0.0).cast<double>().matrix());
      g.weight[l].noalias() = delta.transpose() * cache.activations[l];
      g.bias[l] = delta.colwise().sum().transpose();
      if (l > first_layer || (l == 0 && input_grad)) {
        Matrix next = delta * layer.weight;
        delta = std::move(next);
      }
    }
    if (input_grad) *input_grad = delta;
    return g;
  }

  friend bool operator==(const DenseNet& a, const DenseNet& b) {
    if (a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t l = 0; l < a.layers_.size(); ++l) {
      const auto& x = a.layers_[l];
      const auto& y = b.layers_[l];
      if (x.activation != y.activation || x.weight.rows() != y.weight.rows() ||
          x.weight.cols() != y.weight.cols() || x.weight != y.weight || x.bias != y.bias)
        return false;
    }
    return true;
  }

 private:
  static Matrix apply(const Layer& l, const Matrix& a) {
    Matrix z = a * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    if (l.activation == Activation::Relu) z = z.cwiseMax(0.0);
    return z;
  }

  std::vector<Layer> layers_;
};

/// ReLU on every hidden layer, identity on the output (logits).
inline std::vector<Activation> mlp_activations(std::size_t layer_count) {
  std::vector<Activation> acts(layer_count, Activation::Relu);
  if (!acts.empty()) acts.back() = Activation::Identity;
  return acts;
}

/// Weights ~ U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)) (He-uniform), biases 0.
inline DenseNet init_net(const std::vector<std::size_t>& dims,
                         const std::vector<Activation>& activations, std::uint64_t seed) {
  if (dims.size() < 2) throw Error(ErrorCode::BadArchitecture, "need input and output dims");
  for (auto d : dims)
    if (d == 0) throw Error(ErrorCode::BadArchitecture, "layer size must be positive");
  if (activations.size() != dims.size() - 1)
    throw Error(ErrorCode::BadArchitecture, "need one activation per layer");
  Rng rng = Rng::derive(seed, 0x1a17);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    Layer layer{Matrix(out, in), Vector::Zero(out), activations[l]};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers));
}

inline DenseNet init_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  return init_net(dims, mlp_activations(dims.size() - 1), seed);
}

/// Stacks `top` on `bottom` (bottom's output feeds top's input).
inline DenseNet stack(const DenseNet& bottom, const DenseNet& top) {
  std::vector<Layer> layers = bottom.layers();
  layers.insert(layers.end(), top.layers().begin(), top.layers().end());
  return DenseNet(std::move(layers));
}

}  // namespace epcplan::nn
