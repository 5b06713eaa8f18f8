#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "epcplan/errors.hpp"
#include "epcplan/nn/dense_net.hpp"
#include "epcplan/nn/loss.hpp"

namespace epcplan::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 60;
  std::size_t early_stop_patience = 10;
  std::uint64_t seed = 1;
  double l2_weight = 0.0;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw Error(ErrorCode::InvalidArgument, "learning_rate must be finite and >= 0", "learning_rate");
    if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1", "batch_size");
    if (early_stop_patience < 1)
      throw Error(ErrorCode::InvalidArgument, "early_stop_patience must be >= 1", "early_stop_patience");
    if (!(l2_weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "l2_weight must be >= 0", "l2_weight");
  }
};

/// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit Adam(const DenseNet& net) : m_(net.zero_gradients()), v_(net.zero_gradients()) {}

  /// Updates layers from `first_layer` upward; lower layers are left alone.
  void step(DenseNet& net, const Gradients& g, double learning_rate, std::size_t first_layer = 0) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto& layers = net.layers();
    for (std::size_t l = first_layer; l < layers.size(); ++l) {
      update(layers[l].weight, m_.weight[l], v_.weight[l], g.weight[l], learning_rate, c1, c2);
      update(layers[l].bias, m_.bias[l], v_.bias[l], g.bias[l], learning_rate, c1, c2);
    }
  }

  std::size_t steps() const { return t_; }

 private:
  template <typename P, typename G>
  static void update(P& param, P& m, P& v, const G& g, double lr, double c1, double c2) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }

  Gradients m_;
  Gradients v_;
  std::size_t t_ = 0;
};

inline double l2_penalty(const DenseNet& net, std::size_t first_layer = 0) {
  double s = 0.0;
  for (std::size_t l = first_layer; l < net.layer_count(); ++l) s += net.layers()[l].weight.squaredNorm();
  return s;
}

inline void add_l2_gradient(const DenseNet& net, Gradients& g, double l2_weight) {
  if (l2_weight == 0.0) return;
  for (std::size_t l = 0; l < net.layer_count(); ++l) g.weight[l] += 2.0 * l2_weight * net.layers()[l].weight;
}

/// One Adam update on mean cross-entropy + l2_weight * sum ||W||^2. Returns
/// the objective before the update. Layers below `first_trainable` stay
/// frozen.
inline double train_step(DenseNet& net, Adam& adam, const Matrix& batch,
                         std::span<const std::size_t> labels, const TrainConfig& cfg,
                         std::size_t first_trainable = 0) {
  if (batch.rows() == 0) throw Error(ErrorCode::InvalidArgument, "empty batch");
  ForwardCache cache;
  net.forward_cached(batch, cache);
  auto ce = cross_entropy_batch(cache.output(), labels);
  const double objective = ce.loss + cfg.l2_weight * l2_penalty(net);
  if (!std::isfinite(objective))
    throw Error(ErrorCode::NonFiniteLoss, "loss is not finite; reduce the learning rate");
  Gradients g = net.backward(cache, ce.grad, first_trainable);
  add_l2_gradient(net, g, cfg.l2_weight);
  adam.step(net, g, cfg.learning_rate, first_trainable);
  return objective;
}

}  // namespace epcplan::nn
