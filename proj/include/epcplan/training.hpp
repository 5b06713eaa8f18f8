#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "epcplan/dataset.hpp"
#include "epcplan/encoder.hpp"
#include "epcplan/errors.hpp"
#include "epcplan/metrics.hpp"
#include "epcplan/nn/dense_net.hpp"
#include "epcplan/nn/loss.hpp"
#include "epcplan/nn/optimizer.hpp"
#include "epcplan/rng.hpp"

namespace epcplan {

/// Hidden stack of the plain MLP (and of the SCARF encoder).
struct NetworkConfig {
  std::size_t hidden_width = 256;
  std::size_t hidden_layers = 4;
};

struct ScarfConfig {
  double corruption_rate = 0.30;
  double temperature = 1.0;
  std::size_t representation_dim = 64;
  std::size_t head_width = 64;
  std::size_t pretrain_epochs = 20;
  /// Ablation: fine-tune the head only, encoder parameters untouched.
  bool freeze_encoder = false;
};

struct ClassifierConfig {
  nn::TrainConfig train;
  NetworkConfig network;
  ScarfConfig scarf;
};

/// Encoded rows with class labels local to the classifier being trained.
struct LabeledMatrix {
  nn::Matrix x;
  std::vector<std::size_t> y;

  std::size_t size() const { return y.size(); }
  bool empty() const { return y.empty(); }
};

inline LabeledMatrix gather_rows(const LabeledMatrix& data, std::span<const std::size_t> positions) {
  LabeledMatrix out;
  out.x.resize(static_cast<Eigen::Index>(positions.size()), data.x.cols());
  out.y.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(static_cast<Eigen::Index>(positions[i]));
    out.y.push_back(data.y[positions[i]]);
  }
  return out;
}

inline std::vector<std::size_t> argmax_rows(const nn::Matrix& scores) {
  std::vector<std::size_t> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
  }
  return out;
}

struct TrainingOutcome {
  nn::DenseNet net;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::optional<double> best_validation_f1;
  std::vector<double> epoch_losses;
};

/// Mini-batch Adam on cross-entropy with early stopping on validation macro
/// F1 (the best-scoring epoch's parameters are returned). With an empty
/// validation set the final parameters are returned.
inline TrainingOutcome train_classifier_net(nn::DenseNet net, const LabeledMatrix& train,
                                            const LabeledMatrix& validation, std::size_t class_count,
                                            const nn::TrainConfig& cfg,
                                            std::size_t first_trainable = 0) {
  cfg.validate();
  if (train.empty()) throw Error(ErrorCode::TooFewRows, "no training rows");
  if (net.output_dim() != class_count) throw Error(ErrorCode::DimMismatch, "net output arity");
  TrainingOutcome out;
  nn::Adam adam(net);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::optional<nn::DenseNet> best_net;
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng = Rng::derive(cfg.seed, 0xe90c00 + epoch);
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto batch = gather_rows(train, std::span(order).subspan(start, end - start));
      loss_sum += nn::train_step(net, adam, batch.x, batch.y, cfg, first_trainable);
      ++batches;
    }
    out.epoch_losses.push_back(loss_sum / static_cast<double>(batches));
    out.epochs_run = epoch + 1;

    if (validation.empty()) continue;
    const auto pred = argmax_rows(net.forward_batch(validation.x));
    const double f1 = macro_f1(validation.y, pred, class_count);
    if (!out.best_validation_f1 || f1 > *out.best_validation_f1) {
      out.best_validation_f1 = f1;
      out.best_epoch = epoch + 1;
      best_net = net;
      stale = 0;
    } else if (++stale >= cfg.early_stop_patience) {
      break;
    }
  }
  out.net = best_net ? std::move(*best_net) : std::move(net);
  return out;
}

}  // namespace epcplan
