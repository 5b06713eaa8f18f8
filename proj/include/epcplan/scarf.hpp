#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "epcplan/dataset.hpp"
#include "epcplan/encoder.hpp"
#include "epcplan/errors.hpp"
#include "epcplan/nn/dense_net.hpp"
#include "epcplan/nn/loss.hpp"
#include "epcplan/nn/optimizer.hpp"
#include "epcplan/rng.hpp"
#include "epcplan/training.hpp"

namespace epcplan::scarf {

/// Marginal-distribution feature corruption. Replacement values come from
/// the raw (pre-encoding) train columns.
class CorruptionSampler {
 public:
  CorruptionSampler(const Dataset& train, double corruption_rate) : rate_(corruption_rate) {
    if (!(rate_ >= 0.0 && rate_ <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "corruption_rate must be in [0, 1]", "corruption_rate");
    if (train.empty()) throw Error(ErrorCode::TooFewRows, "sampler needs train rows");
    columns_.assign(train.schema.size(), {});
    for (auto& c : columns_) c.reserve(train.size());
    for (const auto& row : train.rows)
      for (std::size_t f = 0; f < columns_.size(); ++f) columns_[f].push_back(row.profile.values[f]);
  }

  double rate() const { return rate_; }
  std::size_t feature_count() const { return columns_.size(); }
  const std::vector<double>& column(std::size_t f) const { return columns_[f]; }

  /// ceil(rate * feature_count), guarded against 0.3 * 41 = 12.3000...01.
  std::size_t corrupted_count() const {
    const double raw = rate_ * static_cast<double>(columns_.size());
    const auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::min(n, columns_.size());
  }

 private:
  double rate_;
  std::vector<std::vector<double>> columns_;
};

/// Picks corrupted_count() features uniformly without replacement and
/// replaces each with that feature's value from an independently drawn train
/// row.
inline HomeProfile corrupt(const HomeProfile& x, const CorruptionSampler& sampler, Rng& rng) {
  if (x.values.size() != sampler.feature_count())
    throw Error(ErrorCode::DimMismatch, "profile does not match sampler schema");
  HomeProfile out = x;
  const auto chosen = rng.sample_without_replacement(sampler.feature_count(), sampler.corrupted_count());
  for (auto f : chosen) {
    const auto& col = sampler.column(f);
    out.values[f] = col[rng.below(col.size())];
  }
  return out;
}

struct ScarfEncoder {
  nn::DenseNet f;
  std::size_t epochs = 0;
  double temperature = 1.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;

  std::size_t representation_dim() const { return f.output_dim(); }
};

struct ScarfClassifier {
  ScarfEncoder f;
  nn::DenseNet g;

  nn::DenseNet combined() const { return nn::stack(f.f, g); }
};

/// Encoder f: input -> hidden stack (ReLU) -> representation (linear).
inline nn::DenseNet init_encoder(std::size_t input_dim, const ClassifierConfig& cfg, std::uint64_t seed) {
  if (cfg.scarf.representation_dim < 2)
    throw Error(ErrorCode::BadArchitecture, "representation dim must be >= 2");
  std::vector<std::size_t> dims{input_dim};
  for (std::size_t i = 0; i < cfg.network.hidden_layers; ++i) dims.push_back(cfg.network.hidden_width);
  dims.push_back(cfg.scarf.representation_dim);
  return nn::init_net(dims, nn::mlp_activations(dims.size() - 1), seed);
}

/// Head g: representation -> head_width (ReLU) -> classes (logits).
inline nn::DenseNet init_head(std::size_t representation_dim, std::size_t classes,
                              const ClassifierConfig& cfg, std::uint64_t seed) {
  return nn::init_mlp({representation_dim, cfg.scarf.head_width, classes}, seed);
}

/// One contrastive step on a batch of (original, corrupted) encoded rows.
/// Returns the pre-update InfoNCE loss.
inline double contrastive_step(nn::DenseNet& f, nn::Adam& adam, const nn::Matrix& original,
                               const nn::Matrix& corrupted, double temperature,
                               const nn::TrainConfig& cfg) {
  auto [loss, g] = nn::info_nce_net(f, original, corrupted, temperature);
  const double objective = loss + cfg.l2_weight * nn::l2_penalty(f);
  if (!std::isfinite(objective)) throw Error(ErrorCode::NonFiniteLoss, "InfoNCE loss is not finite");
  nn::add_l2_gradient(f, g, cfg.l2_weight);
  adam.step(f, g, cfg.learning_rate);
  return objective;
}

/// Label-blind contrastive pre-training of the encoder on `train` profiles.
inline ScarfEncoder pretrain(const Dataset& train, const Encoder& encoder, const ClassifierConfig& cfg,
                             const CorruptionSampler& sampler) {
  cfg.train.validate();
  if (train.size() < 2) throw Error(ErrorCode::DegenerateBatch, "pre-training needs >= 2 rows");
  ScarfEncoder out;
  out.temperature = cfg.scarf.temperature;
  out.f = init_encoder(encoder.encoded_dim(), cfg, Rng::derive(cfg.train.seed, 0xf0).next());
  nn::Adam adam(out.f);

  std::vector<HomeProfile> profiles;
  profiles.reserve(train.size());
  for (const auto& r : train.rows) profiles.push_back(r.profile);
  std::vector<std::size_t> order(profiles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Keep every batch at >= 2 rows: fold a trailing singleton into the previous batch.
  const std::size_t batch_size = std::max<std::size_t>(2, cfg.train.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.scarf.pretrain_epochs; ++epoch) {
    Rng order_rng = Rng::derive(cfg.train.seed, 0x5ca400 + epoch);
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();) {
      std::size_t end = std::min(order.size(), start + batch_size);
      if (order.size() - end == 1) end = order.size();
      Rng rng = Rng::derive(Rng::derive(cfg.train.seed, 0xc0bb00 + epoch).next(), batches);
      std::vector<HomeProfile> clean_rows, noisy_rows;
      for (std::size_t i = start; i < end; ++i) {
        clean_rows.push_back(profiles[order[i]]);
        noisy_rows.push_back(corrupt(profiles[order[i]], sampler, rng));
      }
      loss_sum += contrastive_step(out.f, adam, encoder.encode_rows(clean_rows),
                                   encoder.encode_rows(noisy_rows), cfg.scarf.temperature, cfg.train);
      ++batches;
      start = end;
    }
    out.epoch_losses.push_back(loss_sum / static_cast<double>(batches));
    out.epochs = epoch + 1;
  }
  out.final_loss = out.epoch_losses.empty() ? 0.0 : out.epoch_losses.back();
  return out;
}

/// Fresh head on the pretrained encoder; both trained jointly (or head only
/// when `freeze_encoder`) with cross-entropy and validation early stopping.
inline ScarfClassifier finetune(const ScarfEncoder& pre, const LabeledMatrix& train,
                                const LabeledMatrix& validation, std::size_t class_count,
                                const ClassifierConfig& cfg) {
  if (static_cast<std::size_t>(train.x.cols()) != pre.f.input_dim())
    throw Error(ErrorCode::DimMismatch, "encoder input dim does not match encoding");
  const auto head = init_head(pre.representation_dim(), class_count, cfg,
                              Rng::derive(cfg.train.seed, 0x9ead).next());
  const std::size_t first = cfg.scarf.freeze_encoder ? pre.f.layer_count() : 0;
  auto outcome =
      train_classifier_net(nn::stack(pre.f, head), train, validation, class_count, cfg.train, first);
  ScarfClassifier out;
  out.f = pre;
  const auto& layers = outcome.net.layers();
  const auto split_at = static_cast<std::ptrdiff_t>(pre.f.layer_count());
  out.f.f = nn::DenseNet(std::vector<nn::Layer>(layers.begin(), layers.begin() + split_at));
  out.g = nn::DenseNet(std::vector<nn::Layer>(layers.begin() + split_at, layers.end()));
  return out;
}

}  // namespace epcplan::scarf
