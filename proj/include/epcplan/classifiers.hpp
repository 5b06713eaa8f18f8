#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "epcplan/dataset.hpp"
#include "epcplan/encoder.hpp"
#include "epcplan/errors.hpp"
#include "epcplan/model.hpp"
#include "epcplan/nn/dense_net.hpp"
#include "epcplan/nn/loss.hpp"
#include "epcplan/rating.hpp"
#include "epcplan/scarf.hpp"
#include "epcplan/training.hpp"

namespace epcplan {

/// Train/validation encoded with an encoder fit on train only. The test
/// split stays raw and is never read by the trainers.
struct PreparedSplits {
  SplitSet splits;
  Encoder encoder;
  LabeledMatrix train;
  LabeledMatrix validation;
};

inline LabeledMatrix encode_labeled(const Encoder& enc, const Dataset& data) {
  LabeledMatrix out;
  out.x = data.empty() ? nn::Matrix(0, static_cast<Eigen::Index>(enc.encoded_dim())) : enc.encode_dataset(data);
  out.y.reserve(data.size());
  for (const auto& r : data.rows) out.y.push_back(index_of(r.rating));
  return out;
}

inline PreparedSplits prepare(SplitSet splits) {
  PreparedSplits p;
  p.encoder = Encoder::fit(splits.train);
  p.train = encode_labeled(p.encoder, splits.train);
  p.validation = encode_labeled(p.encoder, splits.validation);
  p.splits = std::move(splits);
  return p;
}

/// Softmax classifier over a local label space. For SCARF models the first
/// `encoder_layers` layers are the pretrained encoder.
struct NetClassifier {
  nn::DenseNet net;
  std::size_t encoder_layers = 0;

  std::size_t classes() const { return net.output_dim(); }
  nn::Matrix probabilities(const nn::Matrix& x) const { return nn::softmax_rows(net.forward_batch(x)); }
};

/// Flat 15-way network model ("mlp" or "scarf").
class FlatNetModel final : public RatingModel {
 public:
  FlatNetModel(std::string kind, Encoder encoder, NetClassifier clf)
      : kind_(std::move(kind)), encoder_(std::move(encoder)), clf_(std::move(clf)) {
    if (clf_.classes() != kRatingCount) throw Error(ErrorCode::BadArchitecture, "flat model needs 15 outputs");
    if (clf_.net.input_dim() != encoder_.encoded_dim())
      throw Error(ErrorCode::DimMismatch, "net input does not match encoder");
  }

  std::string kind() const override { return kind_; }
  const Encoder& encoder() const override { return encoder_; }
  const NetClassifier& classifier() const { return clf_; }

  nn::Matrix probabilities(const nn::Matrix& encoded) const override { return clf_.probabilities(encoded); }

  void write_payload(BinaryWriter& out) const override {
    out.u32(static_cast<std::uint32_t>(clf_.encoder_layers));
    out.net(clf_.net);
  }

 private:
  std::string kind_;
  Encoder encoder_;
  NetClassifier clf_;
};

/// Coarse classifier over the 5 merged groups plus one fine classifier per
/// group. Inference routes each row through the predicted coarse group.
class HierarchicalModel final : public RatingModel {
 public:
  HierarchicalModel(std::string kind, Encoder encoder, NetClassifier coarse,
                    std::array<NetClassifier, kCoarseCount> fine)
      : kind_(std::move(kind)), encoder_(std::move(encoder)), coarse_(std::move(coarse)), fine_(std::move(fine)) {
    if (coarse_.classes() != kCoarseCount) throw Error(ErrorCode::BadArchitecture, "coarse model needs 5 outputs");
    for (std::size_t g = 0; g < kCoarseCount; ++g)
      if (fine_[g].classes() != group_size(coarse_from_index(g)))
        throw Error(ErrorCode::BadArchitecture,
                    "fine classifier arity mismatch for group " + std::string(to_string(coarse_from_index(g))));
  }

  std::string kind() const override { return kind_; }
  const Encoder& encoder() const override { return encoder_; }
  const NetClassifier& coarse() const { return coarse_; }
  const NetClassifier& fine(CoarseRating g) const { return fine_[index_of(g)]; }

  /// P(rating) = P(coarse group) * P(rating | group).
  nn::Matrix probabilities(const nn::Matrix& encoded) const override {
    const nn::Matrix pc = coarse_.probabilities(encoded);
    nn::Matrix out(encoded.rows(), static_cast<Eigen::Index>(kRatingCount));
    for (std::size_t g = 0; g < kCoarseCount; ++g) {
      const nn::Matrix pf = fine_[g].probabilities(encoded);
      const auto first = static_cast<Eigen::Index>(index_of(group_first(coarse_from_index(g))));
      for (Eigen::Index k = 0; k < pf.cols(); ++k)
        out.col(first + k) = pc.col(static_cast<Eigen::Index>(g)).cwiseProduct(pf.col(k));
    }
    return out;
  }

  /// Routed prediction: argmax coarse, then argmax within that group's fine
  /// classifier. `probabilities` carries the product distribution.
  std::vector<Prediction> predict_encoded(const nn::Matrix& encoded) const override {
    const nn::Matrix pc = coarse_.probabilities(encoded);
    const auto coarse_pick = argmax_rows(pc);
    std::array<nn::Matrix, kCoarseCount> pf;
    for (std::size_t g = 0; g < kCoarseCount; ++g) pf[g] = fine_[g].probabilities(encoded);
    std::vector<Prediction> out(static_cast<std::size_t>(encoded.rows()));
    for (std::size_t r = 0; r < out.size(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      auto& p = out[r];
      for (std::size_t g = 0; g < kCoarseCount; ++g) {
        const auto first = index_of(group_first(coarse_from_index(g)));
        for (Eigen::Index k = 0; k < pf[g].cols(); ++k)
          p.probabilities[first + static_cast<std::size_t>(k)] = pc(row, static_cast<Eigen::Index>(g)) * pf[g](row, k);
      }
      const auto group = coarse_from_index(coarse_pick[r]);
      const auto& fine_probs = pf[index_of(group)];
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < fine_probs.cols(); ++k)
        if (fine_probs(row, k) > fine_probs(row, best)) best = k;
      p.coarse = group;
      p.rating = group_member(group, static_cast<std::size_t>(best));
    }
    return out;
  }

  void write_payload(BinaryWriter& out) const override {
    out.u32(static_cast<std::uint32_t>(coarse_.encoder_layers));
    out.net(coarse_.net);
    for (const auto& f : fine_) {
      out.u32(static_cast<std::uint32_t>(f.encoder_layers));
      out.net(f.net);
    }
  }

 private:
  std::string kind_;
  Encoder encoder_;
  NetClassifier coarse_;
  std::array<NetClassifier, kCoarseCount> fine_;
};

struct HierarchicalPrediction {
  EnergyRating rating;
  CoarseRating coarse;
};

inline HierarchicalPrediction predict_hierarchical(const HierarchicalModel& h, const HomeProfile& p) {
  const auto pred = h.predict(p);
  return {pred.rating, *pred.coarse};
}

// ---------------------------------------------------------------------------
// Training

enum class DeepBase { Mlp, Scarf };

inline nn::DenseNet init_plain_mlp(std::size_t input_dim, std::size_t classes, const NetworkConfig& cfg,
                                   std::uint64_t seed) {
  std::vector<std::size_t> dims{input_dim};
  for (std::size_t i = 0; i < cfg.hidden_layers; ++i) dims.push_back(cfg.hidden_width);
  dims.push_back(classes);
  return nn::init_mlp(dims, seed);
}

/// One supervised stage (flat, coarse or fine). `stage_rows` is the raw train
/// subset the stage sees; SCARF pre-trains on exactly those rows.
inline NetClassifier train_stage(DeepBase base, const Dataset& stage_rows, const Encoder& encoder,
                                 const LabeledMatrix& train, const LabeledMatrix& validation,
                                 std::size_t classes, ClassifierConfig cfg, std::uint64_t stage) {
  cfg.train.seed = Rng::derive(cfg.train.seed, stage).next();
  if (base == DeepBase::Mlp) {
    auto net = init_plain_mlp(encoder.encoded_dim(), classes, cfg.network, cfg.train.seed);
    return NetClassifier{train_classifier_net(std::move(net), train, validation, classes, cfg.train).net, 0};
  }
  const scarf::CorruptionSampler sampler(stage_rows, cfg.scarf.corruption_rate);
  const auto pre = scarf::pretrain(stage_rows, encoder, cfg, sampler);
  const auto tuned = scarf::finetune(pre, train, validation, classes, cfg);
  return NetClassifier{tuned.combined(), tuned.f.f.layer_count()};
}

inline std::shared_ptr<FlatNetModel> train_flat(const PreparedSplits& data, DeepBase base,
                                                const ClassifierConfig& cfg) {
  auto clf = train_stage(base, data.splits.train, data.encoder, data.train, data.validation, kRatingCount,
                         cfg, 0);
  return std::make_shared<FlatNetModel>(base == DeepBase::Mlp ? "mlp" : "scarf", data.encoder, std::move(clf));
}

inline std::shared_ptr<FlatNetModel> train_mlp(const PreparedSplits& data, const ClassifierConfig& cfg = {}) {
  return train_flat(data, DeepBase::Mlp, cfg);
}

inline std::shared_ptr<FlatNetModel> train_scarf(const PreparedSplits& data, const ClassifierConfig& cfg = {}) {
  return train_flat(data, DeepBase::Scarf, cfg);
}

namespace detail {

inline LabeledMatrix to_coarse_labels(const LabeledMatrix& m) {
  LabeledMatrix out{m.x, {}};
  out.y.reserve(m.y.size());
  for (auto y : m.y) out.y.push_back(index_of(to_coarse(rating_from_index(y))));
  return out;
}

inline std::vector<std::size_t> rows_in_group(const LabeledMatrix& m, CoarseRating g) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.y.size(); ++i)
    if (to_coarse(rating_from_index(m.y[i])) == g) out.push_back(i);
  return out;
}

inline LabeledMatrix group_local(const LabeledMatrix& m, const std::vector<std::size_t>& rows) {
  auto out = gather_rows(m, rows);
  for (auto& y : out.y) y = index_in_group(rating_from_index(y));
  return out;
}

}  // namespace detail

/// Coarse classifier on merged labels over all train rows, then one fine
/// classifier per group trained on the rows whose true group it is.
inline std::shared_ptr<HierarchicalModel> train_coarse_to_fine(const PreparedSplits& data,
                                                               const ClassifierConfig& cfg, DeepBase base) {
  std::array<std::vector<std::size_t>, kCoarseCount> train_rows, val_rows;
  std::string empty_groups;
  for (std::size_t g = 0; g < kCoarseCount; ++g) {
    train_rows[g] = detail::rows_in_group(data.train, coarse_from_index(g));
    val_rows[g] = detail::rows_in_group(data.validation, coarse_from_index(g));
    if (train_rows[g].empty()) empty_groups += (empty_groups.empty() ? "" : ",") + std::string(to_string(coarse_from_index(g)));
  }
  if (!empty_groups.empty())
    throw Error(ErrorCode::EmptyFineGroup, "no train rows for group(s) " + empty_groups,
                empty_groups.substr(0, empty_groups.find(',')));

  auto coarse = train_stage(base, data.splits.train, data.encoder, detail::to_coarse_labels(data.train),
                            detail::to_coarse_labels(data.validation), kCoarseCount, cfg, 100);
  std::array<NetClassifier, kCoarseCount> fine;
  for (std::size_t g = 0; g < kCoarseCount; ++g) {
    const auto group = coarse_from_index(g);
    const Dataset group_rows = data.splits.train.subset(train_rows[g]);
    fine[g] = train_stage(base, group_rows, data.encoder, detail::group_local(data.train, train_rows[g]),
                          detail::group_local(data.validation, val_rows[g]), group_size(group), cfg, 101 + g);
  }
  return std::make_shared<HierarchicalModel>(base == DeepBase::Mlp ? "c2f_mlp" : "c2f_scarf", data.encoder,
                                             std::move(coarse), std::move(fine));
}

}  // namespace epcplan
