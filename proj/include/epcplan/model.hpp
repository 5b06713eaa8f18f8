#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epcplan/binary_io.hpp"
#include "epcplan/dataset.hpp"
#include "epcplan/encoder.hpp"
#include "epcplan/nn/dense_net.hpp"
#include "epcplan/rating.hpp"

namespace epcplan {

using Probabilities = std::array<double, kRatingCount>;

struct Prediction {
  EnergyRating rating = EnergyRating::G;
  Probabilities probabilities{};
  /// Set by coarse-to-fine models: the routed coarse group.
  std::optional<CoarseRating> coarse;
};

/// First index of the maximum; ties go to the better (lower) rating.
template <typename Range>
std::size_t argmax_first(const Range& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < static_cast<std::size_t>(std::size(values)); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

/// A frozen rating classifier. Implementations are immutable after
/// construction and safe to share across threads.
class RatingModel {
 public:
  virtual ~RatingModel() = default;

  /// Checkpoint section tag, e.g. "mlp", "c2f_scarf", "random_forest".
  virtual std::string kind() const = 0;
  virtual const Encoder& encoder() const = 0;

  /// n x 15 class probabilities for encoded rows.
  virtual nn::Matrix probabilities(const nn::Matrix& encoded) const = 0;

  virtual std::vector<Prediction> predict_encoded(const nn::Matrix& encoded) const {
    const nn::Matrix probs = probabilities(encoded);
    std::vector<Prediction> out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      auto& p = out[static_cast<std::size_t>(r)];
      for (std::size_t k = 0; k < kRatingCount; ++k) p.probabilities[k] = probs(r, static_cast<Eigen::Index>(k));
      p.rating = rating_from_index(argmax_first(p.probabilities));
    }
    return out;
  }

  /// Payload after the common checkpoint header.
  virtual void write_payload(BinaryWriter& out) const = 0;

  std::vector<Prediction> predict_many(std::span<const HomeProfile> profiles) const {
    if (profiles.empty()) return {};
    return predict_encoded(encoder().encode_rows(profiles));
  }

  Prediction predict(const HomeProfile& p) const {
    validate_profile(p, encoder().schema());
    return predict_many(std::span<const HomeProfile>(&p, 1)).front();
  }

  std::vector<EnergyRating> predict_ratings(const Dataset& data) const {
    std::vector<EnergyRating> out;
    out.reserve(data.size());
    if (data.empty()) return out;
    for (const auto& p : predict_encoded(encoder().encode_dataset(data))) out.push_back(p.rating);
    return out;
  }
};

}  // namespace epcplan
