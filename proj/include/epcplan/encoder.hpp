#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "epcplan/dataset.hpp"
#include "epcplan/errors.hpp"

namespace epcplan {

/// Z-scores continuous features with train-split statistics and one-hot
/// encodes categoricals. Slots follow schema order.
class Encoder {
 public:
  Encoder() = default;

  /// Statistics from the (cleaned) train split only.
  static Encoder fit(const Dataset& train) {
    if (train.empty()) throw Error(ErrorCode::TooFewRows, "cannot fit encoder on empty data");
    Encoder enc;
    enc.schema_ = train.schema;
    enc.build_layout();
    const double n = static_cast<double>(train.size());
    for (std::size_t i = 0; i < enc.schema_.size(); ++i) {
      if (enc.schema_[i].is_categorical()) continue;
      double sum = 0;
      for (const auto& r : train.rows) sum += r.profile.values[i];
      const double mean = sum / n;
      double ss = 0;
      for (const auto& r : train.rows) {
        const double d = r.profile.values[i] - mean;
        ss += d * d;
      }
      double sd = std::sqrt(ss / n);
      if (!(sd > 1e-12)) sd = 1.0;
      enc.mean_[i] = mean;
      enc.scale_[i] = sd;
    }
    return enc;
  }

  /// Rebuild from stored statistics (checkpoint load). `mean`/`scale` are
  /// indexed by schema position; categorical entries are ignored.
  static Encoder from_statistics(FeatureSchema schema, std::vector<double> mean,
                                 std::vector<double> scale) {
    if (mean.size() != schema.size() || scale.size() != schema.size())
      throw Error(ErrorCode::DimMismatch, "encoder statistics do not match schema");
    Encoder enc;
    enc.schema_ = std::move(schema);
    enc.build_layout();
    enc.mean_ = std::move(mean);
    enc.scale_ = std::move(scale);
    for (std::size_t i = 0; i < enc.schema_.size(); ++i)
      if (!enc.schema_[i].is_categorical() && !(enc.scale_[i] > 0))
        throw Error(ErrorCode::BadCheckpoint, "non-positive scale", enc.schema_[i].name);
    return enc;
  }

  const FeatureSchema& schema() const { return schema_; }
  std::size_t encoded_dim() const { return slot_feature_.size(); }
  const std::vector<double>& means() const { return mean_; }
  const std::vector<double>& scales() const { return scale_; }
  /// Schema feature index that owns each encoded slot.
  const std::vector<std::size_t>& slot_feature() const { return slot_feature_; }
  std::size_t first_slot(std::size_t feature) const { return offset_[feature]; }

  void encode_into(const HomeProfile& p, std::span<double> out) const {
    if (p.values.size() != schema_.size()) throw Error(ErrorCode::DimMismatch, "profile size");
    if (out.size() != encoded_dim()) throw Error(ErrorCode::DimMismatch, "output size");
    for (std::size_t i = 0; i < schema_.size(); ++i) {
      const auto& f = schema_[i];
      if (f.is_categorical()) {
        for (std::size_t c = 0; c < f.codes.size(); ++c) out[offset_[i] + c] = 0.0;
        const auto code = static_cast<std::size_t>(p.values[i]);
        if (code >= f.codes.size()) throw Error(ErrorCode::BadValue, "code index", f.name);
        out[offset_[i] + code] = 1.0;
      } else {
        out[offset_[i]] = (p.values[i] - mean_[i]) / scale_[i];
      }
    }
  }

  std::vector<double> encode(const HomeProfile& p) const {
    std::vector<double> out(encoded_dim());
    encode_into(p, out);
    return out;
  }

  /// Row-per-profile design matrix.
  Eigen::MatrixXd encode_rows(std::span<const HomeProfile> profiles) const {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(profiles.size(),
                                                                             encoded_dim());
    for (std::size_t r = 0; r < profiles.size(); ++r)
      encode_into(profiles[r], std::span<double>(m.row(static_cast<Eigen::Index>(r)).data(),
                                                 encoded_dim()));
    return m;
  }

  Eigen::MatrixXd encode_dataset(const Dataset& data) const {
    std::vector<HomeProfile> profiles;
    profiles.reserve(data.size());
    for (const auto& r : data.rows) profiles.push_back(r.profile);
    return encode_rows(profiles);
  }

 private:
  void build_layout() {
    offset_.assign(schema_.size(), 0);
    slot_feature_.clear();
    mean_.assign(schema_.size(), 0.0);
    scale_.assign(schema_.size(), 1.0);
    for (std::size_t i = 0; i < schema_.size(); ++i) {
      offset_[i] = slot_feature_.size();
      const std::size_t width = schema_[i].is_categorical() ? schema_[i].codes.size() : 1;
      for (std::size_t k = 0; k < width; ++k) slot_feature_.push_back(i);
    }
  }

  FeatureSchema schema_;
  std::vector<std::size_t> offset_;
  std::vector<std::size_t> slot_feature_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

}  // namespace epcplan
