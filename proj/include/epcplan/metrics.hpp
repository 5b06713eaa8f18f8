#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "epcplan/dataset.hpp"
#include "epcplan/errors.hpp"
#include "epcplan/model.hpp"
#include "epcplan/rating.hpp"

namespace epcplan {

/// Macro F1 over `class_count` labels, averaging only classes present in
/// `truth`. A present class that is never predicted scores F1 = 0.
inline double macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> pred,
                       std::size_t class_count) {
  std::vector<std::size_t> tp(class_count, 0), fp(class_count, 0), fn(class_count, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == pred[i]) {
      ++tp[truth[i]];
    } else {
      ++fn[truth[i]];
      ++fp[pred[i]];
    }
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < class_count; ++k) {
    if (tp[k] + fn[k] == 0) continue;
    ++present;
    const double denom = 2.0 * static_cast<double>(tp[k]) + static_cast<double>(fp[k] + fn[k]);
    sum += 2.0 * static_cast<double>(tp[k]) / denom;
  }
  return present ? sum / static_cast<double>(present) : 0.0;
}

struct EvalMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  /// Recall per class; empty for classes with no test rows.
  std::array<std::optional<double>, kRatingCount> per_class_accuracy{};
  /// confusion[truth][predicted]
  std::array<std::array<std::size_t, kRatingCount>, kRatingCount> confusion{};
  std::size_t n_test = 0;
  /// Classes with no test rows; excluded from macro F1.
  std::vector<EnergyRating> absent_classes;
};

inline EvalMetrics compute_metrics(std::span<const EnergyRating> truth,
                                   std::span<const EnergyRating> predicted) {
  if (truth.empty()) throw Error(ErrorCode::EmptyTest, "no test rows");
  if (truth.size() != predicted.size()) throw Error(ErrorCode::DimMismatch, "truth/prediction length");
  EvalMetrics m;
  m.n_test = truth.size();
  std::vector<std::size_t> t(truth.size()), p(truth.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    t[i] = index_of(truth[i]);
    p[i] = index_of(predicted[i]);
    ++m.confusion[t[i]][p[i]];
    if (t[i] == p[i]) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  m.macro_f1 = macro_f1(t, p, kRatingCount);
  for (std::size_t k = 0; k < kRatingCount; ++k) {
    std::size_t support = 0;
    for (auto c : m.confusion[k]) support += c;
    if (support == 0) m.absent_classes.push_back(rating_from_index(k));
    else m.per_class_accuracy[k] = static_cast<double>(m.confusion[k][k]) / static_cast<double>(support);
  }
  return m;
}

inline EvalMetrics evaluate(const RatingModel& model, const Dataset& test) {
  if (test.empty()) throw Error(ErrorCode::EmptyTest, "no test rows");
  std::vector<EnergyRating> truth;
  truth.reserve(test.size());
  for (const auto& r : test.rows) truth.push_back(r.rating);
  const auto pred = model.predict_ratings(test);
  return compute_metrics(truth, pred);
}

}  // namespace epcplan
