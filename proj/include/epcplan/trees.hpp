#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "epcplan/binary_io.hpp"
#include "epcplan/dataset.hpp"
#include "epcplan/encoder.hpp"
#include "epcplan/errors.hpp"
#include "epcplan/model.hpp"
#include "epcplan/nn/loss.hpp"
#include "epcplan/rating.hpp"
#include "epcplan/rng.hpp"

namespace epcplan::trees {

using nn::Matrix;

/// Internal split (feature >= 0) or leaf (feature == -1). Rows with
/// x[feature] <= threshold go left. Classification leaves hold a class
/// distribution; regression leaves hold one value.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;
  double impurity_decrease = 0.0;
  std::vector<double> value;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_index(const double* row) const {
    std::size_t n = 0;
    while (!nodes[n].is_leaf())
      n = static_cast<std::size_t>(row[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right);
    return n;
  }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes[i].is_leaf()) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }
};

struct TreeParams {
  std::size_t max_depth = 12;
  /// Minimum total sample weight on each side of a split.
  double min_leaf = 1.0;
  /// Candidate features per node; 0 means all.
  std::size_t features_per_split = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// Weighted Gini: W - sum_k c_k^2 / W (W times the Gini index).
struct GiniStats {
  std::vector<double> counts;
  double total = 0.0;

  explicit GiniStats(std::size_t k = 0) : counts(k, 0.0) {}
  void add(std::size_t label, double w) {
    counts[label] += w;
    total += w;
  }
  double impurity() const {
    if (total <= 0.0) return 0.0;
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    return total - sq / total;
  }
  static double right_impurity(const GiniStats& parent, const GiniStats& left) {
    const double total = parent.total - left.total;
    if (total <= 0.0) return 0.0;
    double sq = 0.0;
    for (std::size_t k = 0; k < parent.counts.size(); ++k) {
      const double c = parent.counts[k] - left.counts[k];
      sq += c * c;
    }
    return total - sq / total;
  }
  void reset() {
    std::fill(counts.begin(), counts.end(), 0.0);
    total = 0.0;
  }
};

// Sum of squared errors around the weighted mean.
struct SseStats {
  double total = 0.0, sum = 0.0, sum_sq = 0.0;

  void add(double y, double w) {
    total += w;
    sum += w * y;
    sum_sq += w * y * y;
  }
  double impurity() const { return total > 0.0 ? std::max(0.0, sum_sq - sum * sum / total) : 0.0; }
  static double right_impurity(const SseStats& parent, const SseStats& left) {
    SseStats r{parent.total - left.total, parent.sum - left.sum, parent.sum_sq - left.sum_sq};
    return r.impurity();
  }
  void reset() { total = sum = sum_sq = 0.0; }
};

/// Per-feature row orders, sorted by value then row index; rows with zero
/// weight are left out.
inline std::vector<std::vector<std::uint32_t>> presort(const Matrix& x, std::span<const double> weights) {
  std::vector<std::vector<std::uint32_t>> order(static_cast<std::size_t>(x.cols()));
  std::vector<std::uint32_t> base;
  for (std::size_t r = 0; r < weights.size(); ++r)
    if (weights[r] > 0.0) base.push_back(static_cast<std::uint32_t>(r));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& o = order[static_cast<std::size_t>(f)];
    o = base;
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
  return order;
}

/// Greedy level-wise tree growth. `add_row(stats, row, weight)` feeds a row
/// into a Stats accumulator. Split ties resolve to the lowest feature index,
/// then the lowest threshold. Returns the tree and each row's leaf.
template <typename Stats, typename AddRow, typename MakeStats>
Tree grow(const Matrix& x, std::span<const double> weights,
          const std::vector<std::vector<std::uint32_t>>& order, const TreeParams& params, MakeStats make_stats,
          AddRow add_row, std::vector<int>& leaf_of_row) {
  constexpr double kMinGain = 1e-12;
  const std::size_t n = weights.size();
  const auto d = static_cast<std::size_t>(x.cols());
  Tree tree;
  std::vector<Stats> stats;  // per node
  std::vector<int> node_of(n, -1);
  tree.nodes.push_back({});
  stats.push_back(make_stats());
  for (std::size_t r = 0; r < n; ++r) {
    if (weights[r] <= 0.0) continue;
    node_of[r] = 0;
    add_row(stats[0], r, weights[r]);
  }
  tree.nodes[0].weight = stats[0].total;

  Rng rng = Rng::derive(params.seed, 0x7ee);
  std::vector<std::size_t> frontier{0};
  for (std::size_t depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    // Active nodes of this level, indexed densely.
    std::vector<int> slot(tree.nodes.size(), -1);
    std::vector<std::size_t> active;
    for (auto node : frontier) {
      if (stats[node].total < 2.0 * params.min_leaf || stats[node].impurity() <= kMinGain) continue;
      slot[node] = static_cast<int>(active.size());
      active.push_back(node);
    }
    if (active.empty()) break;

    std::vector<std::vector<char>> allowed;
    if (params.features_per_split > 0 && params.features_per_split < d) {
      allowed.assign(active.size(), std::vector<char>(d, 0));
      for (std::size_t a = 0; a < active.size(); ++a)
        for (auto f : rng.sample_without_replacement(d, params.features_per_split)) allowed[a][f] = 1;
    }

    struct Best {
      double gain = 0.0;
      int feature = -1;
      double threshold = 0.0;
    };
    std::vector<Best> best(active.size());
    std::vector<Stats> left(active.size(), make_stats());
    std::vector<double> last(active.size());
    std::vector<double> parent_imp(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) parent_imp[a] = stats[active[a]].impurity();

    for (std::size_t f = 0; f < d; ++f) {
      for (auto& s : left) s.reset();
      for (auto r : order[f]) {
        const int node = node_of[r];
        if (node < 0) continue;
        const int a = slot[static_cast<std::size_t>(node)];
        if (a < 0) continue;
        const auto ai = static_cast<std::size_t>(a);
        if (!allowed.empty() && !allowed[ai][f]) continue;
        const double v = x(r, static_cast<Eigen::Index>(f));
        auto& l = left[ai];
        const auto& parent = stats[static_cast<std::size_t>(node)];
        if (l.total > 0.0 && v > last[ai] && l.total >= params.min_leaf &&
            parent.total - l.total >= params.min_leaf) {
          const double gain = parent_imp[ai] - l.impurity() - Stats::right_impurity(parent, l);
          auto& b = best[ai];
          if (gain > kMinGain && gain > b.gain * (1.0 + 1e-12) + 1e-15) {
            b.gain = gain;
            b.feature = static_cast<int>(f);
            b.threshold = 0.5 * (last[ai] + v);
          }
        }
        add_row(l, r, weights[r]);
        last[ai] = v;
      }
    }

    std::vector<std::size_t> next;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto& b = best[a];
      if (b.feature < 0) continue;
      const auto node = active[a];
      const auto left_id = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      stats.push_back(make_stats());
      stats.push_back(make_stats());
      auto& nd = tree.nodes[node];
      nd.feature = b.feature;
      nd.threshold = b.threshold;
      nd.left = left_id;
      nd.right = left_id + 1;
      nd.impurity_decrease = b.gain;
      next.push_back(static_cast<std::size_t>(left_id));
      next.push_back(static_cast<std::size_t>(left_id + 1));
    }
    for (std::size_t r = 0; r < n; ++r) {
      const int node = node_of[r];
      if (node < 0) continue;
      const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
      if (nd.is_leaf()) continue;
      const int child = x(static_cast<Eigen::Index>(r), nd.feature) <= nd.threshold ? nd.left : nd.right;
      node_of[r] = child;
      add_row(stats[static_cast<std::size_t>(child)], r, weights[r]);
    }
    for (auto c : next) tree.nodes[c].weight = stats[c].total;
    frontier = std::move(next);
  }
  leaf_of_row = std::move(node_of);
  return tree;
}

}  // namespace detail

/// CART classifier with Gini impurity; leaves store the weighted class
/// distribution.
inline Tree fit_classification_tree(const Matrix& x, std::span<const std::size_t> labels,
                                    std::span<const double> weights, std::size_t class_count,
                                    const TreeParams& params,
                                    const std::vector<std::vector<std::uint32_t>>* presorted = nullptr) {
  if (labels.empty()) throw Error(ErrorCode::TooFewRows, "no training rows");
  std::vector<std::vector<std::uint32_t>> local;
  if (!presorted) local = detail::presort(x, weights);
  const auto& order = presorted ? *presorted : local;
  std::vector<int> leaf_of_row;
  auto tree = detail::grow<detail::GiniStats>(
      x, weights, order, params, [&] { return detail::GiniStats(class_count); },
      [&](detail::GiniStats& s, std::size_t r, double w) { s.add(labels[r], w); }, leaf_of_row);
  std::vector<std::vector<double>> dist(tree.nodes.size(), std::vector<double>(class_count, 0.0));
  for (std::size_t r = 0; r < labels.size(); ++r)
    if (leaf_of_row[r] >= 0) dist[static_cast<std::size_t>(leaf_of_row[r])][labels[r]] += weights[r];
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (!tree.nodes[i].is_leaf()) continue;
    double total = 0.0;
    for (double c : dist[i]) total += c;
    for (auto& c : dist[i]) c = total > 0.0 ? c / total : 1.0 / static_cast<double>(class_count);
    tree.nodes[i].value = std::move(dist[i]);
  }
  return tree;
}

/// Squared-error regression tree. Leaf values are left empty; `leaf_of_row`
/// receives each row's leaf so the caller can fill them.
inline Tree fit_regression_structure(const Matrix& x, std::span<const double> targets,
                                     std::span<const double> weights, const TreeParams& params,
                                     const std::vector<std::vector<std::uint32_t>>& presorted,
                                     std::vector<int>& leaf_of_row) {
  return detail::grow<detail::SseStats>(
      x, weights, presorted, params, [] { return detail::SseStats{}; },
      [&](detail::SseStats& s, std::size_t r, double w) { s.add(targets[r], w); }, leaf_of_row);
}

// ---------------------------------------------------------------------------
// Rating models

namespace detail {

inline void write_tree(BinaryWriter& out, const Tree& t) {
  out.u32(static_cast<std::uint32_t>(t.nodes.size()));
  for (const auto& n : t.nodes) {
    out.u32(static_cast<std::uint32_t>(n.feature + 1));
    out.f64(n.threshold);
    out.u32(static_cast<std::uint32_t>(n.left + 1));
    out.u32(static_cast<std::uint32_t>(n.right + 1));
    out.f64(n.weight);
    out.f64(n.impurity_decrease);
    out.f64s(n.value);
  }
}

inline Tree read_tree(BinaryReader& in, std::size_t feature_count) {
  Tree t;
  const auto count = in.u32();
  if (count == 0) throw Error(ErrorCode::BadCheckpoint, "empty tree");
  t.nodes.resize(count);
  for (auto& n : t.nodes) {
    n.feature = static_cast<int>(in.u32()) - 1;
    n.threshold = in.f64();
    n.left = static_cast<int>(in.u32()) - 1;
    n.right = static_cast<int>(in.u32()) - 1;
    n.weight = in.f64();
    n.impurity_decrease = in.f64();
    n.value = in.f64s();
  }
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& n = t.nodes[i];
    if (n.is_leaf()) continue;
    if (static_cast<std::size_t>(n.feature) >= feature_count || n.left <= static_cast<int>(i) ||
        n.right <= static_cast<int>(i) || static_cast<std::size_t>(n.left) >= count ||
        static_cast<std::size_t>(n.right) >= count)
      throw Error(ErrorCode::BadCheckpoint, "malformed tree node");
  }
  return t;
}

inline std::vector<std::size_t> labels_of(const Dataset& d) {
  std::vector<std::size_t> y;
  y.reserve(d.size());
  for (const auto& r : d.rows) y.push_back(index_of(r.rating));
  return y;
}

}  // namespace detail

class DecisionTreeModel final : public RatingModel {
 public:
  DecisionTreeModel(Encoder encoder, Tree tree) : encoder_(std::move(encoder)), tree_(std::move(tree)) {}

  std::string kind() const override { return "decision_tree"; }
  const Encoder& encoder() const override { return encoder_; }
  const Tree& tree() const { return tree_; }

  Matrix probabilities(const Matrix& encoded) const override {
    Matrix out(encoded.rows(), static_cast<Eigen::Index>(kRatingCount));
    Eigen::Matrix<double, 1, Eigen::Dynamic> row;
    for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
      row = encoded.row(r);
      const auto& v = tree_.nodes[tree_.leaf_index(row.data())].value;
      for (std::size_t k = 0; k < kRatingCount; ++k) out(r, static_cast<Eigen::Index>(k)) = v[k];
    }
    return out;
  }

  void write_payload(BinaryWriter& out) const override { detail::write_tree(out, tree_); }

 private:
  Encoder encoder_;
  Tree tree_;
};

/// Mean of member trees' leaf distributions.
class ForestModel final : public RatingModel {
 public:
  ForestModel(Encoder encoder, std::vector<Tree> trees, std::vector<std::uint64_t> seeds,
              std::size_t features_per_split)
      : encoder_(std::move(encoder)), trees_(std::move(trees)), seeds_(std::move(seeds)),
        features_per_split_(features_per_split) {
    if (trees_.empty()) throw Error(ErrorCode::InvalidArgument, "forest needs >= 1 tree");
  }

  std::string kind() const override { return "random_forest"; }
  const Encoder& encoder() const override { return encoder_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<std::uint64_t>& tree_seeds() const { return seeds_; }
  std::size_t features_per_split() const { return features_per_split_; }

  Matrix probabilities(const Matrix& encoded) const override {
    Matrix out = Matrix::Zero(encoded.rows(), static_cast<Eigen::Index>(kRatingCount));
    Eigen::Matrix<double, 1, Eigen::Dynamic> row;
    for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
      row = encoded.row(r);
      for (const auto& t : trees_) {
        const auto& v = t.nodes[t.leaf_index(row.data())].value;
        for (std::size_t k = 0; k < kRatingCount; ++k) out(r, static_cast<Eigen::Index>(k)) += v[k];
      }
    }
    return out / static_cast<double>(trees_.size());
  }

  void write_payload(BinaryWriter& out) const override {
    out.u32(static_cast<std::uint32_t>(features_per_split_));
    out.u32(static_cast<std::uint32_t>(trees_.size()));
    for (std::size_t i = 0; i < trees_.size(); ++i) {
      out.u64(seeds_[i]);
      detail::write_tree(out, trees_[i]);
    }
  }

 private:
  Encoder encoder_;
  std::vector<Tree> trees_;
  std::vector<std::uint64_t> seeds_;
  std::size_t features_per_split_;
};

/// One-vs-rest boosted regression trees; per-class scores start at log prior
/// and are combined with softmax.
class GbtModel final : public RatingModel {
 public:
  GbtModel(Encoder encoder, std::vector<double> initial, std::vector<std::vector<Tree>> rounds, double shrinkage)
      : encoder_(std::move(encoder)), initial_(std::move(initial)), rounds_(std::move(rounds)), shrinkage_(shrinkage) {}

  std::string kind() const override { return "gbt"; }
  const Encoder& encoder() const override { return encoder_; }
  std::size_t round_count() const { return rounds_.size(); }
  const std::vector<double>& initial_scores() const { return initial_; }
  const std::vector<std::vector<Tree>>& rounds() const { return rounds_; }

  Matrix scores(const Matrix& encoded) const {
    Matrix out(encoded.rows(), static_cast<Eigen::Index>(kRatingCount));
    for (std::size_t k = 0; k < kRatingCount; ++k) out.col(static_cast<Eigen::Index>(k)).setConstant(initial_[k]);
    Eigen::Matrix<double, 1, Eigen::Dynamic> row;
    for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
      row = encoded.row(r);
      for (const auto& round : rounds_)
        for (std::size_t k = 0; k < kRatingCount; ++k)
          out(r, static_cast<Eigen::Index>(k)) += shrinkage_ * round[k].nodes[round[k].leaf_index(row.data())].value[0];
    }
    return out;
  }

  Matrix probabilities(const Matrix& encoded) const override { return nn::softmax_rows(scores(encoded)); }

  void write_payload(BinaryWriter& out) const override {
    out.f64(shrinkage_);
    out.f64s(initial_);
    out.u32(static_cast<std::uint32_t>(rounds_.size()));
    for (const auto& round : rounds_)
      for (const auto& t : round) detail::write_tree(out, t);
  }

 private:
  Encoder encoder_;
  std::vector<double> initial_;
  std::vector<std::vector<Tree>> rounds_;  // rounds_[round][class]
  double shrinkage_;
};

// ---------------------------------------------------------------------------
// Fitting

inline std::shared_ptr<DecisionTreeModel> fit_decision_tree(const Dataset& train, const Encoder& encoder,
                                                            const TreeParams& params = {}) {
  if (train.empty()) throw Error(ErrorCode::TooFewRows, "no training rows");
  const Matrix x = encoder.encode_dataset(train);
  const auto y = detail::labels_of(train);
  const std::vector<double> w(train.size(), 1.0);
  return std::make_shared<DecisionTreeModel>(encoder, fit_classification_tree(x, y, w, kRatingCount, params));
}

struct ForestParams {
  std::size_t n_trees = 100;
  /// Fraction of encoded features tried per split; 0 means sqrt(dim).
  double feature_frac = 0.0;
  bool bootstrap = true;
  std::size_t max_depth = 12;
  double min_leaf = 1.0;
  std::uint64_t seed = 1;
};

inline std::size_t features_per_split(const ForestParams& p, std::size_t dim) {
  if (p.feature_frac <= 0.0)
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(dim)))));
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(p.feature_frac * static_cast<double>(dim))), 1, dim);
}

inline std::shared_ptr<ForestModel> fit_random_forest(const Dataset& train, const Encoder& encoder,
                                                      const ForestParams& params = {}) {
  if (train.empty()) throw Error(ErrorCode::TooFewRows, "no training rows");
  if (params.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "n_trees must be >= 1", "n_trees");
  const Matrix x = encoder.encode_dataset(train);
  const auto y = detail::labels_of(train);
  const std::size_t n = train.size();
  const std::size_t per_split = features_per_split(params, encoder.encoded_dim());
  std::vector<Tree> trees;
  std::vector<std::uint64_t> seeds;
  const std::vector<double> unit(n, 1.0);
  const auto full_order = params.bootstrap ? std::vector<std::vector<std::uint32_t>>{} : detail::presort(x, unit);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = Rng::derive(params.seed, t).next();
    std::vector<double> w = unit;
    if (params.bootstrap) {
      std::fill(w.begin(), w.end(), 0.0);
      Rng boot = Rng::derive(tree_seed, 0xb007);
      for (std::size_t i = 0; i < n; ++i) w[boot.below(n)] += 1.0;
    }
    TreeParams tp{params.max_depth, params.min_leaf, per_split >= encoder.encoded_dim() ? 0 : per_split, tree_seed};
    trees.push_back(fit_classification_tree(x, y, w, kRatingCount, tp, params.bootstrap ? nullptr : &full_order));
    seeds.push_back(tree_seed);
  }
  return std::make_shared<ForestModel>(encoder, std::move(trees), std::move(seeds), per_split);
}

struct GbtParams {
  std::size_t n_rounds = 200;
  std::size_t depth = 4;
  double shrinkage = 0.1;
  double min_leaf = 1.0;
};

inline std::shared_ptr<GbtModel> fit_gbt(const Dataset& train, const Encoder& encoder, const GbtParams& params = {}) {
  if (train.empty()) throw Error(ErrorCode::TooFewRows, "no training rows");
  if (params.n_rounds < 1) throw Error(ErrorCode::InvalidArgument, "n_rounds must be >= 1", "n_rounds");
  const Matrix x = encoder.encode_dataset(train);
  const auto y = detail::labels_of(train);
  const std::size_t n = train.size();
  const std::vector<double> unit(n, 1.0);
  const auto order = detail::presort(x, unit);

  std::vector<double> initial(kRatingCount);
  {
    std::vector<double> counts(kRatingCount, 0.0);
    for (auto label : y) counts[label] += 1.0;
    for (std::size_t k = 0; k < kRatingCount; ++k)
      initial[k] = std::log(std::max(counts[k] / static_cast<double>(n), 1e-12));
  }
  Matrix score(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kRatingCount));
  for (std::size_t k = 0; k < kRatingCount; ++k) score.col(static_cast<Eigen::Index>(k)).setConstant(initial[k]);

  std::vector<std::vector<Tree>> rounds;
  std::vector<double> residual(n), hessian(n);
  std::vector<int> leaf_of_row;
  const TreeParams tp{params.depth, params.min_leaf, 0, 0};
  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    std::vector<Tree> per_class;
    for (std::size_t k = 0; k < kRatingCount; ++k) {
      const auto kc = static_cast<Eigen::Index>(k);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = 1.0 / (1.0 + std::exp(-score(static_cast<Eigen::Index>(i), kc)));
        residual[i] = (y[i] == k ? 1.0 : 0.0) - p;
        hessian[i] = p * (1.0 - p);
      }
      Tree t = fit_regression_structure(x, residual, unit, tp, order, leaf_of_row);
      std::vector<double> num(t.nodes.size(), 0.0), den(t.nodes.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        num[static_cast<std::size_t>(leaf_of_row[i])] += residual[i];
        den[static_cast<std::size_t>(leaf_of_row[i])] += hessian[i];
      }
      for (std::size_t j = 0; j < t.nodes.size(); ++j)
        if (t.nodes[j].is_leaf()) t.nodes[j].value = {num[j] / std::max(den[j], 1e-12)};
      for (std::size_t i = 0; i < n; ++i)
        score(static_cast<Eigen::Index>(i), kc) +=
            params.shrinkage * t.nodes[static_cast<std::size_t>(leaf_of_row[i])].value[0];
      per_class.push_back(std::move(t));
    }
    rounds.push_back(std::move(per_class));
  }
  return std::make_shared<GbtModel>(encoder, std::move(initial), std::move(rounds), params.shrinkage);
}

// ---------------------------------------------------------------------------
// Feature importance

struct FeatureImportance {
  std::string feature;
  double impurity_decrease = 0.0;
  double share = 0.0;
};

/// Ranked by total impurity decrease (ties in schema order); only features
/// with a non-zero total are listed. One-hot slots count toward their
/// categorical feature.
struct ImportanceReport {
  std::vector<FeatureImportance> ranked;

  std::string to_csv() const {
    std::string out = "rank,feature,impurity_decrease,share\n";
    for (std::size_t i = 0; i < ranked.size(); ++i)
      out += std::to_string(i + 1) + "," + ranked[i].feature + "," + format_number(ranked[i].impurity_decrease) +
             "," + format_number(ranked[i].share) + "\n";
    return out;
  }

  std::optional<std::size_t> rank_of(std::string_view feature) const {
    for (std::size_t i = 0; i < ranked.size(); ++i)
      if (ranked[i].feature == feature) return i + 1;
    return std::nullopt;
  }
};

inline ImportanceReport feature_importance(const Tree& tree, const Encoder& encoder) {
  const auto& schema = encoder.schema();
  std::vector<double> total(schema.size(), 0.0);
  for (const auto& n : tree.nodes)
    if (!n.is_leaf()) total[encoder.slot_feature().at(static_cast<std::size_t>(n.feature))] += n.impurity_decrease;
  double sum = 0.0;
  for (double t : total) sum += t;
  ImportanceReport report;
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (total[i] > 0.0) report.ranked.push_back({schema[i].name, total[i], total[i] / sum});
  std::stable_sort(report.ranked.begin(), report.ranked.end(),
                   [](const auto& a, const auto& b) { return a.impurity_decrease > b.impurity_decrease; });
  return report;
}

inline ImportanceReport feature_importance(const DecisionTreeModel& model) {
  return feature_importance(model.tree(), model.encoder());
}

}  // namespace epcplan::trees
