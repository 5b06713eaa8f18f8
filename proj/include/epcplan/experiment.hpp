#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "epcplan/classifiers.hpp"
#include "epcplan/dataset.hpp"
#include "epcplan/errors.hpp"
#include "epcplan/metrics.hpp"
#include "epcplan/record_file.hpp"
#include "epcplan/synthetic.hpp"
#include "epcplan/trees.hpp"

namespace epcplan {

inline const std::vector<std::string>& known_models() {
  static const std::vector<std::string> names = {"decision_tree", "gbt",   "random_forest", "mlp",
                                                 "scarf",         "c2f_mlp", "c2f_scarf"};
  return names;
}

struct ExperimentConfig {
  std::vector<std::string> models;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  /// Dataset path, or "synthetic:<n>".
  std::string data = "synthetic:20000";
  std::uint64_t data_seed = 1;
  CleaningPolicy cleaning = CleaningPolicy::ImputeMedian;
  ClassifierConfig classifier;
  trees::TreeParams tree;
  trees::ForestParams forest;
  trees::GbtParams gbt;

  void validate() const {
    if (models.empty()) throw Error(ErrorCode::InvalidArgument, "no models named", "models");
    for (const auto& m : models)
      if (std::find(known_models().begin(), known_models().end(), m) == known_models().end())
        throw Error(ErrorCode::InvalidArgument, "unknown model '" + m + "'", "models");
    if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "no seeds", "seeds");
  }
};

/// Experiment file: header keys `models`, `seeds`, `data` plus optional
/// `data_seed`, `epochs`, `pretrain_epochs`, `hidden_width`, `batch_size`,
/// `learning_rate`, `forest_trees`, `gbt_rounds`, `cleaning`.
inline ExperimentConfig parse_experiment(std::string_view text) {
  const auto file = parse_record_text(text);
  const auto& h = file.header;
  ExperimentConfig cfg;
  auto number = [&](std::string_view key, auto& target) {
    if (const auto* v = h.find(key)) {
      double d = 0;
      if (!parse_double(*v, d) || d < 0) throw Error(ErrorCode::ParseError, "bad number", std::string(key));
      target = static_cast<std::remove_reference_t<decltype(target)>>(d);
    }
  };
  cfg.models = split_list(h.require("models"));
  if (const auto* s = h.find("seeds")) {
    cfg.seeds.clear();
    for (const auto& part : split_list(*s)) {
      double d = 0;
      if (!parse_double(part, d) || d < 0) throw Error(ErrorCode::ParseError, "bad seed", "seeds");
      cfg.seeds.push_back(static_cast<std::uint64_t>(d));
    }
  }
  if (const auto* d = h.find("data")) cfg.data = *d;
  number("data_seed", cfg.data_seed);
  number("epochs", cfg.classifier.train.max_epochs);
  number("patience", cfg.classifier.train.early_stop_patience);
  number("pretrain_epochs", cfg.classifier.scarf.pretrain_epochs);
  number("hidden_width", cfg.classifier.network.hidden_width);
  number("batch_size", cfg.classifier.train.batch_size);
  number("learning_rate", cfg.classifier.train.learning_rate);
  number("forest_trees", cfg.forest.n_trees);
  number("gbt_rounds", cfg.gbt.n_rounds);
  if (const auto* c = h.find("cleaning")) {
    if (*c == "impute_median") cfg.cleaning = CleaningPolicy::ImputeMedian;
    else if (*c == "drop_row") cfg.cleaning = CleaningPolicy::DropRow;
    else throw Error(ErrorCode::ParseError, "unknown cleaning policy", "cleaning");
  }
  cfg.validate();
  return cfg;
}

/// Loads `spec` ("synthetic:<n>" or a path) and cleans it.
inline Dataset load_experiment_data(const std::string& spec, std::uint64_t data_seed, CleaningPolicy policy,
                                    const FeatureSchema& schema = default_schema()) {
  Dataset raw;
  if (spec.rfind("synthetic:", 0) == 0) {
    double n = 0;
    if (!parse_double(spec.substr(10), n) || n < 1) throw Error(ErrorCode::InvalidArgument, "bad synthetic size", "data");
    raw = generate_synthetic(static_cast<std::size_t>(n), data_seed, schema);
  } else {
    raw = load_dataset(spec, schema);
  }
  return clean(raw, policy).data;
}

/// Trains one named model on prepared splits; `seed` drives initialization.
inline std::shared_ptr<const RatingModel> train_named_model(const std::string& name, const PreparedSplits& data,
                                                            const ExperimentConfig& cfg, std::uint64_t seed) {
  ClassifierConfig cc = cfg.classifier;
  cc.train.seed = seed;
  if (name == "mlp") return train_mlp(data, cc);
  if (name == "scarf") return train_scarf(data, cc);
  if (name == "c2f_mlp") return train_coarse_to_fine(data, cc, DeepBase::Mlp);
  if (name == "c2f_scarf") return train_coarse_to_fine(data, cc, DeepBase::Scarf);
  if (name == "decision_tree") return trees::fit_decision_tree(data.splits.train, data.encoder, cfg.tree);
  if (name == "random_forest") {
    auto fp = cfg.forest;
    fp.seed = seed;
    return trees::fit_random_forest(data.splits.train, data.encoder, fp);
  }
  if (name == "gbt") return trees::fit_gbt(data.splits.train, data.encoder, cfg.gbt);
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + name + "'", "models");
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for one value
  std::size_t count = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  m.count = v.size();
  if (v.empty()) return m;
  double s = 0.0;
  for (double x : v) s += x;
  m.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

struct SeedResult {
  std::uint64_t seed = 0;
  EvalMetrics metrics;
};

struct TrialReport {
  std::string model;
  std::vector<SeedResult> runs;

  MeanStd accuracy() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.metrics.accuracy);
    return mean_std(v);
  }
  MeanStd macro_f1() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.metrics.macro_f1);
    return mean_std(v);
  }
  /// Mean over the seeds whose test split contains the class.
  MeanStd class_accuracy(EnergyRating c) const {
    std::vector<double> v;
    for (const auto& r : runs)
      if (auto a = r.metrics.per_class_accuracy[index_of(c)]) v.push_back(*a);
    return mean_std(v);
  }
};

/// Refuses to continue if any train/validation row id also appears in test.
inline void check_no_leakage(const SplitSet& s) {
  std::set<std::size_t> seen;
  for (const auto& r : s.train.rows) seen.insert(r.id);
  for (const auto& r : s.validation.rows) seen.insert(r.id);
  for (const auto& r : s.test.rows)
    if (seen.count(r.id)) throw Error(ErrorCode::InvalidArgument, "test row " + std::to_string(r.id) + " leaked into training");
}

/// Per seed: fresh split, every model trained on that same split, evaluated
/// on its test part.
inline std::vector<TrialReport> run_trials(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  std::vector<TrialReport> reports;
  for (const auto& m : cfg.models) reports.push_back({m, {}});
  for (auto seed : cfg.seeds) {
    auto prepared = prepare(split(data, seed));
    check_no_leakage(prepared.splits);
    for (auto& report : reports) {
      try {
        auto model = train_named_model(report.model, prepared, cfg, seed);
        report.runs.push_back({seed, evaluate(*model, prepared.splits.test)});
      } catch (const Error& e) {
        throw Error(e.code(), "model " + report.model + ", seed " + std::to_string(seed) + ": " + e.detail(),
                    e.field(), e.row());
      }
    }
  }
  return reports;
}

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Macro F1 and accuracy, mean and std over seeds.
inline std::string render_table2_csv(const std::vector<TrialReport>& reports) {
  std::string out = "model,macro_f1_mean,macro_f1_std,accuracy_mean,accuracy_std,seeds\n";
  for (const auto& r : reports) {
    const auto f = r.macro_f1();
    const auto a = r.accuracy();
    out += r.model + "," + fixed(f.mean) + "," + fixed(f.std) + "," + fixed(a.mean) + "," + fixed(a.std) + "," +
           std::to_string(r.runs.size()) + "\n";
  }
  return out;
}

/// Per-class accuracy for A1, A2, A3 (mean over seeds with support; "n/a" if
/// no seed had the class in test).
inline std::string render_table3_csv(const std::vector<TrialReport>& reports) {
  std::string out = "model,A1,A2,A3,A1_seeds,A2_seeds,A3_seeds\n";
  for (const auto& r : reports) {
    out += r.model;
    std::string counts;
    for (auto c : {EnergyRating::A1, EnergyRating::A2, EnergyRating::A3}) {
      const auto m = r.class_accuracy(c);
      out += "," + (m.count ? fixed(m.mean) : std::string("n/a"));
      counts += "," + std::to_string(m.count);
    }
    out += counts + "\n";
  }
  return out;
}

/// One row per (model, seed): the values the table means are taken over.
inline std::string render_trials_csv(const std::vector<TrialReport>& reports) {
  std::string out = "model,seed,accuracy,macro_f1,A1,A2,A3\n";
  for (const auto& r : reports)
    for (const auto& run : r.runs) {
      out += r.model + "," + std::to_string(run.seed) + "," + fixed(run.metrics.accuracy, 17) + "," +
             fixed(run.metrics.macro_f1, 17);
      for (std::size_t k = 0; k < 3; ++k) {
        const auto& a = run.metrics.per_class_accuracy[k];
        out += "," + (a ? fixed(*a, 17) : std::string("n/a"));
      }
      out += "\n";
    }
  return out;
}

inline std::string percent(double v) { return fixed(100.0 * v, 1) + "%"; }

inline std::string render_tables_text(const std::vector<TrialReport>& reports) {
  std::size_t width = 5;
  for (const auto& r : reports) width = std::max(width, r.model.size());
  auto pad = [&](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::string out = "Macro F1 and accuracy on the test split (mean over " +
                    std::to_string(reports.empty() ? 0 : reports.front().runs.size()) + " seeds)\n";
  out += pad("Model", width + 2) + pad("Macro F1", 12) + "Accuracy\n";
  for (const auto& r : reports)
    out += pad(r.model, width + 2) + pad(percent(r.macro_f1().mean), 12) + percent(r.accuracy().mean) + "\n";
  out += "\nPer-class accuracy on the test split\n";
  out += pad("Model", width + 2) + pad("A1", 10) + pad("A2", 10) + "A3\n";
  for (const auto& r : reports) {
    out += pad(r.model, width + 2);
    for (auto c : {EnergyRating::A1, EnergyRating::A2, EnergyRating::A3}) {
      const auto m = r.class_accuracy(c);
      out += pad(m.count ? percent(m.mean) : "n/a", c == EnergyRating::A3 ? 0 : 10);
    }
    out += "\n";
  }
  return out;
}

}  // namespace epcplan
