#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epcplan/errors.hpp"
#include "epcplan/record_file.hpp"
#include "epcplan/retrofit.hpp"
#include "epcplan/rng.hpp"
#include "epcplan/schema.hpp"

namespace epcplan {

// ---------------------------------------------------------------- templates

/// Per-feature context sentence appended to each mutated-feature line.
using ContextTemplates = std::map<std::string, std::string, std::less<>>;

inline const ContextTemplates& default_context_templates() {
  static const ContextTemplates t = {
      {"wall_area", "external wall area exposed to heat loss"},
      {"roof_area", "roof area exposed to heat loss"},
      {"floor_area", "ground floor area exposed to heat loss"},
      {"window_area", "total glazed area"},
      {"door_area", "total external door area"},
      {"total_floor_area", "heated floor area of the dwelling"},
      {"storey_count", "number of storeys"},
      {"room_height", "average room height"},
      {"living_area_fraction", "share of floor area in the main living zone"},
      {"thermal_mass", "heat capacity of the fabric; higher smooths temperature swings"},
      {"dwelling_type", "built form of the dwelling"},
      {"year_of_construction", "construction year; older stock usually has weaker fabric"},
      {"wall_u", "wall heat loss coefficient; lower is better"},
      {"roof_u", "roof heat loss coefficient; lower is better"},
      {"floor_u", "floor heat loss coefficient; lower is better"},
      {"window_u", "window heat loss coefficient; lower is better"},
      {"door_u", "door heat loss coefficient; lower is better"},
      {"attic_insulation_mm", "attic insulation depth; thicker is better"},
      {"thermal_bridging_factor", "extra loss at junctions; lower is better"},
      {"air_permeability", "air leakage at test pressure; lower is better"},
      {"glazing_type", "number of glazing panes"},
      {"draught_lobby", "enclosed entrance porch that limits draughts"},
      {"main_heating_efficiency", "seasonal efficiency of the main heating system; higher is better"},
      {"main_heating_fuel", "fuel used by the main heating system"},
      {"secondary_heating_fraction", "share of heat from secondary heaters"},
      {"secondary_heating_efficiency", "efficiency of secondary heaters; higher is better"},
      {"heating_controls_score", "quality of heating controls such as zoning and thermostats; higher is better"},
      {"distribution_loss_factor", "heat lost in pipework; lower is better"},
      {"pumps_fans_count", "number of circulation pumps and fans"},
      {"ventilation_air_changes", "air changes per hour from ventilation; lower loses less heat"},
      {"mvhr_efficiency", "heat recovered from exhaust air by mechanical ventilation; higher is better"},
      {"solar_pv_kw", "installed solar panel capacity; higher offsets more grid electricity"},
      {"water_storage_volume", "hot water cylinder volume"},
      {"cylinder_insulation_mm", "hot water cylinder insulation; thicker is better"},
      {"water_heating_efficiency", "efficiency of water heating; higher is better"},
      {"solar_water_fraction", "share of hot water from solar thermal"},
      {"hot_water_demand", "daily hot water use"},
      {"cylinder_thermostat", "thermostat on the hot water cylinder"},
      {"county_code", "county of the dwelling"},
      {"altitude", "site altitude; higher sites are colder"},
      {"heating_degree_days", "local heating demand from climate"},
  };
  return t;
}

/// Template file: one `[template]` record per feature with `feature` and
/// `context` keys.
inline ContextTemplates parse_context_templates(std::string_view text) {
  ContextTemplates out;
  for (const auto& rec : parse_record_text(text).records) {
    if (rec.section != "template") continue;
    out[rec.require("feature")] = rec.require("context");
  }
  return out;
}

/// Throws MissingTemplate naming the first schema feature without a context.
inline void check_templates(const ContextTemplates& t, const FeatureSchema& schema) {
  for (const auto& f : schema.features())
    if (t.find(f.name) == t.end()) throw Error(ErrorCode::MissingTemplate, "no context template", f.name);
}

// ---------------------------------------------------------------- plan text

inline constexpr std::string_view kContextSeparator = " — ";

struct PlanDocument {
  std::string plan_id;
  /// Machine form: key and bare value (numbers in shortest round-trip form).
  std::vector<std::pair<std::string, std::string>> structured;
  /// One `key: value [unit] — context` line per structured pair.
  std::string text;
};

/// Line order: rating, costs, then items ordered by the first schema feature
/// they touch, each followed by its mutated features. An empty plan carries
/// only the rating and a zero net cost.
inline PlanDocument plan_to_text(const RetrofitPlan& plan, const FeatureSchema& schema,
                                 const ContextTemplates& templates = default_context_templates()) {
  struct Line {
    std::string key, value, unit, context;
  };
  std::vector<Line> lines;
  lines.push_back({"rating", std::string(to_string(plan.predicted_rating)), "",
                   plan.items.empty() ? "predicted energy rating with no retrofit"
                                      : "predicted energy rating after retrofit"});
  if (!plan.items.empty()) {
    lines.push_back({"total_cost_eur", format_eur(plan.total_cost), "EUR", "sum of item prices"});
    lines.push_back({"grant_eur", format_eur(plan.total_grant), "EUR", "sum of available grants"});
  }
  lines.push_back({"net_cost_eur", format_eur(plan.net_cost), "EUR", "price after grants"});

  std::vector<const RetrofitItem*> items;
  for (const auto& i : plan.items) items.push_back(&i);
  auto first_feature = [](const RetrofitItem* i) {
    std::size_t m = std::numeric_limits<std::size_t>::max();
    for (const auto& mut : i->mutations) m = std::min(m, mut.index);
    return m;
  };
  std::stable_sort(items.begin(), items.end(),
                   [&](auto* a, auto* b) { return first_feature(a) < first_feature(b); });
  for (const auto* item : items) {
    lines.push_back({"item." + std::string(to_string(item->category)), item->id, "",
                     item->name + ", " + format_eur(item->price) + " EUR, grant " + format_eur(item->grant) + " EUR"});
    auto muts = item->mutations;
    std::sort(muts.begin(), muts.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    for (const auto& m : muts) {
      const auto& desc = schema[schema.index_of(m.feature)];
      const auto t = templates.find(m.feature);
      if (t == templates.end()) throw Error(ErrorCode::MissingTemplate, "no context template", m.feature);
      std::string value = desc.is_categorical() ? desc.codes.at(static_cast<std::size_t>(m.value))
                                                : format_number(m.value);
      lines.push_back({m.feature, value, desc.is_categorical() ? "" : desc.unit, t->second});
    }
  }

  PlanDocument doc;
  std::string body;
  for (const auto& l : lines) {
    doc.structured.emplace_back(l.key, l.value);
    body += l.key + "=" + l.value + "\n";
    doc.text += l.key + ": " + l.value + (l.unit.empty() ? "" : " " + l.unit) + std::string(kContextSeparator) +
                l.context + "\n";
  }
  doc.plan_id = content_id(body);
  return doc;
}

/// Recovers the key/value prefixes of a plan text (unit and context dropped).
inline std::vector<std::pair<std::string, std::string>> parse_plan_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto colon = line.find(": ");
    const auto sep = line.find(kContextSeparator);
    if (colon == std::string_view::npos || sep == std::string_view::npos || sep < colon)
      throw Error(ErrorCode::ParseError, "malformed plan line " + std::to_string(line_no), {}, line_no);
    auto value = line.substr(colon + 2, sep - colon - 2);
    value = value.substr(0, value.find(' '));
    out.emplace_back(std::string(line.substr(0, colon)), std::string(value));
  }
  return out;
}

// ---------------------------------------------------------------- follow-ups

/// Lowercase alphanumeric runs.
inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) cur += static_cast<char>(std::tolower(c));
    else if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct QuestionEntry {
  std::string question;
  std::vector<std::string> follow_ups;
};

/// Sparse l2-normalized tf-idf vector, sorted by term id.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

inline double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first == b[j].first) s += a[i++].second * b[j++].second;
    else if (a[i].first < b[j].first) ++i;
    else ++j;
  }
  return s;
}

/// Weight of term t in a text is tf(t) * idf(t), tf the raw count and
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the N db questions.
class QuestionDb {
 public:
  QuestionDb() = default;

  explicit QuestionDb(std::vector<QuestionEntry> entries) : entries_(std::move(entries)) {
    std::vector<std::vector<std::string>> tokens;
    for (const auto& e : entries_) {
      tokens.push_back(tokenize(e.question));
      for (const auto& t : tokens.back()) vocab_.emplace(t, vocab_.size());
    }
    std::vector<std::size_t> df(vocab_.size(), 0);
    for (const auto& toks : tokens) {
      std::set<std::size_t> seen;
      for (const auto& t : toks) seen.insert(vocab_.at(t));
      for (auto id : seen) ++df[id];
    }
    const double n = static_cast<double>(entries_.size());
    idf_.resize(vocab_.size());
    for (std::size_t i = 0; i < df.size(); ++i) idf_[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
    for (const auto& toks : tokens) vectors_.push_back(embed_tokens(toks));
  }

  const std::vector<QuestionEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t vocabulary_size() const { return vocab_.size(); }
  const SparseVector& vector(std::size_t i) const { return vectors_[i]; }
  std::optional<double> idf(std::string_view term) const {
    auto it = vocab_.find(std::string(term));
    if (it == vocab_.end()) return std::nullopt;
    return idf_[it->second];
  }

  /// Out-of-vocabulary tokens are ignored.
  SparseVector embed(std::string_view text) const { return embed_tokens(tokenize(text)); }

 private:
  SparseVector embed_tokens(const std::vector<std::string>& toks) const {
    std::map<std::size_t, double> tf;
    for (const auto& t : toks)
      if (auto it = vocab_.find(t); it != vocab_.end()) tf[it->second] += 1.0;
    SparseVector v;
    double norm = 0.0;
    for (const auto& [id, count] : tf) {
      const double w = count * idf_[id];
      v.emplace_back(id, w);
      norm += w * w;
    }
    if (norm > 0.0)
      for (auto& [id, w] : v) w /= std::sqrt(norm);
    return v;
  }

  std::vector<QuestionEntry> entries_;
  std::map<std::string, std::size_t> vocab_;
  std::vector<double> idf_;
  std::vector<SparseVector> vectors_;
};

/// Question file: `[question]` records with one `text` and repeated
/// `follow_up` keys.
inline QuestionDb parse_question_db(std::string_view text) {
  std::vector<QuestionEntry> entries;
  for (const auto& rec : parse_record_text(text).records) {
    if (rec.section != "question")
      throw Error(ErrorCode::ParseError, "unexpected section '" + rec.section + "'", {}, rec.line);
    entries.push_back({rec.require("text"), rec.all("follow_up")});
  }
  if (entries.empty()) throw Error(ErrorCode::ParseError, "question file has no entries");
  return QuestionDb(std::move(entries));
}

inline QuestionDb load_question_db(const std::string& path) { return parse_question_db(read_text_file(path)); }

struct RankedQuestion {
  std::size_t index = 0;
  double score = 0.0;
};

struct Suggestion {
  std::string text;
  /// Similarity of the db question it came from.
  double score = 0.0;
};

struct FollowupResult {
  std::vector<RankedQuestion> ranking;  // every db question, best first
  std::vector<Suggestion> suggestions;
  bool low_confidence = false;
};

inline constexpr double kLowConfidenceScore = 0.2;

/// Follow-ups of the best-matching question, then of the next ones when it
/// has fewer than k. Zero-similarity questions contribute nothing.
inline FollowupResult suggest_followups(std::string_view question, const QuestionDb& db, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1", "k");
  if (db.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty question db");
  FollowupResult r;
  const auto q = db.embed(question);
  for (std::size_t i = 0; i < db.size(); ++i) r.ranking.push_back({i, std::clamp(dot(q, db.vector(i)), 0.0, 1.0)});
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  std::set<std::string> seen;
  for (const auto& rq : r.ranking) {
    if (r.suggestions.size() >= k || rq.score <= 0.0) break;
    for (const auto& f : db.entries()[rq.index].follow_ups) {
      if (r.suggestions.size() >= k) break;
      if (seen.insert(f).second) r.suggestions.push_back({f, rq.score});
    }
  }
  r.low_confidence = r.ranking.front().score < kLowConfidenceScore;
  return r;
}

}  // namespace epcplan
