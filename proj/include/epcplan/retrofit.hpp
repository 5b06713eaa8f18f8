#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epcplan/dataset.hpp"
#include "epcplan/errors.hpp"
#include "epcplan/model.hpp"
#include "epcplan/rating.hpp"
#include "epcplan/record_file.hpp"
#include "epcplan/schema.hpp"

namespace epcplan {

/// Euro amounts in integer cents so sums and comparisons are exact.
using Cents = std::int64_t;

inline Cents cents_from_eur(double eur) { return static_cast<Cents>(std::llround(eur * 100.0)); }

inline std::string format_eur(Cents c) {
  if (c % 100 == 0) return std::to_string(c / 100);
  return format_number(static_cast<double>(c) / 100.0);
}

enum class ComponentCategory {
  WallInsulation,
  RoofInsulation,
  FloorInsulation,
  Window,
  Door,
  AtticInsulation,
  HeatingControls,
  Mvhr,
  SolarPanels,
};

inline constexpr std::size_t kCategoryCount = 9;

inline constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "wall_insulation", "roof_insulation",  "floor_insulation", "window",       "door",
    "attic_insulation", "heating_controls", "mvhr",            "solar_panels",
};

inline constexpr std::array<ComponentCategory, kCategoryCount> kAllCategories = {
    ComponentCategory::WallInsulation,  ComponentCategory::RoofInsulation, ComponentCategory::FloorInsulation,
    ComponentCategory::Window,          ComponentCategory::Door,           ComponentCategory::AtticInsulation,
    ComponentCategory::HeatingControls, ComponentCategory::Mvhr,           ComponentCategory::SolarPanels,
};

constexpr std::string_view to_string(ComponentCategory c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

inline std::optional<ComponentCategory> parse_category(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryCount; ++i)
    if (kCategoryNames[i] == s) return kAllCategories[i];
  return std::nullopt;
}

struct Mutation {
  std::string feature;
  std::size_t index = 0;  // schema position
  double value = 0.0;
};

struct RetrofitItem {
  std::string id;
  ComponentCategory category = ComponentCategory::WallInsulation;
  std::string name;
  std::vector<Mutation> mutations;
  Cents price = 0;
  Cents grant = 0;

  Cents net() const { return price - grant; }
};

class Catalog {
 public:
  Catalog() = default;

  /// Validates ids, mutation features and ranges, and grant <= price.
  Catalog(std::string version, std::vector<RetrofitItem> items, const FeatureSchema& schema)
      : version_(std::move(version)), items_(std::move(items)) {
    std::set<std::string> ids;
    for (auto& item : items_) {
      if (item.id.empty()) throw Error(ErrorCode::InvalidArgument, "item with empty id");
      if (!ids.insert(item.id).second) throw Error(ErrorCode::DuplicateId, "item id repeated", item.id);
      if (item.mutations.empty())
        throw Error(ErrorCode::InvalidArgument, "item mutates no feature", item.id);
      if (item.price < 0 || item.grant < 0)
        throw Error(ErrorCode::BadValue, "negative price or grant", item.id);
      if (item.grant > item.price)
        throw Error(ErrorCode::GrantExceedsPrice,
                    "grant " + format_eur(item.grant) + " exceeds price " + format_eur(item.price), item.id);
      std::set<std::size_t> touched;
      for (auto& m : item.mutations) {
        const auto idx = schema.find(m.feature);
        if (!idx) throw Error(ErrorCode::UnknownFeature, "item " + item.id + " mutates unknown feature", m.feature);
        m.index = *idx;
        if (!schema[*idx].in_range(m.value))
          throw Error(ErrorCode::BadValue,
                      "item " + item.id + " sets " + m.feature + " out of range: " + format_number(m.value), m.feature);
        if (!touched.insert(*idx).second)
          throw Error(ErrorCode::ConflictingMutations, "item " + item.id + " sets a feature twice", m.feature);
      }
    }
  }

  const std::string& version() const { return version_; }
  const std::vector<RetrofitItem>& items() const { return items_; }

  std::vector<const RetrofitItem*> items_in(ComponentCategory c) const {
    std::vector<const RetrofitItem*> out;
    for (const auto& i : items_)
      if (i.category == c) out.push_back(&i);
    return out;
  }

  const RetrofitItem* find(std::string_view id) const {
    for (const auto& i : items_)
      if (i.id == id) return &i;
    return nullptr;
  }

 private:
  std::string version_;
  std::vector<RetrofitItem> items_;
};

/// Catalog file:
///
///   version = 2024.1
///   [item]
///   id = door_alu
///   category = door
///   name = Aluminium door
///   mutation = door_u=1.7
///   price_eur = 1099
///   grant_eur = 0
///
/// `mutation` repeats; categorical values may be given by code name.
inline Catalog parse_catalog(std::string_view text, const FeatureSchema& schema) {
  const auto file = parse_record_text(text);
  const std::string version = file.header.require("version");
  std::vector<RetrofitItem> items;
  for (const auto& rec : file.records) {
    if (rec.section != "item")
      throw Error(ErrorCode::ParseError,
                  "unexpected section '" + rec.section + "' at line " + std::to_string(rec.line) + ", column 1", {},
                  rec.line);
    RetrofitItem item;
    item.id = rec.require("id");
    const auto& cat = rec.require("category");
    const auto c = parse_category(cat);
    if (!c)
      throw Error(ErrorCode::ParseError, "unknown category '" + cat + "' at line " + std::to_string(rec.line),
                  "category", rec.line);
    item.category = *c;
    item.name = rec.find("name") ? *rec.find("name") : item.id;
    for (const auto& m : rec.all("mutation")) {
      const auto eq = m.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorCode::ParseError, "mutation '" + m + "' is not feature=value, item " + item.id, item.id,
                    rec.line);
      Mutation mut;
      mut.feature = std::string(trim(std::string_view(m).substr(0, eq)));
      const auto raw = trim(std::string_view(m).substr(eq + 1));
      const auto idx = schema.find(mut.feature);
      if (!idx) throw Error(ErrorCode::UnknownFeature, "item " + item.id + " mutates unknown feature", mut.feature);
      const auto& desc = schema[*idx];
      if (desc.is_categorical()) {
        if (auto code = desc.code_index(raw)) mut.value = static_cast<double>(*code);
        else if (!parse_double(raw, mut.value))
          throw Error(ErrorCode::BadValue, "unknown code '" + std::string(raw) + "'", mut.feature, rec.line);
      } else if (!parse_double(raw, mut.value)) {
        throw Error(ErrorCode::ParseError, "bad value '" + std::string(raw) + "'", mut.feature, rec.line);
      }
      item.mutations.push_back(std::move(mut));
    }
    auto money = [&](std::string_view key, bool required) -> Cents {
      const auto* v = rec.find(key);
      if (!v) {
        if (required) rec.require(key);
        return 0;
      }
      double d = 0;
      if (!parse_double(*v, d) || !std::isfinite(d))
        throw Error(ErrorCode::ParseError, "bad amount '" + *v + "'", std::string(key), rec.line);
      return cents_from_eur(d);
    };
    item.price = money("price_eur", true);
    item.grant = money("grant_eur", false);
    items.push_back(std::move(item));
  }
  return Catalog(version, std::move(items), schema);
}

inline Catalog load_catalog(const std::string& path, const FeatureSchema& schema = default_schema()) {
  return parse_catalog(read_text_file(path), schema);
}

/// New profile with every item's mutations applied. At most one item per
/// category; two items touching one feature is an error.
inline HomeProfile apply_items(const HomeProfile& home, std::span<const RetrofitItem* const> items) {
  HomeProfile out = home;
  std::array<bool, kCategoryCount> used{};
  std::vector<std::pair<std::size_t, const RetrofitItem*>> touched;
  for (const auto* item : items) {
    auto& u = used[static_cast<std::size_t>(item->category)];
    if (u)
      throw Error(ErrorCode::InvalidArgument, "two items in category " + std::string(to_string(item->category)),
                  item->id);
    u = true;
    for (const auto& m : item->mutations) {
      for (const auto& [idx, other] : touched)
        if (idx == m.index)
          throw Error(ErrorCode::ConflictingMutations, "items " + other->id + " and " + item->id + " both set " +
                                                           m.feature,
                      m.feature);
      touched.emplace_back(m.index, item);
      if (m.index >= out.values.size())
        throw Error(ErrorCode::DimMismatch, "mutation outside profile", m.feature);
      out.values[m.index] = m.value;
    }
  }
  return out;
}

inline HomeProfile apply_items(const HomeProfile& home, const std::vector<RetrofitItem>& items) {
  std::vector<const RetrofitItem*> ptrs;
  for (const auto& i : items) ptrs.push_back(&i);
  return apply_items(home, std::span<const RetrofitItem* const>(ptrs));
}

enum class CostBasis { Net, Gross };

struct PlanRequest {
  HomeProfile home;
  std::vector<ComponentCategory> categories{kAllCategories.begin(), kAllCategories.end()};
  std::optional<Cents> budget;  // nullopt: unlimited
  std::size_t combination_cap = 1'000'000;
  /// Forces one item in every selected category (no keep-existing option).
  bool strict = false;
  CostBasis basis = CostBasis::Net;
};

struct RetrofitPlan {
  /// Ordered by category.
  std::vector<RetrofitItem> items;
  /// Selected categories left as they are.
  std::vector<ComponentCategory> kept;
  EnergyRating predicted_rating = EnergyRating::G;
  Cents total_cost = 0;
  Cents total_grant = 0;
  Cents net_cost = 0;

  std::vector<std::string> item_ids() const {
    std::vector<std::string> out;
    for (const auto& i : items) out.push_back(i.id);
    return out;
  }

  Cents cost(CostBasis b) const { return b == CostBasis::Net ? net_cost : total_cost; }

  friend bool operator==(const RetrofitPlan& a, const RetrofitPlan& b) {
    return a.item_ids() == b.item_ids() && a.kept == b.kept && a.predicted_rating == b.predicted_rating &&
           a.total_cost == b.total_cost && a.total_grant == b.total_grant && a.net_cost == b.net_cost;
  }
};

/// True when `a` should replace `b` as the frontier entry for a rating:
/// lower cost, then fewer items, then lexicographically smaller id list.
inline bool plan_better(const RetrofitPlan& a, const RetrofitPlan& b, CostBasis basis) {
  if (a.cost(basis) != b.cost(basis)) return a.cost(basis) < b.cost(basis);
  if (a.items.size() != b.items.size()) return a.items.size() < b.items.size();
  return a.item_ids() < b.item_ids();
}

struct PlanFrontier {
  std::map<EnergyRating, RetrofitPlan> entries;
  EnergyRating base_rating = EnergyRating::G;
  std::size_t combinations = 0;
  CostBasis basis = CostBasis::Net;
};

/// Batch rating oracle: the trained model or a stub.
using RatingPredictor = std::function<std::vector<EnergyRating>(std::span<const HomeProfile>)>;

inline RatingPredictor predictor_for(const RatingModel& model) {
  return [&model](std::span<const HomeProfile> profiles) {
    std::vector<EnergyRating> out;
    out.reserve(profiles.size());
    for (const auto& p : model.predict_many(profiles)) out.push_back(p.rating);
    return out;
  };
}

/// Number of combinations `req` would enumerate, saturating at u64 max.
inline std::uint64_t combination_count(const PlanRequest& req, const Catalog& catalog) {
  std::uint64_t total = 1;
  for (auto c : req.categories) {
    const std::uint64_t options = catalog.items_in(c).size() + (req.strict ? 0 : 1);
    if (options != 0 && total > std::numeric_limits<std::uint64_t>::max() / options)
      return std::numeric_limits<std::uint64_t>::max();
    total *= options;
  }
  return total;
}

/// Exhaustive search over the product of per-category options. Output does
/// not depend on enumeration order.
inline PlanFrontier enumerate_plans(const PlanRequest& req, const Catalog& catalog, const RatingPredictor& predict,
                                    std::size_t batch_size = 4096) {
  if (req.combination_cap < 1) throw Error(ErrorCode::InvalidArgument, "combination cap must be >= 1", "combination_cap");
  if (req.budget && *req.budget < 0) throw Error(ErrorCode::InvalidArgument, "negative budget", "budget");

  std::vector<ComponentCategory> cats = req.categories;
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());

  // options[c][0] == nullptr stands for keep-existing
  std::vector<std::vector<const RetrofitItem*>> options;
  for (auto c : cats) {
    auto items = catalog.items_in(c);
    if (items.empty())
      throw Error(ErrorCode::EmptyCategory, "catalog has no items in category", std::string(to_string(c)));
    std::vector<const RetrofitItem*> opts;
    if (!req.strict) opts.push_back(nullptr);
    opts.insert(opts.end(), items.begin(), items.end());
    options.push_back(std::move(opts));
  }

  PlanRequest sorted_req = req;
  sorted_req.categories = cats;
  const auto total = combination_count(sorted_req, catalog);
  if (total > req.combination_cap)
    throw Error(ErrorCode::CombinationLimitExceeded,
                "product size " + std::to_string(total) + " exceeds cap " + std::to_string(req.combination_cap),
                "combination_cap");

  PlanFrontier frontier;
  frontier.basis = req.basis;
  frontier.combinations = static_cast<std::size_t>(total);
  {
    const auto base = predict(std::span<const HomeProfile>(&req.home, 1));
    if (base.size() != 1) throw Error(ErrorCode::DimMismatch, "predictor returned wrong count");
    frontier.base_rating = base.front();
  }

  std::vector<std::size_t> digit(cats.size(), 0);
  std::vector<RetrofitPlan> pending;
  std::vector<HomeProfile> profiles;

  auto flush = [&] {
    if (pending.empty()) return;
    const auto ratings = predict(std::span<const HomeProfile>(profiles));
    if (ratings.size() != pending.size()) throw Error(ErrorCode::DimMismatch, "predictor returned wrong count");
    for (std::size_t i = 0; i < pending.size(); ++i) {
      pending[i].predicted_rating = ratings[i];
      auto it = frontier.entries.find(ratings[i]);
      if (it == frontier.entries.end()) frontier.entries.emplace(ratings[i], std::move(pending[i]));
      else if (plan_better(pending[i], it->second, req.basis)) it->second = std::move(pending[i]);
    }
    pending.clear();
    profiles.clear();
  };

  std::vector<const RetrofitItem*> chosen;
  for (std::uint64_t n = 0; n < total; ++n) {
    RetrofitPlan plan;
    chosen.clear();
    for (std::size_t c = 0; c < cats.size(); ++c) {
      const auto* item = options[c][digit[c]];
      if (item) {
        chosen.push_back(item);
        plan.total_cost += item->price;
        plan.total_grant += item->grant;
      } else {
        plan.kept.push_back(cats[c]);
      }
    }
    plan.net_cost = plan.total_cost - plan.total_grant;
    if (!req.budget || plan.cost(req.basis) <= *req.budget) {
      profiles.push_back(apply_items(req.home, std::span<const RetrofitItem* const>(chosen)));
      for (const auto* item : chosen) plan.items.push_back(*item);
      pending.push_back(std::move(plan));
      if (pending.size() >= batch_size) flush();
    }
    for (std::size_t c = cats.size(); c-- > 0;) {
      if (++digit[c] < options[c].size()) break;
      digit[c] = 0;
    }
  }
  flush();
  return frontier;
}

inline PlanFrontier enumerate_plans(const PlanRequest& req, const Catalog& catalog, const RatingModel& model) {
  validate_profile(req.home, model.encoder().schema());
  return enumerate_plans(req, catalog, predictor_for(model));
}

struct FrontierRow {
  EnergyRating rating = EnergyRating::G;
  std::vector<std::string> item_ids;
  Cents total_cost = 0;
  Cents grant = 0;
  Cents net_cost = 0;
  /// Rating steps gained over the base rating; negative if worse.
  int improvement = 0;
};

/// Frontier rows, best rating first.
inline std::vector<FrontierRow> frontier_report(const PlanFrontier& f) {
  std::vector<FrontierRow> rows;
  for (const auto& [rating, plan] : f.entries)
    rows.push_back({rating, plan.item_ids(), plan.total_cost, plan.total_grant, plan.net_cost,
                    static_cast<int>(index_of(f.base_rating)) - static_cast<int>(index_of(rating))});
  return rows;  // map order is A1 first
}

inline std::string render_frontier(const PlanFrontier& f) {
  std::string out = "base rating: " + std::string(to_string(f.base_rating)) + "\n";
  out += "rating  steps  total_eur  grant_eur  net_eur  items\n";
  for (const auto& row : frontier_report(f)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-6s  %+5d  %9s  %9s  %7s  ", std::string(to_string(row.rating)).c_str(),
                  row.improvement, format_eur(row.total_cost).c_str(), format_eur(row.grant).c_str(),
                  format_eur(row.net_cost).c_str());
    out += buf;
    if (row.item_ids.empty()) out += "(none)";
    for (std::size_t i = 0; i < row.item_ids.size(); ++i) out += (i ? "," : "") + row.item_ids[i];
    out += "\n";
  }
  return out;
}

}  // namespace epcplan
