#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "epcplan/errors.hpp"
#include "epcplan/model.hpp"
#include "epcplan/report.hpp"
#include "epcplan/retrofit.hpp"

namespace epcplan {

using Json = nlohmann::json;

/// Immutable state shared by all requests until the next swap.
struct Snapshot {
  std::shared_ptr<const RatingModel> model;
  std::string model_version;
  Catalog catalog;
  QuestionDb questions;
  ContextTemplates templates = default_context_templates();
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t combination_cap = 1'000'000;
  std::optional<Cents> default_budget;
  std::size_t default_followups = 3;
  /// Plan documents kept in memory; oldest dropped first.
  std::size_t max_stored_plans = 10'000;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

inline Json error_json(std::string_view code, std::string_view field, std::string_view message) {
  return Json{{"error", {{"code", code}, {"field", field}, {"message", message}}}};
}

inline HttpResponse error_response(int status, std::string_view code, std::string_view field,
                                   std::string_view message) {
  // messages can echo raw request bytes, so invalid UTF-8 is replaced
  return {status, "application/json",
          error_json(code, field, message).dump(-1, ' ', false, Json::error_handler_t::replace)};
}

/// Profile object: every schema feature by name. Categoricals take the code
/// name or its index.
inline HomeProfile parse_profile_json(const Json& j, const FeatureSchema& schema) {
  if (!j.is_object()) throw Error(ErrorCode::BadValue, "profile must be an object", "profile");
  for (const auto& [key, _] : j.items())
    if (!schema.find(key)) throw Error(ErrorCode::UnknownFeature, "feature not in schema", "profile." + key);
  HomeProfile p;
  p.values.resize(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    const std::string field = "profile." + f.name;
    auto it = j.find(f.name);
    if (it == j.end()) throw Error(ErrorCode::MissingColumn, "feature missing", field);
    double v = 0.0;
    if (f.is_categorical() && it->is_string()) {
      const auto code = f.code_index(it->get<std::string>());
      if (!code) throw Error(ErrorCode::BadValue, "unknown code", field);
      v = static_cast<double>(*code);
    } else if (it->is_number()) {
      v = it->get<double>();
    } else {
      throw Error(ErrorCode::BadValue, f.is_categorical() ? "expected code or index" : "expected number", field);
    }
    if (!std::isfinite(v) || !f.in_range(v)) throw Error(ErrorCode::BadValue, "value out of range", field);
    p.values[i] = v;
  }
  return p;
}

inline Json profile_to_json(const HomeProfile& p, const FeatureSchema& schema) {
  Json j = Json::object();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    if (f.is_categorical()) j[f.name] = f.codes.at(static_cast<std::size_t>(p.values[i]));
    else j[f.name] = p.values[i];
  }
  return j;
}

inline double eur_value(Cents c) { return static_cast<double>(c) / 100.0; }

inline Json catalog_json(const Catalog& c, const FeatureSchema& schema) {
  Json items = Json::array();
  for (const auto& i : c.items()) {
    Json muts = Json::object();
    for (const auto& m : i.mutations) {
      const auto& f = schema[m.index];
      if (f.is_categorical()) muts[m.feature] = f.codes.at(static_cast<std::size_t>(m.value));
      else muts[m.feature] = m.value;
    }
    items.push_back({{"id", i.id},
                     {"category", to_string(i.category)},
                     {"name", i.name},
                     {"mutations", muts},
                     {"price_eur", eur_value(i.price)},
                     {"grant_eur", eur_value(i.grant)}});
  }
  return Json{{"items", items}};
}

/// Canned replies for the chat boundary; never touches the network.
class ChatClientStub {
 public:
  explicit ChatClientStub(std::map<std::string, std::string> canned = {
                              {"plan", "Here is a summary of the selected retrofit plan."},
                              {"general", "Please choose retrofit components in the form to see options."}})
      : canned_(std::move(canned)) {}

  std::string respond(const std::string& category, const std::string& message) {
    std::lock_guard lock(mu_);
    log_.emplace_back(category, message);
    auto it = canned_.find(category);
    return it != canned_.end() ? it->second : canned_.at("general");
  }

  std::vector<std::pair<std::string, std::string>> calls() const {
    std::lock_guard lock(mu_);
    return log_;
  }

 private:
  std::map<std::string, std::string> canned_;
  mutable std::mutex mu_;
  std::vector<std::pair<std::string, std::string>> log_;
};

class Service {
 public:
  Service(std::shared_ptr<const Snapshot> snapshot, ServiceConfig config = {})
      : snapshot_(std::move(snapshot)), config_(std::move(config)) {
    if (!snapshot_ || !snapshot_->model) throw Error(ErrorCode::InvalidArgument, "service needs a model");
    check_templates(snapshot_->templates, snapshot_->model->encoder().schema());
  }

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lock(snapshot_mu_);
    return snapshot_;
  }

  void swap(std::shared_ptr<const Snapshot> next) {
    if (!next || !next->model) throw Error(ErrorCode::InvalidArgument, "service needs a model");
    std::lock_guard lock(snapshot_mu_);
    snapshot_ = std::move(next);
  }

  const ServiceConfig& config() const { return config_; }

  /// Socket-free entry point; every failure maps to a structured error.
  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) const {
    try {
      return route(method, path, body);
    } catch (const Json::exception& e) {
      return error_response(400, "ParseError", "body", e.what());
    } catch (const Error& e) {
      return error_response(status_for(e.code()), to_string(e.code()), e.field(), e.detail());
    } catch (const std::exception& e) {
      return error_response(500, "Internal", "", e.what());
    }
  }

  std::optional<std::string> stored_report(const std::string& id) const {
    std::lock_guard lock(plans_mu_);
    auto it = plans_.find(id);
    if (it == plans_.end()) return std::nullopt;
    return it->second;
  }

  /// Routes every method and path of `server` through `handle`.
  void install(httplib::Server& server) const {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = handle(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Put(".*", forward);
    server.Delete(".*", forward);
    server.Patch(".*", forward);
  }

 private:
  static int status_for(ErrorCode c) {
    switch (c) {
      case ErrorCode::CombinationLimitExceeded:
      case ErrorCode::EmptyCategory:
      case ErrorCode::ConflictingMutations:
        return 422;
      default:
        return 400;
    }
  }

  static Json parse_body(std::string_view body) {
    auto j = Json::parse(body.begin(), body.end());
    if (!j.is_object()) throw Error(ErrorCode::BadValue, "body must be a JSON object", "body");
    return j;
  }

  HttpResponse route(std::string_view method, std::string_view path, std::string_view body) const {
    const auto snap = snapshot();
    auto ok = [](const Json& j) {
      return HttpResponse{200, "application/json", j.dump(-1, ' ', false, Json::error_handler_t::replace)};
    };
    auto only = [&](std::string_view m) -> std::optional<HttpResponse> {
      if (method == m) return std::nullopt;
      return error_response(405, "MethodNotAllowed", "method", "use " + std::string(m));
    };

    if (path == "/health") {
      if (auto r = only("GET")) return *r;
      return ok({{"model_version", snap->model_version}, {"catalog_version", snap->catalog.version()}});
    }
    if (path == "/catalog") {
      if (auto r = only("GET")) return *r;
      return ok(catalog_json(snap->catalog, snap->model->encoder().schema()));
    }
    if (path == "/predict") {
      if (auto r = only("POST")) return *r;
      return ok(predict(*snap, parse_body(body)));
    }
    if (path == "/plans") {
      if (auto r = only("POST")) return *r;
      return ok(plans(*snap, parse_body(body)));
    }
    if (path == "/followups") {
      if (auto r = only("POST")) return *r;
      return ok(followups(*snap, parse_body(body)));
    }
    constexpr std::string_view prefix = "/plans/", suffix = "/report";
    if (path.size() > prefix.size() + suffix.size() && path.starts_with(prefix) && path.ends_with(suffix)) {
      if (auto r = only("GET")) return *r;
      const std::string id(path.substr(prefix.size(), path.size() - prefix.size() - suffix.size()));
      if (auto text = stored_report(id)) return {200, "text/plain; charset=utf-8", *text};
      return error_response(404, "NotFound", "id", "no plan with id " + id);
    }
    return error_response(404, "NotFound", "path", "no route " + std::string(path));
  }

  static Json predict(const Snapshot& snap, const Json& body) {
    const auto it = body.find("profile");
    if (it == body.end()) throw Error(ErrorCode::MissingColumn, "missing profile", "profile");
    const auto profile = parse_profile_json(*it, snap.model->encoder().schema());
    const auto p = snap.model->predict(profile);
    const auto coarse = p.coarse ? *p.coarse : to_coarse(p.rating);
    return {{"rating", to_string(p.rating)},
            {"coarse", kCoarseNames[static_cast<std::size_t>(coarse)]},
            {"probabilities", p.probabilities}};
  }

  Json plans(const Snapshot& snap, const Json& body) const {
    const auto& schema = snap.model->encoder().schema();
    const auto it = body.find("profile");
    if (it == body.end()) throw Error(ErrorCode::MissingColumn, "missing profile", "profile");
    PlanRequest req;
    req.home = parse_profile_json(*it, schema);
    req.combination_cap = config_.combination_cap;
    req.budget = config_.default_budget;
    if (auto c = body.find("categories"); c != body.end() && !c->is_null()) {
      if (!c->is_array()) throw Error(ErrorCode::BadValue, "expected array of category names", "categories");
      req.categories.clear();
      for (std::size_t i = 0; i < c->size(); ++i) {
        const auto& v = (*c)[i];
        const std::string field = "categories[" + std::to_string(i) + "]";
        if (!v.is_string()) throw Error(ErrorCode::BadValue, "expected category name", field);
        const auto cat = parse_category(v.get<std::string>());
        if (!cat) throw Error(ErrorCode::BadValue, "unknown category", field);
        req.categories.push_back(*cat);
      }
    }
    if (auto b = body.find("budget_eur"); b != body.end()) {
      if (b->is_null()) req.budget.reset();
      else if (!b->is_number()) throw Error(ErrorCode::BadValue, "expected number or null", "budget_eur");
      else {
        const double v = b->get<double>();
        if (!std::isfinite(v) || v < 0 || v > 1e13) throw Error(ErrorCode::BadValue, "budget out of range", "budget_eur");
        req.budget = cents_from_eur(v);
      }
    }
    if (auto s = body.find("strict"); s != body.end()) {
      if (!s->is_boolean()) throw Error(ErrorCode::BadValue, "expected boolean", "strict");
      req.strict = s->get<bool>();
    }
    if (auto s = body.find("cost_basis"); s != body.end()) {
      if (*s == "net") req.basis = CostBasis::Net;
      else if (*s == "gross") req.basis = CostBasis::Gross;
      else throw Error(ErrorCode::BadValue, "expected \"net\" or \"gross\"", "cost_basis");
    }

    const auto frontier = enumerate_plans(req, snap.catalog, *snap.model);
    Json rows = Json::array();
    Json ids = Json::array();
    for (const auto& [rating, plan] : frontier.entries) {
      const auto doc = plan_to_text(plan, schema, snap.templates);
      store(doc);
      rows.push_back({{"rating", to_string(rating)},
                      {"item_ids", plan.item_ids()},
                      {"total_cost_eur", eur_value(plan.total_cost)},
                      {"grant_eur", eur_value(plan.total_grant)},
                      {"net_cost_eur", eur_value(plan.net_cost)}});
      ids.push_back(doc.plan_id);
    }
    return {{"base_rating", to_string(frontier.base_rating)}, {"frontier", rows}, {"plan_ids", ids}};
  }

  Json followups(const Snapshot& snap, const Json& body) const {
    const auto q = body.find("question");
    if (q == body.end()) throw Error(ErrorCode::MissingColumn, "missing question", "question");
    if (!q->is_string()) throw Error(ErrorCode::BadValue, "expected string", "question");
    std::size_t k = config_.default_followups;
    if (auto kk = body.find("k"); kk != body.end()) {
      if (!kk->is_number_integer() || kk->get<long long>() < 1 || kk->get<long long>() > 100)
        throw Error(ErrorCode::BadValue, "expected integer in [1, 100]", "k");
      k = static_cast<std::size_t>(kk->get<long long>());
    }
    const auto r = suggest_followups(q->get<std::string>(), snap.questions, k);
    Json s = Json::array();
    for (const auto& sug : r.suggestions) s.push_back({{"text", sug.text}, {"score", sug.score}});
    return {{"suggestions", s}, {"low_confidence", r.low_confidence}};
  }

  void store(const PlanDocument& doc) const {
    std::lock_guard lock(plans_mu_);
    if (plans_.emplace(doc.plan_id, doc.text).second) {
      order_.push_back(doc.plan_id);
      while (order_.size() > config_.max_stored_plans) {
        plans_.erase(order_.front());
        order_.erase(order_.begin());
      }
    }
  }

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const Snapshot> snapshot_;
  ServiceConfig config_;
  mutable std::mutex plans_mu_;
  mutable std::map<std::string, std::string> plans_;
  mutable std::vector<std::string> order_;
};

}  // namespace epcplan
