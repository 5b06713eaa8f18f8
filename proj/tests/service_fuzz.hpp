#pragma once

// Generator of invalid requests: every case carries at least one defect the
// service must reject with a structured 4xx.

#include <string>

#include "epcplan/service.hpp"
#include "epcplan/synthetic.hpp"

namespace epcplan::testing {

struct FuzzCase {
  std::string method;
  std::string path;
  std::string body;
  std::string defect;
};

inline Json valid_profile_json(std::uint64_t seed) {
  return profile_to_json(generate_synthetic(1, seed).rows[0].profile, default_schema());
}

inline std::string random_bytes(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>(rng.below(256)));
  return s;
}

inline Json junk_value(Rng& rng) {
  switch (rng.below(6)) {
    case 0: return nullptr;
    case 1: return "text";
    case 2: return Json::array({1, 2});
    case 3: return Json::object({{"x", 1}});
    case 4: return true;
    default: return 1e300;
  }
}

inline FuzzCase fuzz_case(Rng& rng) {
  const auto& schema = default_schema();
  Json profile = valid_profile_json(rng.below(1000));
  const auto feature = schema[rng.below(schema.size())];
  Json body;
  std::string path = rng.bernoulli(0.5) ? "/plans" : "/predict";
  std::string defect;
  switch (rng.below(14)) {
    case 0:
      profile["no_such_" + std::to_string(rng.below(100))] = 1;
      defect = "unknown feature";
      break;
    case 1:
      profile.erase(feature.name);
      defect = "missing feature";
      break;
    case 2: {
      auto v = junk_value(rng);
      if (feature.is_categorical() && v.is_string()) v = "no_such_code";
      if (v.is_number() && !feature.is_categorical()) v = feature.max + 1 + std::abs(feature.max);
      profile[feature.name] = v;
      defect = "wrong type";
      break;
    }
    case 3:
      profile[feature.name] = feature.is_categorical() ? static_cast<double>(feature.codes.size()) + rng.below(5)
                                                       : feature.min - 1 - rng.uniform() * 100;
      defect = "out of range";
      break;
    case 4:
      profile = junk_value(rng);
      if (profile.is_object()) profile = Json::array();
      defect = "profile not an object";
      break;
    case 5:
      path = "/plans";
      body["categories"] = Json::array({"wall_insulation", rng.bernoulli(0.5) ? Json("attic") : Json(7)});
      defect = "bad category";
      break;
    case 6:
      path = "/plans";
      body["budget_eur"] = rng.bernoulli(0.5) ? Json(-1.0 - rng.uniform() * 1000) : Json("cheap");
      defect = "bad budget";
      break;
    case 7:
      path = "/plans";
      body["strict"] = rng.bernoulli(0.5) ? Json("yes") : Json(1);
      defect = "bad strict";
      break;
    case 8:
      path = "/plans";
      body["cost_basis"] = rng.bernoulli(0.5) ? Json("both") : Json(0);
      defect = "bad cost basis";
      break;
    case 9: {
      Json full{{"profile", profile}};
      auto text = full.dump();
      return {"POST", path, text.substr(0, rng.below(text.size())), "truncated json"};
    }
    case 10:
      return {"POST", path, random_bytes(rng, rng.below(64)), "random bytes"};
    case 11: {
      Json b{{"question", "walls"}};
      if (rng.bernoulli(0.5)) {
        const std::array<Json, 4> bad_k = {Json(0), Json(101), Json("3"), Json(2.5)};
        b["k"] = bad_k[rng.below(4)];
      } else {
        Json q = junk_value(rng);
        while (q.is_string()) q = junk_value(rng);
        b["question"] = q;
      }
      return {"POST", "/followups", b.dump(), "bad followups"};
    }
    case 12:
      return {"POST", "/followups", Json{{"k", 2}}.dump(), "missing question"};
    default:
      return {"POST", path, Json{{"profile_", profile}}.dump(), "missing profile"};
  }
  body["profile"] = profile;
  return {"POST", path, body.dump(), defect};
}

/// Empty when `r` is a structured 4xx error, else what is wrong with it.
inline std::string check_structured_error(const HttpResponse& r) {
  if (r.status < 400 || r.status >= 500) return "status " + std::to_string(r.status);
  Json j;
  try {
    j = Json::parse(r.body);
  } catch (const Json::exception&) {
    return "body is not JSON";
  }
  if (!j.is_object() || !j.contains("error")) return "no error object";
  const auto& e = j["error"];
  for (const char* k : {"code", "field", "message"})
    if (!e.contains(k) || !e[k].is_string()) return std::string("error lacks ") + k;
  if (e["code"].get<std::string>().empty()) return "empty error code";
  return {};
}

}  // namespace epcplan::testing
