#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "epcplan/errors.hpp"
#include "epcplan/record_file.hpp"
#include "epcplan/rng.hpp"

namespace epcplan {

enum class FeatureKind { Continuous, Categorical };
enum class FeatureGroup { Envelope, Fabric, Heating, HotWater, Spatial };

constexpr std::string_view to_string(FeatureKind k) {
  return k == FeatureKind::Continuous ? "continuous" : "categorical";
}

constexpr std::string_view to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::Envelope: return "envelope";
    case FeatureGroup::Fabric: return "fabric";
    case FeatureGroup::Heating: return "heating";
    case FeatureGroup::HotWater: return "hot-water";
    case FeatureGroup::Spatial: return "spatial";
  }
  return "envelope";
}

struct FeatureDescriptor {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  std::string unit;
  double min = 0.0;
  double max = 0.0;
  FeatureGroup group = FeatureGroup::Envelope;
  /// A recorded zero is a missing measurement rather than a real value.
  bool nonzero = false;
  /// Categorical codes; empty for continuous features.
  std::vector<std::string> codes;

  bool is_categorical() const { return kind == FeatureKind::Categorical; }

  std::optional<std::size_t> code_index(std::string_view code) const {
    for (std::size_t i = 0; i < codes.size(); ++i)
      if (codes[i] == code) return i;
    return std::nullopt;
  }

  bool in_range(double v) const {
    if (is_categorical()) return v >= 0 && v < static_cast<double>(codes.size()) && v == std::floor(v);
    return v >= min && v <= max;
  }
};

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Ordered feature dictionary. Everything downstream is driven by it.
class FeatureSchema {
 public:
  FeatureSchema() = default;

  explicit FeatureSchema(std::vector<FeatureDescriptor> features) : features_(std::move(features)) {
    for (std::size_t i = 0; i < features_.size(); ++i) {
      const auto& f = features_[i];
      if (f.name.empty()) throw Error(ErrorCode::InvalidArgument, "feature with empty name");
      if (!index_.emplace(f.name, i).second)
        throw Error(ErrorCode::DuplicateId, "duplicate feature name", f.name);
      if (f.is_categorical() && f.codes.empty())
        throw Error(ErrorCode::InvalidArgument, "categorical feature without codes", f.name);
      if (!f.is_categorical() && !(f.min <= f.max))
        throw Error(ErrorCode::InvalidArgument, "min exceeds max", f.name);
    }
  }

  std::size_t size() const { return features_.size(); }
  const FeatureDescriptor& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<FeatureDescriptor>& features() const { return features_; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw Error(ErrorCode::UnknownFeature, "feature not in schema", std::string(name));
  }

  std::size_t continuous_count() const {
    std::size_t n = 0;
    for (const auto& f : features_) n += f.is_categorical() ? 0 : 1;
    return n;
  }

  /// Canonical record-file form; also the input of `hash()`.
  std::string to_text() const {
    std::string out = "# feature schema\nversion = 1\n";
    for (const auto& f : features_) {
      out += "\n[feature]\nname = " + f.name + "\nkind = " + std::string(to_string(f.kind)) +
             "\ngroup = " + std::string(to_string(f.group)) + "\n";
      if (f.is_categorical()) {
        out += "codes = ";
        for (std::size_t i = 0; i < f.codes.size(); ++i) out += (i ? "," : "") + f.codes[i];
        out += "\n";
      } else {
        out += "unit = " + f.unit + "\nmin = " + format_number(f.min) +
               "\nmax = " + format_number(f.max) + "\n";
        if (f.nonzero) out += "nonzero = true\n";
      }
    }
    return out;
  }

  std::uint64_t hash() const {
    Fnv1a h;
    h.update(to_text());
    return h.digest();
  }

  static FeatureSchema parse(std::string_view text) {
    const auto file = parse_record_text(text);
    std::vector<FeatureDescriptor> out;
    for (const auto& rec : file.records) {
      if (rec.section != "feature")
        throw Error(ErrorCode::ParseError, "unexpected section '" + rec.section + "'", {}, rec.line);
      FeatureDescriptor f;
      f.name = rec.require("name");
      const auto& kind = rec.require("kind");
      if (kind == "continuous") f.kind = FeatureKind::Continuous;
      else if (kind == "categorical") f.kind = FeatureKind::Categorical;
      else throw Error(ErrorCode::ParseError, "unknown kind '" + kind + "'", f.name, rec.line);
      f.group = parse_group(rec.require("group"), rec.line);
      if (f.is_categorical()) {
        f.codes = split_list(rec.require("codes"));
      } else {
        f.unit = rec.require("unit");
        if (!parse_double(rec.require("min"), f.min) || !parse_double(rec.require("max"), f.max))
          throw Error(ErrorCode::ParseError, "bad min/max", f.name, rec.line);
        if (const auto* nz = rec.find("nonzero")) f.nonzero = (*nz == "true");
      }
      out.push_back(std::move(f));
    }
    return FeatureSchema(std::move(out));
  }

  static FeatureSchema load(const std::string& path) { return parse(read_text_file(path)); }

  friend bool operator==(const FeatureSchema& a, const FeatureSchema& b) {
    return a.to_text() == b.to_text();
  }

 private:
  static FeatureGroup parse_group(const std::string& s, std::size_t line) {
    if (s == "envelope") return FeatureGroup::Envelope;
    if (s == "fabric") return FeatureGroup::Fabric;
    if (s == "heating") return FeatureGroup::Heating;
    if (s == "hot-water") return FeatureGroup::HotWater;
    if (s == "spatial") return FeatureGroup::Spatial;
    throw Error(ErrorCode::ParseError, "unknown group '" + s + "'", {}, line);
  }

  std::vector<FeatureDescriptor> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// The 26 county registration codes of the Republic of Ireland.
inline const std::vector<std::string>& county_codes() {
  static const std::vector<std::string> codes = {
      "CW", "CN", "CE", "CO", "DL", "D",  "G",  "KY", "KE", "KK", "LS", "LM", "L",
      "LD", "LH", "MO", "MH", "MN", "OY", "RN", "SO", "T",  "W",  "WH", "WX", "WW"};
  return codes;
}

/// The shipped 41-feature data dictionary (data/schema.txt is its text form).
inline const FeatureSchema& default_schema() {
  static const FeatureSchema schema = [] {
    using K = FeatureKind;
    using G = FeatureGroup;
    auto cont = [](std::string name, std::string unit, double lo, double hi, G g, bool nz = false) {
      return FeatureDescriptor{std::move(name), K::Continuous, std::move(unit), lo, hi, g, nz, {}};
    };
    auto cat = [](std::string name, G g, std::vector<std::string> codes) {
      return FeatureDescriptor{std::move(name), K::Categorical, "", 0, 0, g, false, std::move(codes)};
    };
    return FeatureSchema({
        cont("wall_area", "m2", 10, 600, G::Envelope, true),
        cont("roof_area", "m2", 5, 400, G::Envelope, true),
        cont("floor_area", "m2", 5, 400, G::Envelope, true),
        cont("window_area", "m2", 1, 150, G::Envelope, true),
        cont("door_area", "m2", 1, 20, G::Envelope, true),
        cont("total_floor_area", "m2", 20, 800, G::Envelope, true),
        cont("storey_count", "storeys", 1, 4, G::Envelope),
        cont("room_height", "m", 2.0, 4.0, G::Envelope, true),
        cont("living_area_fraction", "fraction", 0.05, 0.6, G::Envelope),
        cont("thermal_mass", "kJ/m2K", 50, 450, G::Envelope),
        cat("dwelling_type", G::Envelope,
            {"detached", "semi_detached", "mid_terrace", "end_terrace", "apartment", "bungalow"}),
        cont("year_of_construction", "year", 1700, 2025, G::Envelope),
        cont("wall_u", "W/m2K", 0.1, 3.0, G::Fabric, true),
        cont("roof_u", "W/m2K", 0.1, 3.0, G::Fabric, true),
        cont("floor_u", "W/m2K", 0.1, 2.0, G::Fabric, true),
        cont("window_u", "W/m2K", 0.5, 5.8, G::Fabric, true),
        cont("door_u", "W/m2K", 0.5, 3.5, G::Fabric, true),
        cont("attic_insulation_mm", "mm", 0, 400, G::Fabric),
        cont("thermal_bridging_factor", "W/m2K", 0, 0.15, G::Fabric),
        cont("air_permeability", "m3/h.m2", 1, 25, G::Fabric),
        cat("glazing_type", G::Fabric, {"single", "double", "triple"}),
        cat("draught_lobby", G::Fabric, {"no", "yes"}),
        cont("main_heating_efficiency", "fraction", 0.2, 1.1, G::Heating, true),
        cat("main_heating_fuel", G::Heating,
            {"mains_gas", "heating_oil", "electricity", "lpg", "solid_fuel", "biomass"}),
        cont("secondary_heating_fraction", "fraction", 0, 0.3, G::Heating),
        cont("secondary_heating_efficiency", "fraction", 0.2, 1.0, G::Heating),
        cont("heating_controls_score", "score", 0, 3, G::Heating),
        cont("distribution_loss_factor", "factor", 1.0, 1.5, G::Heating),
        cont("pumps_fans_count", "count", 0, 6, G::Heating),
        cont("ventilation_air_changes", "ach", 0.1, 2.0, G::Heating),
        cont("mvhr_efficiency", "fraction", 0, 0.95, G::Heating),
        cont("solar_pv_kw", "kW", 0, 10, G::Heating),
        cont("water_storage_volume", "litres", 0, 500, G::HotWater),
        cont("cylinder_insulation_mm", "mm", 0, 100, G::HotWater),
        cont("water_heating_efficiency", "fraction", 0.2, 1.1, G::HotWater),
        cont("solar_water_fraction", "fraction", 0, 0.7, G::HotWater),
        cont("hot_water_demand", "litres/day", 40, 300, G::HotWater),
        cat("cylinder_thermostat", G::HotWater, {"no", "yes"}),
        cat("county_code", G::Spatial, county_codes()),
        cont("altitude", "m", 0, 400, G::Spatial),
        cont("heating_degree_days", "K.day", 1800, 3000, G::Spatial),
    });
  }();
  return schema;
}

}  // namespace epcplan
