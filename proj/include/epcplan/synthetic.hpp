#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "epcplan/dataset.hpp"
#include "epcplan/errors.hpp"
#include "epcplan/rating.hpp"
#include "epcplan/rng.hpp"
#include "epcplan/schema.hpp"

namespace epcplan {

/// Constants of the synthetic labelling oracle
///
///   score = sum_k w_k * area_k * U_k  +  h / main_heating_efficiency
///           - s * solar_pv_kw  +  N(0, noise_sd)
///
/// over k in {wall, roof, floor, window, door}. Lower score is a better
/// rating; `thresholds[i]` is the upper score bound of rating i. The
/// thresholds are score quantiles of a 400k-row calibration sample placed so
/// the class mix is imbalanced with A1 rarest (about 0.5%).
struct SyntheticParams {
  std::array<double, 5> weights = {1.0, 0.6, 2.0, 0.8, 0.5};
  double heating_constant = 60.0;
  double solar_weight = 10.0;
  double noise_sd = 3.0;
  std::array<double, kRatingCount - 1> thresholds = {
      130.7, 159.7, 186.9, 205.2, 227.2, 256.6, 289.7, 325.6,
      362.4, 402.0, 446.0, 480.8, 515.5, 562.0};
  /// Fraction of rows whose recorded floor_area and floor_u are replaced by
  /// zero after labelling (independently per feature).
  double zero_anomaly_rate = 0.0;
};

namespace detail {

struct OracleSlots {
  std::array<std::size_t, 5> area;
  std::array<std::size_t, 5> u;
  std::size_t efficiency;
  std::optional<std::size_t> solar;
};

inline OracleSlots oracle_slots(const FeatureSchema& schema) {
  return OracleSlots{
      {schema.index_of("wall_area"), schema.index_of("roof_area"), schema.index_of("floor_area"),
       schema.index_of("window_area"), schema.index_of("door_area")},
      {schema.index_of("wall_u"), schema.index_of("roof_u"), schema.index_of("floor_u"),
       schema.index_of("window_u"), schema.index_of("door_u")},
      schema.index_of("main_heating_efficiency"),
      schema.find("solar_pv_kw")};
}

}  // namespace detail

/// Noise-free oracle score of a profile.
inline double oracle_score(const HomeProfile& p, const FeatureSchema& schema,
                           const SyntheticParams& params = {}) {
  const auto slots = detail::oracle_slots(schema);
  double score = 0.0;
  for (std::size_t k = 0; k < 5; ++k)
    score += params.weights[k] * p.values[slots.area[k]] * p.values[slots.u[k]];
  score += params.heating_constant / p.values[slots.efficiency];
  if (slots.solar) score -= params.solar_weight * p.values[*slots.solar];
  return score;
}

inline EnergyRating rating_for_score(double score, const SyntheticParams& params = {}) {
  std::size_t i = 0;
  while (i < params.thresholds.size() && score > params.thresholds[i]) ++i;
  return rating_from_index(i);
}

namespace detail {

inline double clamp_to(const FeatureDescriptor& f, double v) { return std::clamp(v, f.min, f.max); }

/// Draws one profile plus its noise-free score inputs. Feature names the
/// generator knows get correlated draws; anything else is uniform over its
/// declared range (or uniform over codes).
inline HomeProfile draw_profile(Rng& rng, const FeatureSchema& schema) {
  HomeProfile p;
  p.values.assign(schema.size(), 0.0);
  auto set = [&](std::string_view name, double v) {
    if (auto i = schema.find(name)) p.values[*i] = schema[*i].is_categorical() ? v : clamp_to(schema[*i], v);
  };
  auto code_of = [&](std::string_view name, std::string_view code) -> double {
    if (auto i = schema.find(name))
      if (auto c = schema[*i].code_index(code)) return static_cast<double>(*c);
    return 0.0;
  };

  // Generic fill first; named features below overwrite.
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    p.values[i] = f.is_categorical() ? static_cast<double>(rng.below(f.codes.size()))
                                     : rng.uniform(f.min, f.max);
  }

  const double year = 1900.0 + 122.0 * std::pow(rng.uniform(), 0.7);
  const double age = std::clamp((2022.0 - year) / 122.0, 0.0, 1.0);
  set("year_of_construction", std::round(year));

  static constexpr std::array<double, 6> kTypeWeights = {0.30, 0.25, 0.12, 0.08, 0.15, 0.10};
  static constexpr std::array<std::string_view, 6> kTypes = {
      "detached", "semi_detached", "mid_terrace", "end_terrace", "apartment", "bungalow"};
  static constexpr std::array<double, 6> kExposure = {1.0, 0.8, 0.6, 0.7, 0.5, 0.95};
  const std::size_t type = rng.categorical(kTypeWeights);
  set("dwelling_type", code_of("dwelling_type", kTypes[type]));
  const double storeys = (type == 4 || type == 5) ? 1.0 : 2.0;
  set("storey_count", storeys);

  const double tfa = std::clamp(std::exp(rng.normal(std::log(115.0), 0.22)), 30.0, 500.0);
  set("total_floor_area", tfa);
  const double floor = tfa / storeys * rng.uniform(0.95, 1.05);
  set("floor_area", floor);
  set("roof_area", floor * rng.uniform(1.0, 1.15));
  const double height = rng.uniform(2.3, 2.9);
  set("room_height", height);
  set("wall_area", 4.0 * std::sqrt(floor) * height * storeys * kExposure[type]);
  set("window_area", tfa * rng.uniform(0.15, 0.25));
  set("door_area", 1.9 * (rng.bernoulli(0.5) ? 2.0 : 1.0));

  auto jitter = [&](double sd) { return std::exp(rng.normal(0.0, sd)); };
  set("wall_u", (0.2 + 1.6 * age) * jitter(0.45));
  set("floor_u", (0.2 + 0.8 * age) * jitter(0.45));
  const double roof_u = (0.15 + 1.0 * age) * jitter(0.35);
  set("roof_u", roof_u);
  set("attic_insulation_mm", 300.0 * (1.0 - age) + rng.normal(0.0, 40.0));

  static constexpr std::array<double, 3> kGlazingWeights = {0.10, 0.75, 0.15};
  static constexpr std::array<double, 3> kGlazingU = {4.8, 2.5, 0.9};
  static constexpr std::array<std::string_view, 3> kGlazing = {"single", "double", "triple"};
  const std::size_t glazing = rng.categorical(kGlazingWeights);
  set("glazing_type", code_of("glazing_type", kGlazing[glazing]));
  set("window_u", kGlazingU[glazing] * rng.uniform(0.9, 1.1));
  set("door_u", rng.uniform(1.5, 3.0));

  static constexpr std::array<double, 6> kFuelWeights = {0.45, 0.35, 0.08, 0.04, 0.05, 0.03};
  static constexpr std::array<std::string_view, 6> kFuels = {
      "mains_gas", "heating_oil", "electricity", "lpg", "solid_fuel", "biomass"};
  set("main_heating_fuel", code_of("main_heating_fuel", kFuels[rng.categorical(kFuelWeights)]));
  set("main_heating_efficiency", rng.uniform(0.6, 0.95));
  set("solar_pv_kw", rng.bernoulli(0.15) ? rng.uniform(1.0, 6.0) : 0.0);
  set("heating_controls_score", std::min(3.0, std::floor(rng.uniform(0.0, 4.0))));
  set("mvhr_efficiency", rng.bernoulli(0.05) ? rng.uniform(0.7, 0.9) : 0.0);
  set("ventilation_air_changes", rng.uniform(0.3, 1.2));
  set("water_storage_volume", rng.bernoulli(0.3) ? 0.0 : rng.uniform(100.0, 250.0));
  return p;
}

}  // namespace detail

/// Oracle scores (with noise) of the profiles `generate_synthetic` would draw;
/// used to calibrate thresholds.
inline std::vector<double> synthetic_scores(std::size_t n, std::uint64_t seed,
                                            const FeatureSchema& schema,
                                            const SyntheticParams& params = {}) {
  Rng rng = Rng::derive(seed, 0x5947);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = detail::draw_profile(rng, schema);
    out.push_back(oracle_score(p, schema, params) + params.noise_sd * rng.normal());
  }
  return out;
}

/// Calibrated synthetic EPC-style dataset.
inline Dataset generate_synthetic(std::size_t n, std::uint64_t seed,
                                  const FeatureSchema& schema = default_schema(),
                                  const SyntheticParams& params = {}) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  Rng rng = Rng::derive(seed, 0x5947);
  Rng anomaly_rng = Rng::derive(seed, 0xa707);
  const auto floor_area = schema.find("floor_area");
  const auto floor_u = schema.find("floor_u");
  Dataset data{schema, {}, Provenance::Synthetic};
  data.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledRow row;
    row.id = i;
    row.profile = detail::draw_profile(rng, schema);
    const double score = oracle_score(row.profile, schema, params) + params.noise_sd * rng.normal();
    row.rating = rating_for_score(score, params);
    if (params.zero_anomaly_rate > 0.0) {
      if (floor_area && anomaly_rng.bernoulli(params.zero_anomaly_rate)) row.profile.values[*floor_area] = 0.0;
      if (floor_u && anomaly_rng.bernoulli(params.zero_anomaly_rate)) row.profile.values[*floor_u] = 0.0;
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

}  // namespace epcplan
