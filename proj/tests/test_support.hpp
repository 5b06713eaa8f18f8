#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "epcplan/dataset.hpp"
#include "epcplan/schema.hpp"

namespace epcplan::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("epcplan_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string data_path(const std::string& name) { return std::string(EPCPLAN_DATA_DIR) + "/" + name; }

/// Two continuous features and one categorical, for hand-computed fixtures.
inline FeatureSchema mini_schema() {
  FeatureDescriptor a{"a", FeatureKind::Continuous, "m", 0, 10, FeatureGroup::Envelope, false, {}};
  FeatureDescriptor b{"b_u", FeatureKind::Continuous, "W/m2K", 0, 5, FeatureGroup::Fabric, true, {}};
  FeatureDescriptor c{"c", FeatureKind::Categorical, "", 0, 0, FeatureGroup::Spatial, false, {"x", "y", "z"}};
  return FeatureSchema({a, b, c});
}

inline Dataset mini_dataset(const std::vector<std::array<double, 3>>& rows) {
  Dataset d{mini_schema(), {}, Provenance::Real};
  for (std::size_t i = 0; i < rows.size(); ++i)
    d.rows.push_back({HomeProfile{{rows[i][0], rows[i][1], rows[i][2]}}, EnergyRating::C1, i});
  return d;
}

}  // namespace epcplan::testing
