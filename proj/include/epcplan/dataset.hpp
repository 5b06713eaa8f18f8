#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "epcplan/errors.hpp"
#include "epcplan/rating.hpp"
#include "epcplan/record_file.hpp"
#include "epcplan/rng.hpp"
#include "epcplan/schema.hpp"

namespace epcplan {

/// One value per schema feature, in schema order. Categorical values hold the
/// code index as an exact small integer.
struct HomeProfile {
  std::vector<double> values;

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  friend bool operator==(const HomeProfile&, const HomeProfile&) = default;
};

/// Throws BadValue naming the first non-conforming feature.
inline void validate_profile(const HomeProfile& p, const FeatureSchema& schema) {
  if (p.values.size() != schema.size())
    throw Error(ErrorCode::DimMismatch,
                "profile has " + std::to_string(p.values.size()) + " values, schema has " +
                    std::to_string(schema.size()));
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    const double v = p.values[i];
    if (!std::isfinite(v)) throw Error(ErrorCode::BadValue, "non-finite value", f.name);
    if (f.is_categorical() && !f.in_range(v))
      throw Error(ErrorCode::BadValue, "invalid categorical code index", f.name);
  }
}

inline std::uint64_t profile_hash(const HomeProfile& p) {
  Fnv1a h;
  for (double v : p.values) h.update_double(v);
  return h.digest();
}

enum class Provenance { Real, Synthetic };

struct LabeledRow {
  HomeProfile profile;
  EnergyRating rating = EnergyRating::G;
  /// Position in the source data; survives cleaning and splitting.
  std::size_t id = 0;
};

struct Dataset {
  FeatureSchema schema;
  std::vector<LabeledRow> rows;
  Provenance provenance = Provenance::Real;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  /// Same schema and provenance, rows selected by position.
  Dataset subset(const std::vector<std::size_t>& positions) const {
    Dataset out{schema, {}, provenance};
    out.rows.reserve(positions.size());
    for (auto p : positions) out.rows.push_back(rows[p]);
    return out;
  }

  std::vector<std::size_t> label_histogram() const {
    std::vector<std::size_t> h(kRatingCount, 0);
    for (const auto& r : rows) ++h[index_of(r.rating)];
    return h;
  }
};

// ---------------------------------------------------------------------------
// Delimited-text I/O

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::string(trim(cur)));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::string(trim(cur)));
  return out;
}

}  // namespace detail

struct RowIssue {
  std::size_t row = 0;
  std::string field;
  std::string message;
};

struct LoadResult {
  Dataset data;
  std::vector<RowIssue> issues;
};

/// Parses every row; rows that fail validation are listed in `issues` and left
/// out of `data`.
inline LoadResult parse_dataset_lenient(std::string_view text, const FeatureSchema& schema) {
  LoadResult result;
  result.data.schema = schema;
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::ParseError, "missing header row", {}, 1);

  const auto header = detail::split_csv_line(lines[0]);
  std::vector<std::size_t> column_of(schema.size());
  auto find_col = [&](std::string_view name) -> std::size_t {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw Error(ErrorCode::MissingColumn, "header lacks column", std::string(name));
  };
  for (std::size_t i = 0; i < schema.size(); ++i) column_of[i] = find_col(schema[i].name);
  const std::size_t rating_col = find_col("rating");

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row = li - 1;
    if (trim(lines[li]).empty()) {
      result.issues.push_back({row, {}, "blank row"});
      continue;
    }
    const auto cells = detail::split_csv_line(lines[li]);
    if (cells.size() != header.size()) {
      result.issues.push_back({row, {},
                               "expected " + std::to_string(header.size()) + " cells, got " +
                                   std::to_string(cells.size())});
      continue;
    }
    LabeledRow out;
    out.id = row;
    out.profile.values.resize(schema.size());
    bool ok = true;
    for (std::size_t i = 0; i < schema.size() && ok; ++i) {
      const auto& f = schema[i];
      const auto& cell = cells[column_of[i]];
      if (f.is_categorical()) {
        if (auto idx = f.code_index(cell)) {
          out.profile.values[i] = static_cast<double>(*idx);
        } else {
          result.issues.push_back({row, f.name, "unknown code '" + cell + "'"});
          ok = false;
        }
      } else {
        double v = 0;
        if (!parse_double(cell, v) || !std::isfinite(v)) {
          result.issues.push_back({row, f.name, "non-numeric value '" + cell + "'"});
          ok = false;
        } else {
          out.profile.values[i] = v;
        }
      }
    }
    if (!ok) continue;
    if (auto r = parse_rating(cells[rating_col])) {
      out.rating = *r;
    } else {
      result.issues.push_back({row, "rating", "unknown rating '" + cells[rating_col] + "'"});
      continue;
    }
    result.data.rows.push_back(std::move(out));
  }
  return result;
}

/// Strict load: any bad row raises BadValue (first offending row and field,
/// with a summary of all issues in the message).
inline Dataset parse_dataset(std::string_view text, const FeatureSchema& schema) {
  auto result = parse_dataset_lenient(text, schema);
  if (!result.issues.empty()) {
    const auto& first = result.issues.front();
    std::string summary = std::to_string(result.issues.size()) + " bad row(s):";
    for (std::size_t i = 0; i < result.issues.size() && i < 10; ++i) {
      const auto& is = result.issues[i];
      summary += " [row " + std::to_string(is.row) + (is.field.empty() ? "" : " " + is.field) +
                 ": " + is.message + "]";
    }
    throw Error(ErrorCode::BadValue, summary, first.field, first.row);
  }
  return std::move(result.data);
}

inline Dataset load_dataset(const std::string& path, const FeatureSchema& schema) {
  return parse_dataset(read_text_file(path), schema);
}

inline void write_dataset(std::ostream& out, const Dataset& data) {
  const auto& schema = data.schema;
  for (std::size_t i = 0; i < schema.size(); ++i) out << schema[i].name << ',';
  out << "rating\n";
  for (const auto& row : data.rows) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const auto& f = schema[i];
      if (f.is_categorical())
        out << f.codes[static_cast<std::size_t>(row.profile.values[i])];
      else
        out << format_number(row.profile.values[i]);
      out << ',';
    }
    out << to_string(row.rating) << '\n';
  }
}

inline void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write file", path);
  write_dataset(out, data);
}

// ---------------------------------------------------------------------------
// Zero-anomaly cleaning

enum class CleaningPolicy { ImputeMedian, DropRow };

struct FeatureCleaning {
  std::string feature;
  std::size_t anomalies = 0;
  std::size_t imputed = 0;
  std::size_t rows_dropped = 0;
  double imputation_value = 0.0;
};

struct CleaningReport {
  std::vector<FeatureCleaning> features;  // nonzero-flagged features, schema order
  std::size_t rows_dropped = 0;

  std::size_t total_anomalies() const {
    std::size_t n = 0;
    for (const auto& f : features) n += f.anomalies;
    return n;
  }
  std::size_t total_imputed() const {
    std::size_t n = 0;
    for (const auto& f : features) n += f.imputed;
    return n;
  }
  bool is_noop() const { return total_anomalies() == 0 && rows_dropped == 0; }
};

inline double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct CleanResult {
  Dataset data;
  CleaningReport report;
};

/// Replaces (or drops rows with) zeros in features the schema marks nonzero.
inline CleanResult clean(const Dataset& data, CleaningPolicy policy = CleaningPolicy::ImputeMedian) {
  if (data.empty()) throw Error(ErrorCode::TooFewRows, "cannot clean an empty dataset");
  const auto& schema = data.schema;
  CleanResult out{data, {}};
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].nonzero && !schema[i].is_categorical()) flagged.push_back(i);

  for (auto fi : flagged) {
    FeatureCleaning fc{schema[fi].name};
    std::vector<double> nonzero;
    for (const auto& row : data.rows) {
      if (row.profile.values[fi] == 0.0) ++fc.anomalies;
      else nonzero.push_back(row.profile.values[fi]);
    }
    if (policy == CleaningPolicy::ImputeMedian && fc.anomalies > 0) {
      if (nonzero.empty())
        throw Error(ErrorCode::AllValuesAnomalous, "every value is zero; median undefined",
                    schema[fi].name);
      fc.imputation_value = median_of(std::move(nonzero));
    }
    out.report.features.push_back(fc);
  }

  if (policy == CleaningPolicy::ImputeMedian) {
    for (std::size_t k = 0; k < flagged.size(); ++k) {
      auto& fc = out.report.features[k];
      if (fc.anomalies == 0) continue;
      for (auto& row : out.data.rows) {
        if (row.profile.values[flagged[k]] == 0.0) {
          row.profile.values[flagged[k]] = fc.imputation_value;
          ++fc.imputed;
        }
      }
    }
  } else {
    std::vector<LabeledRow> kept;
    kept.reserve(data.rows.size());
    for (const auto& row : data.rows) {
      bool bad = false;
      for (std::size_t k = 0; k < flagged.size(); ++k) {
        if (row.profile.values[flagged[k]] == 0.0) {
          ++out.report.features[k].rows_dropped;
          bad = true;
        }
      }
      if (bad) ++out.report.rows_dropped;
      else kept.push_back(row);
    }
    out.data.rows = std::move(kept);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Train/validation/test split

struct SplitSet {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::uint64_t seed = 0;
};

/// Seeded 80/10/10 partition. Validation and test each get round(n/10) rows.
inline SplitSet split(const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 10) throw Error(ErrorCode::TooFewRows, "split needs at least 10 rows, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::derive(seed, 0x5311);
  rng.shuffle(order);
  const std::size_t n_val = (n + 5) / 10;
  const std::size_t n_test = n_val;
  const std::size_t n_train = n - n_val - n_test;
  auto take = [&](std::size_t from, std::size_t count) {
    return data.subset(std::vector<std::size_t>(order.begin() + from, order.begin() + from + count));
  };
  return SplitSet{take(0, n_train), take(n_train, n_val), take(n_train + n_val, n_test), seed};
}

}  // namespace epcplan
