#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace epcplan {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  MissingColumn,
  BadValue,
  AllValuesAnomalous,
  TooFewRows,
  BadArchitecture,
  DimMismatch,
  NonFiniteLoss,
  DegenerateBatch,
  EmptyFineGroup,
  EmptyTest,
  DuplicateId,
  UnknownFeature,
  GrantExceedsPrice,
  ConflictingMutations,
  CombinationLimitExceeded,
  EmptyCategory,
  MissingTemplate,
  SchemaMismatch,
  BadCheckpoint,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::AllValuesAnomalous: return "AllValuesAnomalous";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::BadArchitecture: return "BadArchitecture";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::DegenerateBatch: return "DegenerateBatch";
    case ErrorCode::EmptyFineGroup: return "EmptyFineGroup";
    case ErrorCode::EmptyTest: return "EmptyTest";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::GrantExceedsPrice: return "GrantExceedsPrice";
    case ErrorCode::ConflictingMutations: return "ConflictingMutations";
    case ErrorCode::CombinationLimitExceeded: return "CombinationLimitExceeded";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
  }
  return "Unknown";
}

/// Library-wide exception. `field` names the offending feature, column, item
/// or request key when one exists; `row` is a 0-based data row (or 1-based
/// line number for text parsers).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string field = {},
        std::optional<std::size_t> row = std::nullopt)
      : std::runtime_error(compose(code, message, field, row)),
        code_(code),
        field_(std::move(field)),
        row_(row),
        detail_(std::move(message)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }
  std::optional<std::size_t> row() const noexcept { return row_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string compose(ErrorCode code, const std::string& message,
                             const std::string& field,
                             std::optional<std::size_t> row) {
    std::string out{to_string(code)};
    if (!field.empty()) out += "(" + field + ")";
    if (row) out += " at row " + std::to_string(*row);
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::string field_;
  std::optional<std::size_t> row_;
  std::string detail_;
};

}  // namespace epcplan
