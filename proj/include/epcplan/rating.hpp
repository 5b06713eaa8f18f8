#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "epcplan/errors.hpp"

namespace epcplan {

/// BER grade. Declaration order is best to worst, so `<` reads "better than".
enum class EnergyRating : std::uint8_t {
  A1, A2, A3, B1, B2, B3, C1, C2, C3, D1, D2, E1, E2, F, G
};

inline constexpr std::size_t kRatingCount = 15;

inline constexpr std::array<std::string_view, kRatingCount> kRatingNames = {
    "A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2",
    "C3", "D1", "D2", "E1", "E2", "F",  "G"};

constexpr std::size_t index_of(EnergyRating r) { return static_cast<std::size_t>(r); }

constexpr EnergyRating rating_from_index(std::size_t i) {
  if (i >= kRatingCount) throw Error(ErrorCode::InvalidArgument, "rating index out of range");
  return static_cast<EnergyRating>(i);
}

constexpr std::string_view to_string(EnergyRating r) { return kRatingNames[index_of(r)]; }

constexpr std::optional<EnergyRating> parse_rating(std::string_view s) {
  for (std::size_t i = 0; i < kRatingCount; ++i)
    if (kRatingNames[i] == s) return static_cast<EnergyRating>(i);
  return std::nullopt;
}

enum class CoarseRating : std::uint8_t { A, B, C, CD, EFG };

inline constexpr std::size_t kCoarseCount = 5;

inline constexpr std::array<std::string_view, kCoarseCount> kCoarseNames = {"A", "B", "C", "CD",
                                                                           "EFG"};

constexpr std::size_t index_of(CoarseRating c) { return static_cast<std::size_t>(c); }

constexpr CoarseRating coarse_from_index(std::size_t i) {
  if (i >= kCoarseCount) throw Error(ErrorCode::InvalidArgument, "coarse index out of range");
  return static_cast<CoarseRating>(i);
}

constexpr std::string_view to_string(CoarseRating c) { return kCoarseNames[index_of(c)]; }

namespace detail {
// Coarse groups are contiguous runs of the fine order.
inline constexpr std::array<std::size_t, kCoarseCount + 1> kCoarseBounds = {0, 3, 6, 8, 11, 15};
}  // namespace detail

/// Merge of the 15 grades into 5 coarse groups:
/// A={A1,A2,A3} B={B1,B2,B3} C={C1,C2} CD={C3,D1,D2} EFG={E1,E2,F,G}.
constexpr CoarseRating to_coarse(EnergyRating r) {
  const std::size_t i = index_of(r);
  for (std::size_t g = 0; g < kCoarseCount; ++g)
    if (i < detail::kCoarseBounds[g + 1]) return static_cast<CoarseRating>(g);
  return CoarseRating::EFG;
}

constexpr std::size_t group_size(CoarseRating c) {
  return detail::kCoarseBounds[index_of(c) + 1] - detail::kCoarseBounds[index_of(c)];
}

/// First fine rating of the group; members are contiguous from here.
constexpr EnergyRating group_first(CoarseRating c) {
  return static_cast<EnergyRating>(detail::kCoarseBounds[index_of(c)]);
}

/// Position of `r` within its coarse group.
constexpr std::size_t index_in_group(EnergyRating r) {
  return index_of(r) - index_of(group_first(to_coarse(r)));
}

constexpr EnergyRating group_member(CoarseRating c, std::size_t local) {
  if (local >= group_size(c)) throw Error(ErrorCode::InvalidArgument, "group member out of range");
  return static_cast<EnergyRating>(detail::kCoarseBounds[index_of(c)] + local);
}

}  // namespace epcplan
