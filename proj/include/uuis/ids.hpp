#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace uuis {

// Leading digit of every rendered id.
enum class Family : std::uint8_t {
  Location = 0,      // buildings, locations, location types
  Affiliation = 1,   // university, faculties, departments
  Person = 2,        // users, titles, request types, requests
  Role = 3,          // user roles
  Item = 4,
  Catalog = 5,       // categories, properties, groups
  ItemProperty = 6,
};

inline constexpr std::uint64_t kCounterLimit = 1'000'000'000;  // nine digits

// Ten-digit typed identifier: family prefix digit + nine-digit counter.
class UuisId {
 public:
  constexpr UuisId() = default;

  static UuisId encode(Family family, std::uint64_t counter);

  // Accepts exactly ten ASCII digits with a known family prefix.
  static UuisId parse(std::string_view text);
  static std::optional<UuisId> try_parse(std::string_view text) noexcept;

  constexpr Family family() const noexcept { return static_cast<Family>(value_ / kCounterLimit); }
  constexpr std::uint64_t counter() const noexcept { return value_ % kCounterLimit; }
  constexpr std::uint64_t value() const noexcept { return value_; }

  std::string str() const;

  constexpr auto operator<=>(const UuisId&) const = default;

 private:
  constexpr explicit UuisId(std::uint64_t v) : value_(v) {}
  std::uint64_t value_ = 0;
};

std::string_view family_name(Family family) noexcept;

// ---------------------------------------------------------------------------
// Affiliation digit grammar
//
// The counter of an affiliation id is read as FF DDDDDDD. The university is
// all zeros, a faculty has FF != 00 and a zero tail, a department shares its
// faculty's FF and has a tail that is not all zero.

enum class AffiliationTier { University, Faculty, Department };

inline constexpr std::uint64_t kDepartmentSpan = 10'000'000;  // seven digits
inline constexpr std::uint64_t kMaxFacultyCode = 99;

// Throws MalformedAffiliationId for non-affiliation ids.
AffiliationTier affiliation_tier(UuisId id);
UuisId affiliation_parent(UuisId id);
UuisId university_id();
UuisId faculty_id(std::uint64_t faculty_code);  // 1..99
UuisId department_id(std::uint64_t faculty_code, std::uint64_t tail);
std::uint64_t faculty_code_of(UuisId id);

// True if `node` equals `root` or lies beneath it in the affiliation tree.
bool affiliation_contains(UuisId root, UuisId node);

}  // namespace uuis

template <>
struct std::hash<uuis::UuisId> {
  std::size_t operator()(const uuis::UuisId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value());
  }
};
