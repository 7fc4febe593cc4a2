#include "uuis/ids.hpp"

#include <cstdio>

#include "uuis/errors.hpp"

namespace uuis {

UuisId UuisId::encode(Family family, std::uint64_t counter) {
  if (counter >= kCounterLimit) {
    fail(ErrorCode::CounterOverflow,
         "counter " + std::to_string(counter) + " exceeds nine digits");
  }
  const auto prefix = static_cast<std::uint64_t>(family);
  if (prefix > static_cast<std::uint64_t>(Family::ItemProperty)) {
    fail(ErrorCode::MalformedId, "unknown entity family");
  }
  return UuisId(prefix * kCounterLimit + counter);
}

std::optional<UuisId> UuisId::try_parse(std::string_view text) noexcept {
  if (text.size() != 10) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  if (text[0] > '0' + static_cast<int>(Family::ItemProperty)) return std::nullopt;
  return UuisId(v);
}

UuisId UuisId::parse(std::string_view text) {
  if (auto id = try_parse(text)) return *id;
  fail(ErrorCode::MalformedId, "not a ten-digit id: '" + std::string(text) + "'");
}

std::string UuisId::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%010llu", static_cast<unsigned long long>(value_));
  return buf;
}

std::string_view family_name(Family family) noexcept {
  switch (family) {
    case Family::Location: return "location";
    case Family::Affiliation: return "affiliation";
    case Family::Person: return "person";
    case Family::Role: return "role";
    case Family::Item: return "item";
    case Family::Catalog: return "catalog";
    case Family::ItemProperty: return "item-property";
  }
  return "unknown";
}

AffiliationTier affiliation_tier(UuisId id) {
  if (id.family() != Family::Affiliation) {
    fail(ErrorCode::MalformedAffiliationId, id.str() + " is not an affiliation id");
  }
  const auto faculty = id.counter() / kDepartmentSpan;
  const auto tail = id.counter() % kDepartmentSpan;
  if (faculty == 0) {
    if (tail != 0) {
      fail(ErrorCode::MalformedAffiliationId, id.str() + " has a tail but no faculty digits");
    }
    return AffiliationTier::University;
  }
  return tail == 0 ? AffiliationTier::Faculty : AffiliationTier::Department;
}

UuisId affiliation_parent(UuisId id) {
  switch (affiliation_tier(id)) {
    case AffiliationTier::University:
    case AffiliationTier::Faculty:
      return university_id();
    case AffiliationTier::Department:
      return faculty_id(id.counter() / kDepartmentSpan);
  }
  return university_id();
}

UuisId university_id() { return UuisId::encode(Family::Affiliation, 0); }

UuisId faculty_id(std::uint64_t faculty_code) {
  if (faculty_code == 0 || faculty_code > kMaxFacultyCode) {
    fail(ErrorCode::MalformedAffiliationId, "faculty code out of range");
  }
  return UuisId::encode(Family::Affiliation, faculty_code * kDepartmentSpan);
}

UuisId department_id(std::uint64_t faculty_code, std::uint64_t tail) {
  if (tail == 0 || tail >= kDepartmentSpan) {
    fail(ErrorCode::MalformedAffiliationId, "department tail out of range");
  }
  return UuisId::encode(Family::Affiliation, faculty_id(faculty_code).counter() + tail);
}

std::uint64_t faculty_code_of(UuisId id) {
  affiliation_tier(id);
  return id.counter() / kDepartmentSpan;
}

bool affiliation_contains(UuisId root, UuisId node) {
  if (root.family() != Family::Affiliation || node.family() != Family::Affiliation) return false;
  if (root == node) return true;
  switch (affiliation_tier(root)) {
    case AffiliationTier::University:
      return true;
    case AffiliationTier::Faculty:
      return faculty_code_of(node) == faculty_code_of(root);
    case AffiliationTier::Department:
      return false;
  }
  return false;
}

}  // namespace uuis
