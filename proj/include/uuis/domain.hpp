#pragma once

// Entity records of the inventory data dictionary. Plain values; all
// mutation goes through store transactions.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uuis/clock.hpp"
#include "uuis/ids.hpp"
#include "uuis/permissions.hpp"

namespace uuis {

enum class LocationStatus : std::uint8_t { Available, Booked, InUse };
enum class ItemStatus : std::uint8_t { Available, CheckedOut, Retired };
enum class InventoryStatus : std::uint8_t { Available, CheckedOut };
enum class RoleStatus : std::uint8_t { Accepted, Dropped };
enum class RequestStatus : std::uint8_t { InProcess, Approved, Rejected, Cancelled, Escalated, Locked };
enum class RequestEffect : std::uint8_t { Transfer, Checkout, Record };

// Wire names for enums; names fit the ten-character status columns.
template <class E>
struct EnumNames;

template <>
struct EnumNames<LocationStatus> {
  static constexpr std::array<std::string_view, 3> names{"Available", "Booked", "InUse"};
};
template <>
struct EnumNames<ItemStatus> {
  static constexpr std::array<std::string_view, 3> names{"Available", "CheckedOut", "Retired"};
};
template <>
struct EnumNames<InventoryStatus> {
  static constexpr std::array<std::string_view, 2> names{"Available", "CheckedOut"};
};
template <>
struct EnumNames<RoleStatus> {
  static constexpr std::array<std::string_view, 2> names{"accepted", "dropped"};
};
template <>
struct EnumNames<RequestStatus> {
  static constexpr std::array<std::string_view, 6> names{"InProcess", "Approved",  "Rejected",
                                                         "Cancelled", "Escalated", "Locked"};
};
template <>
struct EnumNames<RequestEffect> {
  static constexpr std::array<std::string_view, 3> names{"Transfer", "Checkout", "Record"};
};

template <class E>
constexpr std::string_view enum_name(E value) {
  return EnumNames<E>::names[static_cast<std::size_t>(value)];
}

template <class E>
std::optional<E> parse_enum(std::string_view text) {
  const auto& names = EnumNames<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  return std::nullopt;
}

struct Building {
  UuisId bldg_id;
  std::string bldg_code;
  std::string bldg_name;
};

struct LocationType {
  UuisId loc_type_id;
  std::string loc_type_name;
  std::string description;
};

struct Location {
  UuisId loc_id;
  UuisId parent_loc_id;  // a building or another location
  std::string loc_code;
  std::string loc_name;
  UuisId bldg_id;        // building at the root of the containment chain
  UuisId affln_id;
  LocationStatus status = LocationStatus::Available;
  UuisId loc_type_id;
  std::string comment;
};

struct Affiliation {
  UuisId affln_id;
  std::string affln_name;
  std::string affln_code;
};

struct Category {
  UuisId cat_id;
  std::optional<UuisId> parent_cat_id;  // empty for first-tier categories
  std::string description;
};

struct Item {
  UuisId item_id;
  std::string item_description;
  std::string code;
  std::optional<UuisId> group_id;
  std::string serial_number;
  UuisId cat_id;
  UuisId owner_id;  // user or affiliation
  UuisId loc_id;
  Timestamp date_modified{};
  ItemStatus status = ItemStatus::Available;
};

struct PropertyDef {
  UuisId prop_id;
  UuisId cat_id;
  std::string prop_name;
  std::string default_value;
};

struct ItemProperty {
  UuisId item_prop_id;
  UuisId item_id;
  UuisId prop_id;
  std::string prop_value;
};

struct InventoryEntry {
  UuisId item_id;
  std::uint32_t qty = 1;      // on hand
  std::uint32_t qty_out = 0;  // checked out and not yet returned
  InventoryStatus status = InventoryStatus::Available;
  UuisId modified_by;
  Timestamp date_modified{};
};

struct PermissionDef {
  std::uint64_t permission_id = 0;  // bit index
  std::string description;
};

struct Title {
  UuisId title_id;
  std::string title_name;
  PermissionMask permission;
};

struct User {
  UuisId user_id;
  std::string user_code;
  std::string last_name;
  std::string first_name;
  std::string password;  // KDF digest, never cleartext
  std::optional<Timestamp> date_modified;
  std::uint32_t login_attempts = 0;
  bool must_change_password = false;
};

struct UserInfo {
  UuisId user_id;
  std::string email;
  std::string dob;  // YYYY-MM-DD
  std::string home_phone;
  std::string cell_phone;
  std::string street_address;
};

struct UserRole {
  UuisId user_role_id;
  UuisId user_id;
  UuisId title_id;
  UuisId affln_id;
  RoleStatus status = RoleStatus::Accepted;
};

struct AclEntry {
  UuisId user_role_id;
  PermissionMask permission;
};

struct RequestType {
  UuisId req_type_id;
  std::string req_type_code;
  std::string description;
  PermissionMask permission;  // one ApproveLn bit
  RequestEffect effect = RequestEffect::Record;
};

struct Request {
  UuisId req_id;
  UuisId requester;
  UuisId req_type;
  UuisId submitted_by;
  std::optional<UuisId> item_id;
  std::string description;
  Timestamp date_submitted{};
  std::optional<UuisId> approved_by;
  std::optional<Timestamp> date_approved;
  RequestStatus status = RequestStatus::InProcess;
  std::optional<Timestamp> date_modified;
  std::uint32_t requester_level = 0;
  std::uint32_t handling_level = 1;  // approval level currently responsible
  std::string formalization;         // JSON object of resolved fields
  std::string comment;
};

struct LogRecord {
  std::uint64_t log_id = 0;
  Timestamp log_time{};
  std::optional<UuisId> user_id;  // actor
  std::optional<UuisId> item_id;  // subject entity
  std::string event_type;
  std::string content;
};

struct TableMeta {
  std::uint64_t table_id = 0;
  std::string table_code;
  std::string table_name;
  PermissionMask permissions;
};

struct FieldMeta {
  std::uint64_t field_id = 0;
  std::uint64_t table_id = 0;
  std::string field_code;
  std::string field_name;
  PermissionMask permissions;
  bool forbidden = false;  // never searchable or exported through search
};

struct Annotation {
  UuisId author_id;
  Timestamp at{};
  std::string text;
};

struct ErrorRecord {
  std::uint64_t error_id = 0;
  Timestamp log_time{};
  std::string severity;  // info | warning | error
  std::string message;
  std::string context;
  std::vector<Annotation> annotations;
};

// In-system inbox entry, e.g. a rejection notice.
struct Notification {
  std::uint64_t notice_id = 0;
  UuisId user_id;
  Timestamp created_at{};
  std::optional<UuisId> req_id;
  std::string message;
};

// Log event vocabulary.
namespace event {
inline constexpr std::string_view Create = "CREATE";
inline constexpr std::string_view Update = "UPDATE";
inline constexpr std::string_view Delete = "DELETE";
inline constexpr std::string_view Login = "LOGIN";
inline constexpr std::string_view Logout = "LOGOUT";
inline constexpr std::string_view Approve = "APPROVE";
inline constexpr std::string_view Reject = "REJECT";
inline constexpr std::string_view Cancel = "CANCEL";
inline constexpr std::string_view Import = "IMPORT";
inline constexpr std::string_view Backup = "BACKUP";
}  // namespace event

}  // namespace uuis
