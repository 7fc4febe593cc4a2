#include "uuis/schema.hpp"

#include <charconv>

namespace uuis {

std::uint64_t Codec<std::uint64_t>::decode(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorCode::ValidationError, "expected non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::uint32_t Codec<std::uint32_t>::decode(std::string_view s) {
  const auto v = Codec<std::uint64_t>::decode(s);
  if (v > 0xFFFFFFFFu) fail(ErrorCode::ValidationError, "integer out of range");
  return static_cast<std::uint32_t>(v);
}

std::string Codec<std::vector<Annotation>>::encode(const std::vector<Annotation>& v) {
  if (v.empty()) return "";
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : v) {
    arr.push_back({{"author", a.author_id.str()}, {"at", to_iso8601(a.at)}, {"text", a.text}});
  }
  return arr.dump();
}

std::vector<Annotation> Codec<std::vector<Annotation>>::decode(std::string_view s) {
  std::vector<Annotation> out;
  if (s.empty()) return out;
  auto arr = nlohmann::json::parse(s, nullptr, false);
  if (!arr.is_array()) fail(ErrorCode::ValidationError, "annotations must be a JSON array");
  for (const auto& a : arr) {
    if (!a.is_object() || !a.contains("author") || !a.contains("at") || !a.contains("text")) {
      fail(ErrorCode::ValidationError, "malformed annotation");
    }
    out.push_back(Annotation{Codec<UuisId>::decode(a["author"].get<std::string>()),
                             Codec<Timestamp>::decode(a["at"].get<std::string>()),
                             a["text"].get<std::string>()});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t Schema<Building>::key(const Building& r) { return r.bldg_id.value(); }
const std::vector<FieldSpec<Building>>& Schema<Building>::fields() {
  static const std::vector<FieldSpec<Building>> fs = {
      field(&Building::bldg_id, "bldg_id", "Building ID"),
      field(&Building::bldg_code, "bldg_code", "Building code", 10),
      field(&Building::bldg_name, "bldg_name", "Building name", 50),
  };
  return fs;
}

std::uint64_t Schema<LocationType>::key(const LocationType& r) { return r.loc_type_id.value(); }
const std::vector<FieldSpec<LocationType>>& Schema<LocationType>::fields() {
  static const std::vector<FieldSpec<LocationType>> fs = {
      field(&LocationType::loc_type_id, "loc_type_id", "Location type ID"),
      field(&LocationType::loc_type_name, "loc_type_name", "Type name", 15),
      field(&LocationType::description, "description", "Description", 255),
  };
  return fs;
}

std::uint64_t Schema<Location>::key(const Location& r) { return r.loc_id.value(); }
const std::vector<FieldSpec<Location>>& Schema<Location>::fields() {
  static const std::vector<FieldSpec<Location>> fs = {
      field(&Location::loc_id, "loc_id", "Location ID"),
      field(&Location::parent_loc_id, "parent_loc_id", "Parent location"),
      field(&Location::loc_code, "loc_code", "Location code", 10),
      field(&Location::loc_name, "loc_name", "Location name", 50),
      field(&Location::bldg_id, "bldg_id", "Building"),
      field(&Location::affln_id, "affln_id", "Owner"),
      field(&Location::status, "status", "Status", 10),
      field(&Location::loc_type_id, "loc_type_id", "Location type"),
      field(&Location::comment, "comment", "Comment", 255),
  };
  return fs;
}

std::uint64_t Schema<Affiliation>::key(const Affiliation& r) { return r.affln_id.value(); }
const std::vector<FieldSpec<Affiliation>>& Schema<Affiliation>::fields() {
  static const std::vector<FieldSpec<Affiliation>> fs = {
      field(&Affiliation::affln_id, "affln_id", "Affiliation ID"),
      field(&Affiliation::affln_name, "affln_name", "Name", 50),
      field(&Affiliation::affln_code, "affln_code", "Code", 10),
  };
  return fs;
}

std::uint64_t Schema<Category>::key(const Category& r) { return r.cat_id.value(); }
const std::vector<FieldSpec<Category>>& Schema<Category>::fields() {
  static const std::vector<FieldSpec<Category>> fs = {
      field(&Category::cat_id, "cat_id", "Category ID"),
      field(&Category::parent_cat_id, "parent_cat_id", "Parent category"),
      field(&Category::description, "description", "Description", 50),
  };
  return fs;
}

std::uint64_t Schema<Item>::key(const Item& r) { return r.item_id.value(); }
const std::vector<FieldSpec<Item>>& Schema<Item>::fields() {
  static const std::vector<FieldSpec<Item>> fs = {
      field(&Item::item_id, "item_id", "Item ID"),
      field(&Item::item_description, "item_description", "Description", 50),
      field(&Item::code, "code", "Tracking code", 20),
      field(&Item::group_id, "group_id", "Group"),
      field(&Item::serial_number, "serial_number", "Serial number", 20),
      field(&Item::cat_id, "cat_id", "Category"),
      field(&Item::owner_id, "owner_id", "Owner"),
      field(&Item::loc_id, "loc_id", "Location"),
      field(&Item::date_modified, "date_modified", "Modified"),
      field(&Item::status, "status", "Status", 10),
  };
  return fs;
}

std::uint64_t Schema<PropertyDef>::key(const PropertyDef& r) { return r.prop_id.value(); }
const std::vector<FieldSpec<PropertyDef>>& Schema<PropertyDef>::fields() {
  static const std::vector<FieldSpec<PropertyDef>> fs = {
      field(&PropertyDef::prop_id, "prop_id", "Property ID"),
      field(&PropertyDef::cat_id, "cat_id", "Category"),
      field(&PropertyDef::prop_name, "prop_name", "Property name", 10),
      field(&PropertyDef::default_value, "default_value", "Default value", 20),
  };
  return fs;
}

std::uint64_t Schema<ItemProperty>::key(const ItemProperty& r) { return r.item_prop_id.value(); }
const std::vector<FieldSpec<ItemProperty>>& Schema<ItemProperty>::fields() {
  static const std::vector<FieldSpec<ItemProperty>> fs = {
      field(&ItemProperty::item_prop_id, "item_prop_id", "Item/property ID"),
      field(&ItemProperty::item_id, "item_id", "Item"),
      field(&ItemProperty::prop_id, "prop_id", "Property"),
      field(&ItemProperty::prop_value, "prop_value", "Value", 20),
  };
  return fs;
}

std::uint64_t Schema<InventoryEntry>::key(const InventoryEntry& r) { return r.item_id.value(); }
const std::vector<FieldSpec<InventoryEntry>>& Schema<InventoryEntry>::fields() {
  static const std::vector<FieldSpec<InventoryEntry>> fs = {
      field(&InventoryEntry::item_id, "item_id", "Item"),
      field(&InventoryEntry::qty, "qty", "Quantity"),
      field(&InventoryEntry::qty_out, "qty_out", "Checked out"),
      field(&InventoryEntry::status, "status", "Status", 10),
      field(&InventoryEntry::modified_by, "modified_by", "Modified by"),
      field(&InventoryEntry::date_modified, "date_modified", "Modified"),
  };
  return fs;
}

std::uint64_t Schema<PermissionDef>::key(const PermissionDef& r) { return r.permission_id; }
const std::vector<FieldSpec<PermissionDef>>& Schema<PermissionDef>::fields() {
  static const std::vector<FieldSpec<PermissionDef>> fs = {
      field(&PermissionDef::permission_id, "permission_id", "Permission ID"),
      field(&PermissionDef::description, "description", "Description", 255),
  };
  return fs;
}

std::uint64_t Schema<Title>::key(const Title& r) { return r.title_id.value(); }
const std::vector<FieldSpec<Title>>& Schema<Title>::fields() {
  static const std::vector<FieldSpec<Title>> fs = {
      field(&Title::title_id, "title_id", "Title ID"),
      field(&Title::title_name, "title_name", "Role name", 50),
      field(&Title::permission, "permission", "Default permissions"),
  };
  return fs;
}

std::uint64_t Schema<User>::key(const User& r) { return r.user_id.value(); }
const std::vector<FieldSpec<User>>& Schema<User>::fields() {
  static const std::vector<FieldSpec<User>> fs = {
      field(&User::user_id, "user_id", "User ID"),
      field(&User::user_code, "user_code", "Username", 10),
      field(&User::last_name, "last_name", "Last name", 20),
      field(&User::first_name, "first_name", "First name", 20),
      field(&User::password, "password", "Password", 50),
      field(&User::date_modified, "date_modified", "Modified"),
      field(&User::login_attempts, "login_attempts", "Failed attempts"),
      field(&User::must_change_password, "must_change_pw", "Must change password"),
  };
  return fs;
}

std::uint64_t Schema<UserInfo>::key(const UserInfo& r) { return r.user_id.value(); }
const std::vector<FieldSpec<UserInfo>>& Schema<UserInfo>::fields() {
  static const std::vector<FieldSpec<UserInfo>> fs = {
      field(&UserInfo::user_id, "user_id", "User ID"),
      field(&UserInfo::email, "email", "Email", 255),
      field(&UserInfo::dob, "dob", "Date of birth", 10),
      field(&UserInfo::home_phone, "home_phone", "Home phone", 10),
      field(&UserInfo::cell_phone, "cell_phone", "Cell phone", 10),
      field(&UserInfo::street_address, "street_address", "Address", 255),
  };
  return fs;
}

std::uint64_t Schema<UserRole>::key(const UserRole& r) { return r.user_role_id.value(); }
const std::vector<FieldSpec<UserRole>>& Schema<UserRole>::fields() {
  static const std::vector<FieldSpec<UserRole>> fs = {
      field(&UserRole::user_role_id, "user_role_id", "User role ID"),
      field(&UserRole::user_id, "user_id", "User"),
      field(&UserRole::title_id, "title_id", "Title"),
      field(&UserRole::affln_id, "affln_id", "Affiliation"),
      field(&UserRole::status, "status", "Status", 10),
  };
  return fs;
}

std::uint64_t Schema<AclEntry>::key(const AclEntry& r) { return r.user_role_id.value(); }
const std::vector<FieldSpec<AclEntry>>& Schema<AclEntry>::fields() {
  static const std::vector<FieldSpec<AclEntry>> fs = {
      field(&AclEntry::user_role_id, "user_role_id", "User role ID"),
      field(&AclEntry::permission, "permission", "Permissions"),
  };
  return fs;
}

std::uint64_t Schema<RequestType>::key(const RequestType& r) { return r.req_type_id.value(); }
const std::vector<FieldSpec<RequestType>>& Schema<RequestType>::fields() {
  static const std::vector<FieldSpec<RequestType>> fs = {
      field(&RequestType::req_type_id, "req_type_id", "Request type ID"),
      field(&RequestType::req_type_code, "req_type_code", "Code", 10),
      field(&RequestType::description, "description", "Description", 50),
      field(&RequestType::permission, "permission", "Required permission"),
      field(&RequestType::effect, "effect", "Effect", 10),
  };
  return fs;
}

std::uint64_t Schema<Request>::key(const Request& r) { return r.req_id.value(); }
const std::vector<FieldSpec<Request>>& Schema<Request>::fields() {
  static const std::vector<FieldSpec<Request>> fs = {
      field(&Request::req_id, "req_id", "Request ID"),
      field(&Request::requester, "requester", "Requester"),
      field(&Request::req_type, "req_type", "Request type"),
      field(&Request::submitted_by, "submitted_by", "Submitted by"),
      field(&Request::item_id, "item_id", "Target"),
      field(&Request::description, "description", "Description", 255),
      field(&Request::date_submitted, "date_submitted", "Submitted"),
      field(&Request::approved_by, "approved_by", "Approved by"),
      field(&Request::date_approved, "date_approved", "Approved"),
      field(&Request::status, "status", "Status", 10),
      field(&Request::date_modified, "date_modified", "Modified"),
      field(&Request::requester_level, "requester_level", "Requester level"),
      field(&Request::handling_level, "handling_level", "Handling level"),
      field(&Request::formalization, "formalization", "Formalization"),
      field(&Request::comment, "comment", "Comment", 255),
  };
  return fs;
}

std::uint64_t Schema<TableMeta>::key(const TableMeta& r) { return r.table_id; }
const std::vector<FieldSpec<TableMeta>>& Schema<TableMeta>::fields() {
  static const std::vector<FieldSpec<TableMeta>> fs = {
      field(&TableMeta::table_id, "table_id", "Table ID"),
      field(&TableMeta::table_code, "table_code", "Table code", 10),
      field(&TableMeta::table_name, "table_name", "Table name", 15),
      field(&TableMeta::permissions, "permissions", "Minimum permissions"),
  };
  return fs;
}

std::uint64_t Schema<FieldMeta>::key(const FieldMeta& r) { return r.field_id; }
const std::vector<FieldSpec<FieldMeta>>& Schema<FieldMeta>::fields() {
  static const std::vector<FieldSpec<FieldMeta>> fs = {
      field(&FieldMeta::field_id, "field_id", "Field ID"),
      field(&FieldMeta::table_id, "table_id", "Table"),
      field(&FieldMeta::field_code, "field_code", "Field code", 15),
      field(&FieldMeta::field_name, "field_name", "Field name", 20),
      field(&FieldMeta::permissions, "permissions", "Minimum permissions"),
      field(&FieldMeta::forbidden, "forbidden", "Forbidden"),
  };
  return fs;
}

std::uint64_t Schema<ErrorRecord>::key(const ErrorRecord& r) { return r.error_id; }
const std::vector<FieldSpec<ErrorRecord>>& Schema<ErrorRecord>::fields() {
  static const std::vector<FieldSpec<ErrorRecord>> fs = {
      field(&ErrorRecord::error_id, "error_id", "Error ID"),
      field(&ErrorRecord::log_time, "log_time", "Time"),
      field(&ErrorRecord::severity, "severity", "Severity", 10),
      field(&ErrorRecord::message, "message", "Message", 255),
      field(&ErrorRecord::context, "context", "Context"),
      field(&ErrorRecord::annotations, "annotations", "Annotations"),
  };
  return fs;
}

std::uint64_t Schema<Notification>::key(const Notification& r) { return r.notice_id; }
const std::vector<FieldSpec<Notification>>& Schema<Notification>::fields() {
  static const std::vector<FieldSpec<Notification>> fs = {
      field(&Notification::notice_id, "notice_id", "Notice ID"),
      field(&Notification::user_id, "user_id", "Recipient"),
      field(&Notification::created_at, "created_at", "Created"),
      field(&Notification::req_id, "req_id", "Request"),
      field(&Notification::message, "message", "Message", 255),
  };
  return fs;
}

std::uint64_t Schema<LogRecord>::key(const LogRecord& r) { return r.log_id; }
const std::vector<FieldSpec<LogRecord>>& Schema<LogRecord>::fields() {
  static const std::vector<FieldSpec<LogRecord>> fs = {
      field(&LogRecord::log_id, "log_id", "Log ID"),
      field(&LogRecord::log_time, "log_time", "Time"),
      field(&LogRecord::user_id, "user_id", "Actor"),
      field(&LogRecord::item_id, "item_id", "Subject"),
      field(&LogRecord::event_type, "event_type", "Event", 10),
      field(&LogRecord::content, "content", "Content", 255),
  };
  return fs;
}

}  // namespace uuis
