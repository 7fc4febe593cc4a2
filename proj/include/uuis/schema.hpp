#pragma once

// Field-level schema for every stored record type. One description drives
// text rendering (backup CSV, API JSON), parsing with column-width checks,
// and the searchable-field catalog.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uuis/domain.hpp"
#include "uuis/errors.hpp"

namespace uuis {

// Text codec per member type. encode() is total; decode() throws ValidationError.
template <class M>
struct Codec;

template <>
struct Codec<std::string> {
  static std::string encode(const std::string& v) { return v; }
  static std::string decode(std::string_view s) { return std::string(s); }
};

template <>
struct Codec<UuisId> {
  static std::string encode(const UuisId& v) { return v.str(); }
  static UuisId decode(std::string_view s) {
    auto id = UuisId::try_parse(s);
    if (!id) fail(ErrorCode::ValidationError, "expected ten-digit id, got '" + std::string(s) + "'");
    return *id;
  }
};

template <>
struct Codec<Timestamp> {
  static std::string encode(const Timestamp& v) { return to_iso8601(v); }
  static Timestamp decode(std::string_view s) {
    auto t = parse_iso8601(s);
    if (!t) fail(ErrorCode::ValidationError, "expected ISO-8601 timestamp, got '" + std::string(s) + "'");
    return *t;
  }
};

template <>
struct Codec<std::uint64_t> {
  static std::string encode(std::uint64_t v) { return std::to_string(v); }
  static std::uint64_t decode(std::string_view s);
};

template <>
struct Codec<std::uint32_t> {
  static std::string encode(std::uint32_t v) { return std::to_string(v); }
  static std::uint32_t decode(std::string_view s);
};

template <>
struct Codec<bool> {
  static std::string encode(bool v) { return v ? "1" : "0"; }
  static bool decode(std::string_view s) {
    if (s == "1") return true;
    if (s == "0") return false;
    fail(ErrorCode::ValidationError, "expected 0 or 1, got '" + std::string(s) + "'");
  }
};

template <>
struct Codec<PermissionMask> {
  static std::string encode(PermissionMask v) { return std::to_string(v.bits()); }
  static PermissionMask decode(std::string_view s) {
    return PermissionMask::from_integer(static_cast<long long>(Codec<std::uint64_t>::decode(s)));
  }
};

template <class M>
struct Codec<std::optional<M>> {
  static std::string encode(const std::optional<M>& v) { return v ? Codec<M>::encode(*v) : ""; }
  static std::optional<M> decode(std::string_view s) {
    if (s.empty()) return std::nullopt;
    return Codec<M>::decode(s);
  }
};

template <class E>
  requires std::is_enum_v<E>
struct Codec<E> {
  static std::string encode(E v) { return std::string(enum_name(v)); }
  static E decode(std::string_view s) {
    auto e = parse_enum<E>(s);
    if (!e) fail(ErrorCode::ValidationError, "unknown value '" + std::string(s) + "'");
    return *e;
  }
};

template <>
struct Codec<std::vector<Annotation>> {
  static std::string encode(const std::vector<Annotation>& v);
  static std::vector<Annotation> decode(std::string_view s);
};

template <class T>
struct FieldSpec {
  std::string_view code;
  std::string_view name;
  std::size_t max_len = 0;  // 0 = unbounded
  std::function<std::string(const T&)> get;
  std::function<void(T&, std::string_view)> set;
};

template <class T, class M>
FieldSpec<T> field(M T::*member, std::string_view code, std::string_view name,
                   std::size_t max_len = 0) {
  return FieldSpec<T>{
      code, name, max_len, [member](const T& rec) { return Codec<M>::encode(rec.*member); },
      [member, code, max_len](T& rec, std::string_view text) {
        if (max_len != 0 && text.size() > max_len) {
          fail(ErrorCode::ValidationError, std::string(code) + " exceeds " +
                                               std::to_string(max_len) + " characters");
        }
        rec.*member = Codec<M>::decode(text);
      }};
}

// Specialized per record type:
//   table_code, table_name, key(rec), fields()
template <class T>
struct Schema;

#define UUIS_DECLARE_SCHEMA(Type, Code, Name)              \
  template <>                                              \
  struct Schema<Type> {                                    \
    static constexpr std::string_view table_code = Code;   \
    static constexpr std::string_view table_name = Name;   \
    static std::uint64_t key(const Type& rec);             \
    static const std::vector<FieldSpec<Type>>& fields();   \
  };

UUIS_DECLARE_SCHEMA(Building, "bldg", "Buildings")
UUIS_DECLARE_SCHEMA(LocationType, "loctype", "Location Types")
UUIS_DECLARE_SCHEMA(Location, "loc", "Locations")
UUIS_DECLARE_SCHEMA(Affiliation, "affln", "Affiliations")
UUIS_DECLARE_SCHEMA(Category, "cat", "Categories")
UUIS_DECLARE_SCHEMA(Item, "item", "Items")
UUIS_DECLARE_SCHEMA(PropertyDef, "proplist", "Property List")
UUIS_DECLARE_SCHEMA(ItemProperty, "itemprop", "Item Properties")
UUIS_DECLARE_SCHEMA(InventoryEntry, "inventory", "Inventories")
UUIS_DECLARE_SCHEMA(PermissionDef, "permission", "Permissions")
UUIS_DECLARE_SCHEMA(Title, "title", "Titles")
UUIS_DECLARE_SCHEMA(User, "users", "Users")
UUIS_DECLARE_SCHEMA(UserInfo, "userinfo", "User Info")
UUIS_DECLARE_SCHEMA(UserRole, "userrole", "User Roles")
UUIS_DECLARE_SCHEMA(AclEntry, "acl", "ACL")
UUIS_DECLARE_SCHEMA(RequestType, "reqtype", "Request Types")
UUIS_DECLARE_SCHEMA(Request, "request", "Requests")
UUIS_DECLARE_SCHEMA(TableMeta, "tablelist", "Table List")
UUIS_DECLARE_SCHEMA(FieldMeta, "fieldlist", "Field List")
UUIS_DECLARE_SCHEMA(ErrorRecord, "errors", "Error Messages")
UUIS_DECLARE_SCHEMA(Notification, "notice", "Notifications")
UUIS_DECLARE_SCHEMA(LogRecord, "logs", "Logs")

#undef UUIS_DECLARE_SCHEMA

template <class T>
std::vector<std::string> render_row(const T& rec) {
  std::vector<std::string> out;
  for (const auto& f : Schema<T>::fields()) out.push_back(f.get(rec));
  return out;
}

template <class T>
std::vector<std::string> header_of() {
  std::vector<std::string> out;
  for (const auto& f : Schema<T>::fields()) out.emplace_back(f.code);
  return out;
}

// Rebuilds a record from a rendered row; arity must match the schema.
template <class T>
T parse_row(const std::vector<std::string>& cells) {
  const auto& fs = Schema<T>::fields();
  if (cells.size() != fs.size()) {
    fail(ErrorCode::RowFormatError, std::string(Schema<T>::table_code) + ": expected " +
                                        std::to_string(fs.size()) + " columns, got " +
                                        std::to_string(cells.size()));
  }
  T rec{};
  for (std::size_t i = 0; i < fs.size(); ++i) fs[i].set(rec, cells[i]);
  return rec;
}

template <class T>
nlohmann::json to_json(const T& rec) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : Schema<T>::fields()) j[std::string(f.code)] = f.get(rec);
  return j;
}

// Missing keys keep the record's current value.
template <class T>
void apply_json(T& rec, const nlohmann::json& j) {
  for (const auto& f : Schema<T>::fields()) {
    auto it = j.find(std::string(f.code));
    if (it == j.end()) continue;
    if (it->is_string()) {
      f.set(rec, it->template get<std::string>());
    } else if (it->is_null()) {
      f.set(rec, "");
    } else {
      f.set(rec, it->dump());
    }
  }
}

template <class T>
T from_json(const nlohmann::json& j) {
  T rec{};
  apply_json(rec, j);
  return rec;
}

template <class T>
const FieldSpec<T>* find_field(std::string_view code) {
  for (const auto& f : Schema<T>::fields()) {
    if (f.code == code) return &f;
  }
  return nullptr;
}

}  // namespace uuis
