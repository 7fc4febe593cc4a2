#include "uuis/gateway.hpp"

// The library default of 5 drops connections when many clients start at once.
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>
#include <sodium.h>

#include <cstdio>
#include <functional>
#include <sstream>

namespace uuis {
namespace {

using nlohmann::json;

constexpr auto kConfirmationLifetime = std::chrono::minutes(10);

json ok_envelope(json payload) {
  return {{"status", "ok"}, {"error_code", nullptr}, {"payload", std::move(payload)}, {"confirmation_token", nullptr}};
}

json error_envelope(ErrorCode code, const std::string& message, const json& details) {
  return {{"status", "error"},
          {"error_code", to_string(code)},
          {"message", message},
          {"details", details},
          {"payload", nullptr},
          {"confirmation_token", nullptr}};
}

std::string hex_digest(std::string_view bytes) {
  unsigned char h[crypto_generichash_BYTES];
  crypto_generichash(h, sizeof h, reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), nullptr, 0);
  char hex[sizeof h * 2 + 1];
  sodium_bin2hex(hex, sizeof hex, h, sizeof h);
  return hex;
}

UuisId id_from(const json& j, std::string_view what) {
  if (j.is_string()) return UuisId::parse(j.get<std::string>());
  if (j.is_number_unsigned() || j.is_number_integer()) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%010llu", static_cast<unsigned long long>(j.get<std::uint64_t>()));
    return UuisId::parse(buf);
  }
  fail(ErrorCode::ValidationError, std::string(what) + " must be an id");
}

std::optional<UuisId> opt_id(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null() || (it->is_string() && it->get<std::string>().empty())) return std::nullopt;
  return id_from(*it, key);
}

UuisId req_id(const json& body, const char* key) {
  auto id = opt_id(body, key);
  if (!id) fail(ErrorCode::MissingFields, std::string("missing ") + key, {{"missing", {key}}});
  return *id;
}

std::string str(const json& body, const char* key, std::string fallback = "") {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  if (!it->is_string()) fail(ErrorCode::ValidationError, std::string(key) + " must be a string");
  return it->get<std::string>();
}

std::vector<UuisId> id_list(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_array()) fail(ErrorCode::ValidationError, std::string(key) + " must be a list");
  std::vector<UuisId> out;
  for (const auto& v : *it) out.push_back(id_from(v, key));
  return out;
}

std::map<std::string, std::string> string_map(const json& body, const char* key) {
  std::map<std::string, std::string> out;
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return out;
  if (!it->is_object()) fail(ErrorCode::ValidationError, std::string(key) + " must be an object");
  for (const auto& [k, v] : it->items()) out[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return out;
}

Timestamp timestamp_from(const std::string& text) {
  auto t = parse_iso8601(text);
  if (!t) fail(ErrorCode::ValidationError, "bad timestamp '" + text + "'");
  return *t;
}

json user_json(User u) {
  u.password.clear();
  auto j = to_json(u);
  j.erase("password");
  return j;
}

template <class T>
json list_json(const std::vector<T>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back(to_json(r));
  return out;
}

json tabular_json(const Tabular& t) { return {{"columns", t.columns}, {"rows", t.rows}}; }

Tabular tabular_from(const json& j) {
  Tabular t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  t.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
  return t;
}

json session_json(const Session& s) {
  json perms = json::array();
  for (auto n : s.effective_mask.names()) perms.push_back(n);
  return {{"token", s.token},
          {"user_id", s.user_id.str()},
          {"level", to_int(s.level)},
          {"permission", s.effective_mask.bits()},
          {"permissions", perms},
          {"password_change_required", s.password_change_required}};
}

PermissionMask mask_from(const json& j) {
  if (j.is_number_integer() || j.is_number_unsigned()) return PermissionMask::from_integer(j.get<long long>());
  if (j.is_array()) {
    PermissionMask m;
    for (const auto& n : j) m = m.with(parse_permission(n.get<std::string>()));
    return m;
  }
  fail(ErrorCode::ValidationError, "permission must be an integer or a list of names");
}

}  // namespace

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::SessionExpired:
    case ErrorCode::InvalidCredentials:
    case ErrorCode::ChallengeRequired:
      return 401;
    case ErrorCode::PermissionDenied:
    case ErrorCode::LevelNotLower:
    case ErrorCode::CosignFailed:
    case ErrorCode::NotOwner:
    case ErrorCode::PasswordChangeRequired:
      return 403;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownKey:
    case ErrorCode::UnknownError:
    case ErrorCode::UnknownTarget:
    case ErrorCode::UnknownFaculty:
    case ErrorCode::UnknownParent:
    case ErrorCode::UnknownReference:
      return 404;
    case ErrorCode::Conflict:
    case ErrorCode::DuplicateName:
    case ErrorCode::DuplicateCode:
    case ErrorCode::DuplicateSerial:
    case ErrorCode::AlreadyGrouped:
    case ErrorCode::NotPending:
    case ErrorCode::NotAvailable:
    case ErrorCode::NotCheckedOut:
    case ErrorCode::NonEmptyTarget:
    case ErrorCode::ConfirmationRequired:
      return 409;
    case ErrorCode::AccountLocked:
      return 423;
    case ErrorCode::StorageFailure:
    case ErrorCode::CounterOverflow:
    case ErrorCode::DigestMismatch:
    case ErrorCode::BindFailure:
      return 500;
    case ErrorCode::StorageUnavailable:
      return 503;
    default:
      return 400;
  }
}

// ---------------------------------------------------------------------------

struct Call {
  const ApiRequest& req;
  std::map<std::string, std::string> params;
  json body = json::object();
  const std::string& token;

  UuisId param_id(const std::string& name) const { return UuisId::parse(params.at(name)); }
  std::string query(const std::string& key, std::string fallback = "") const {
    auto it = req.query.find(key);
    return it == req.query.end() ? fallback : it->second;
  }
  std::optional<UuisId> query_id(const std::string& key) const {
    auto v = query(key);
    if (v.empty()) return std::nullopt;
    return UuisId::parse(v);
  }
};

class Gateway::Router {
 public:
  using Handler = std::function<json(Call&)>;
  struct Route {
    std::string method;
    std::vector<std::string> pattern;
    Handler handler;
    bool authenticated = true;
    bool confirmable = false;
    Handler preview;  // consequence for confirmables that cannot run dry
  };

  void add(Route r) { routes_.push_back(std::move(r)); }

  const Route* match(const std::string& method, const std::string& path,
                     std::map<std::string, std::string>& params, bool& path_known) const {
    const auto parts = split(path);
    path_known = false;
    for (const auto& r : routes_) {
      if (r.pattern.size() != parts.size()) continue;
      std::map<std::string, std::string> p;
      bool ok = true;
      for (std::size_t i = 0; i < parts.size() && ok; ++i) {
        if (r.pattern[i].starts_with(':')) p[r.pattern[i].substr(1)] = parts[i];
        else ok = r.pattern[i] == parts[i];
      }
      if (!ok) continue;
      path_known = true;
      if (r.method != method) continue;
      params = std::move(p);
      return &r;
    }
    return nullptr;
  }

  static std::vector<std::string> split(const std::string& path) {
    std::vector<std::string> out;
    std::stringstream ss(path);
    for (std::string part; std::getline(ss, part, '/');) {
      if (!part.empty()) out.push_back(part);
    }
    return out;
  }

  const std::vector<Route>& routes() const { return routes_; }

 private:
  std::vector<Route> routes_;
};

namespace {

// Only the requested page is converted to JSON.
template <class Seq, class Convert>
json paginate(const Seq& items, const Call& c, std::size_t page_size, Convert&& convert) {
  std::size_t page = 1;
  const auto p = c.query("page");
  if (!p.empty()) {
    try {
      page = std::stoul(p);
    } catch (const std::exception&) {
      fail(ErrorCode::ValidationError, "page must be a positive integer");
    }
    if (page == 0) fail(ErrorCode::ValidationError, "page must be a positive integer");
  }
  const std::size_t total = items.size();
  const std::size_t begin = std::min(total, (page - 1) * page_size);
  const std::size_t end = std::min(total, begin + page_size);
  json slice = json::array();
  for (std::size_t i = begin; i < end; ++i) slice.push_back(convert(items[i]));
  return {{"items", slice},
          {"page", page},
          {"page_size", page_size},
          {"total", total},
          {"pages", total == 0 ? 0 : (total + page_size - 1) / page_size}};
}

json paginate(const json& items, const Call& c, std::size_t page_size) {
  return paginate(items, c, page_size, [](const json& j) { return j; });
}

template <class T>
json paginate(const std::vector<T>& rows, const Call& c, std::size_t page_size) {
  return paginate(rows, c, page_size, [](const T& r) { return to_json(r); });
}

}  // namespace

// ---------------------------------------------------------------------------

Gateway::Gateway(System& sys) : sys_(sys), router_(std::make_unique<Router>()) {
  auto& R = *router_;
  const auto page_size = sys_.config().page_size;
  using Route = Router::Route;
  auto route = [&](std::string method, std::string path, Router::Handler h) {
    R.add(Route{std::move(method), Router::split(path), std::move(h), true, false, nullptr});
  };
  auto confirmable = [&](std::string method, std::string path, Router::Handler h, Router::Handler preview = nullptr) {
    R.add(Route{std::move(method), Router::split(path), std::move(h), true, true, std::move(preview)});
  };
  auto open_route = [&](std::string method, std::string path, Router::Handler h) {
    R.add(Route{std::move(method), Router::split(path), std::move(h), false, false, nullptr});
  };

  // -- sessions --------------------------------------------------------------
  open_route("GET", "/api/health", [](Call&) { return json{{"healthy", true}}; });
  open_route("POST", "/api/sessions", [this](Call& c) {
    std::optional<ChallengeAnswer> challenge;
    if (auto it = c.body.find("challenge"); it != c.body.end() && it->is_object()) {
      challenge = ChallengeAnswer{str(*it, "id"), str(*it, "answer")};
    }
    return session_json(sys_.auth.login(str(c.body, "user_code"), str(c.body, "password"), challenge));
  });
  route("DELETE", "/api/sessions", [this](Call& c) {
    sys_.auth.logout(c.token);
    return json{{"logged_out", true}};
  });
  route("POST", "/api/sessions/password", [this](Call& c) {
    sys_.auth.change_password(c.token, str(c.body, "old_password"), str(c.body, "new_password"),
                              str(c.body, "confirm_password"));
    return json{{"changed", true}};
  });
  route("GET", "/api/me", [this](Call& c) {
    const auto who = sys_.auth.authorize(c.token, true);
    json perms = json::array();
    for (auto n : who.mask.names()) perms.push_back(n);
    json scope = json::array();
    for (auto a : who.scope) scope.push_back(a.str());
    return json{{"user_id", who.user_id.str()}, {"level", who.level_int()}, {"permission", who.mask.bits()},
                {"permissions", perms}, {"scope", scope}};
  });

  // -- directory -------------------------------------------------------------
  route("GET", "/api/users/:code", [this](Call& c) {
    const auto p = sys_.directory.lookup_user(c.token, c.params.at("code"));
    return json{{"user", user_json(p.user)}, {"info", to_json(p.info)}, {"roles", list_json(p.roles)}};
  });
  route("POST", "/api/users", [this](Call& c) {
    UserImportRow row{str(c.body, "user_code"), str(c.body, "last_name"), str(c.body, "first_name"),
                      str(c.body, "email"),     str(c.body, "dob"),       str(c.body, "title_code"),
                      str(c.body, "affln_code"), str(c.body, "initial_password")};
    return json{{"user_id", sys_.directory.create_user(c.token, row).str()}};
  });
  route("POST", "/api/users/import", [this](Call& c) {
    const auto report = sys_.directory.bulk_import_users(c.token, c.body.is_object() && c.body.contains("csv")
                                                                      ? str(c.body, "csv")
                                                                      : c.req.body);
    json rejected = json::array();
    for (const auto& r : report.rejected) rejected.push_back({{"line", r.line}, {"reason", r.reason}});
    json ids = json::array();
    for (auto id : report.created_ids) ids.push_back(id.str());
    return json{{"created", report.created}, {"created_ids", ids}, {"rejected", rejected},
                {"rejections_csv", rejections_csv(user_import_header(), report.rejected)}};
  });
  route("GET", "/api/users/:id/profile", [this](Call& c) {
    return to_json(sys_.directory.view_edit_profile(c.token, c.param_id("id"), {}));
  });
  route("PATCH", "/api/users/:id/profile", [this](Call& c) {
    return to_json(sys_.directory.view_edit_profile(c.token, c.param_id("id"), string_map(c.body, "edits")));
  });
  route("POST", "/api/users/:code/unlock", [this](Call& c) {
    sys_.auth.unlock_user(c.token, c.params.at("code"));
    return json{{"unlocked", c.params.at("code")}};
  });
  route("POST", "/api/users/:id/roles", [this](Call& c) {
    return to_json(
        sys_.directory.grant_role(c.token, c.param_id("id"), req_id(c.body, "title_id"), req_id(c.body, "affln_id")));
  });
  confirmable("PUT", "/api/roles/:id", [this](Call& c) {
    if (!c.body.contains("permission")) fail(ErrorCode::MissingFields, "missing permission", {{"missing", {"permission"}}});
    return to_json(sys_.directory.update_role_profile(c.token, c.param_id("id"), mask_from(c.body["permission"])));
  });
  route("GET", "/api/affiliations", [this](Call& c) {
    sys_.auth.authorize(c.token);
    return list_json(sys_.directory.affiliations());
  });
  confirmable("POST", "/api/departments", [this](Call& c) {
    const auto& co = c.body.value("cosigner", json::object());
    return to_json(sys_.directory.create_department(c.token, str(c.body, "name"), str(c.body, "code"),
                                                    req_id(c.body, "faculty"),
                                                    Credentials{str(co, "user_code"), str(co, "password")}));
  });
  confirmable("POST", "/api/faculties", [this](Call& c) {
    std::optional<Credentials> co;
    if (auto it = c.body.find("cosigner"); it != c.body.end() && it->is_object()) {
      co = Credentials{str(*it, "user_code"), str(*it, "password")};
    }
    return to_json(sys_.directory.create_faculty(c.token, str(c.body, "name"), str(c.body, "code"), co));
  });
  route("POST", "/api/buildings", [this](Call& c) {
    return to_json(sys_.directory.add_building(c.token, str(c.body, "code"), str(c.body, "name")));
  });
  route("POST", "/api/location-types", [this](Call& c) {
    return to_json(sys_.directory.add_location_type(c.token, str(c.body, "name"), str(c.body, "description")));
  });
  confirmable("POST", "/api/locations", [this](Call& c) {
    return to_json(sys_.directory.add_location(c.token, str(c.body, "name"), str(c.body, "code"),
                                               req_id(c.body, "type"), req_id(c.body, "parent"),
                                               req_id(c.body, "owner"), str(c.body, "comment")));
  });
  route("GET", "/api/locations/:id/chain", [this](Call& c) {
    sys_.auth.authorize(c.token);
    json out = json::array();
    for (auto id : sys_.directory.location_chain(c.param_id("id"))) out.push_back(id.str());
    return out;
  });

  // -- assets ----------------------------------------------------------------
  route("GET", "/api/assets", [this, page_size](Call& c) {
    AssetFilter f;
    f.loc_id = c.query_id("loc_id");
    f.owner_id = c.query_id("owner_id");
    f.cat_id = c.query_id("cat_id");
    f.group_id = c.query_id("group_id");
    if (auto s = c.query("status"); !s.empty()) {
      f.status = parse_enum<ItemStatus>(s);
      if (!f.status) fail(ErrorCode::ValidationError, "unknown status '" + s + "'");
    }
    f.text = c.query("text");
    return paginate(sys_.assets.view_assets(c.token, f), c, page_size);
  });
  route("GET", "/api/assets/:id", [this](Call& c) {
    return to_json(sys_.assets.get_asset(c.token, c.param_id("id")));
  });
  route("GET", "/api/assets/:id/properties", [this](Call& c) {
    return list_json(sys_.assets.properties_of(c.token, c.param_id("id")));
  });
  route("GET", "/api/assets/:id/inventory", [this](Call& c) {
    sys_.assets.get_asset(c.token, c.param_id("id"));
    return to_json(sys_.assets.inventory_of(c.param_id("id")));
  });
  confirmable("POST", "/api/assets", [this](Call& c) {
    NewAsset a;
    a.item_description = str(c.body, "item_description");
    a.code = str(c.body, "code");
    a.serial_number = str(c.body, "serial_number");
    a.cat_id = req_id(c.body, "cat_id");
    a.owner_id = req_id(c.body, "owner_id");
    a.loc_id = req_id(c.body, "loc_id");
    for (const auto& [k, v] : string_map(c.body, "properties")) a.properties.emplace_back(UuisId::parse(k), v);
    return to_json(sys_.assets.add_asset(c.token, a));
  });
  confirmable("PATCH", "/api/assets", [this](Call& c) {
    return list_json(sys_.assets.update_assets(c.token, id_list(c.body, "targets"), string_map(c.body, "edits")));
  });
  route("POST", "/api/assets/import", [this](Call& c) {
    const auto report = sys_.assets.bulk_add_assets(
        c.token, c.body.is_object() && c.body.contains("csv") ? str(c.body, "csv") : c.req.body);
    json ids = json::array();
    for (auto id : report.created_ids) ids.push_back(id.str());
    return json{{"created", report.created_ids.size()}, {"created_ids", ids}};
  });
  confirmable("POST", "/api/assets/group", [this](Call& c) {
    const auto out = sys_.assets.group_assets(c.token, id_list(c.body, "selected"), true);
    json changed = json::array();
    for (auto id : out.changed) changed.push_back(id.str());
    return json{{"resolution", to_string(out.resolution)},
                {"group_id", out.group_id ? json(out.group_id->str()) : json(nullptr)},
                {"changed", changed}};
  });
  route("POST", "/api/assets/:id/checkout", [this](Call& c) {
    return to_json(sys_.assets.checkout_item(c.token, c.param_id("id")));
  });
  route("POST", "/api/assets/:id/return", [this](Call& c) {
    return to_json(sys_.assets.return_item(c.token, c.param_id("id")));
  });
  route("POST", "/api/categories", [this](Call& c) {
    return to_json(sys_.assets.add_category(c.token, str(c.body, "description"), opt_id(c.body, "parent")));
  });
  route("POST", "/api/categories/:id/properties", [this](Call& c) {
    return to_json(
        sys_.assets.add_property(c.token, c.param_id("id"), str(c.body, "name"), str(c.body, "default_value")));
  });

  // -- requests --------------------------------------------------------------
  route("GET", "/api/request-types", [this](Call& c) {
    sys_.auth.authorize(c.token);
    return list_json(sys_.requests.request_types());
  });
  route("GET", "/api/requests", [this, page_size](Call& c) {
    return paginate(sys_.requests.view_request_status(c.token), c, page_size);
  });
  confirmable("POST", "/api/requests", [this](Call& c) {
    return to_json(sys_.requests.submit_request(c.token, req_id(c.body, "req_type"), opt_id(c.body, "item_id"),
                                                str(c.body, "description"), opt_id(c.body, "on_behalf_of")));
  });
  confirmable("POST", "/api/requests/cancel", [this](Call& c) {
    return list_json(sys_.requests.cancel_request(c.token, id_list(c.body, "req_ids")));
  });
  route("GET", "/api/requests/pending", [this, page_size](Call& c) {
    return paginate(sys_.requests.view_pending(c.token), c, page_size);
  });
  confirmable("POST", "/api/requests/:id/approve", [this](Call& c) {
    return to_json(sys_.requests.approve_request(c.token, c.param_id("id"), string_map(c.body, "formalization"),
                                                 c.body.value("escalate", false)));
  });
  route("POST", "/api/requests/:id/reject", [this](Call& c) {
    return to_json(sys_.requests.reject_request(c.token, c.param_id("id"), str(c.body, "comment")));
  });
  route("GET", "/api/inbox", [this](Call& c) { return list_json(sys_.requests.inbox(c.token)); });

  // -- audit and reports -----------------------------------------------------
  route("GET", "/api/audit/options", [this](Call& c) {
    json out = json::array();
    for (auto cat : sys_.audit.audit_options(c.token)) out.push_back(to_string(cat));
    return out;
  });
  route("GET", "/api/audit/logs", [this, page_size](Call& c) {
    AuditKey key;
    key.entity = c.query_id("entity");
    if (auto f = c.query("from"); !f.empty()) key.from = timestamp_from(f);
    if (auto t = c.query("to"); !t.empty()) key.to = timestamp_from(t);
    json out = json::array();
    for (const auto& e : sys_.audit.audit_logs(c.token, parse_audit_category(c.query("category")), key)) {
      out.push_back({{"log_id", e.log_id},
                     {"log_time", to_iso8601(e.log_time)},
                     {"actor", e.actor ? json(e.actor->str()) : json(nullptr)},
                     {"subject", e.subject ? json(e.subject->str()) : json(nullptr)},
                     {"event_type", e.event_type},
                     {"summary", e.summary}});
    }
    return paginate(out, c, page_size);
  });
  route("GET", "/api/audit/logs/:id", [this](Call& c) {
    std::uint64_t id = 0;
    try {
      id = std::stoull(c.params.at("id"));
    } catch (const std::exception&) {
      fail(ErrorCode::ValidationError, "log id must be numeric");
    }
    const auto d = sys_.audit.drill_down(c.token, id);
    return json{{"record", to_json(d.record)}, {"subject_state", d.subject_state}};
  });
  route("POST", "/api/reports", [this](Call& c) {
    ReportSpec spec;
    spec.category = parse_report_category(str(c.body, "category", "assets"));
    if (c.body.contains("item_ids")) spec.item_ids = id_list(c.body, "item_ids");
    spec.group_by = str(c.body, "group_by");
    for (const auto& f : c.body.value("facets", json::array())) {
      spec.facets.push_back({str(f, "field"), str(f, "op", "eq"), str(f, "value")});
    }
    return tabular_json(sys_.audit.produce_report(c.token, spec));
  });
  route("POST", "/api/export", [this](Call& c) {
    sys_.auth.authorize(c.token);
    const auto view = tabular_from(c.body.at("view"));
    const auto selection = c.body.value("selection", std::vector<std::size_t>{});
    return json{{"content", Audit::export_view(view, str(c.body, "format", "csv"), selection)}};
  });
  route("GET", "/api/errors", [this, page_size](Call& c) {
    ErrorFilter f;
    f.severity = c.query("severity");
    f.text = c.query("text");
    f.newest_first = c.query("order", "newest") != "oldest";
    return paginate(sys_.audit.list_errors(c.token, f), c, page_size);
  });
  route("POST", "/api/errors/:id/annotations", [this](Call& c) {
    std::uint64_t id = 0;
    try {
      id = std::stoull(c.params.at("id"));
    } catch (const std::exception&) {
      fail(ErrorCode::ValidationError, "error id must be numeric");
    }
    return to_json(sys_.audit.annotate_error(c.token, id, str(c.body, "note")));
  });

  // -- search ----------------------------------------------------------------
  auto search_json = [page_size](const SearchResult& r, const Call& c) {
    auto page = paginate(r.rows, c, page_size, [](const std::vector<std::string>& row) { return json(row); });
    page["table"] = r.table;
    page["columns"] = r.columns;
    return page;
  };
  route("GET", "/api/search", [this, search_json](Call& c) {
    return search_json(sys_.search.simple_search(c.token, c.query("q")), c);
  });
  route("POST", "/api/search", [this, search_json](Call& c) {
    const auto& q = c.body.value("query", json(nullptr));
    if (q.is_string()) return search_json(sys_.search.advanced_search(c.token, q.get<std::string>()), c);
    if (q.is_object()) return search_json(sys_.search.advanced_search(c.token, query_from_json(q)), c);
    fail(ErrorCode::MissingFields, "missing query", {{"missing", {"query"}}});
  });
  route("POST", "/api/search/parse", [](Call& c) {
    const auto q = parse_query(str(c.body, "query"));
    return json{{"tree", query_to_json(q)}, {"canonical", render_query(q)}};
  });

  // -- backups ---------------------------------------------------------------
  confirmable(
      "POST", "/api/backups",
      [this](Call& c) {
        const auto m = sys_.backups.run_backup(c.token, parse_backup_scope(str(c.body, "scope", "All")));
        json tables = json::array();
        for (const auto& t : m.tables) tables.push_back({{"table", t.table_code}, {"rows", t.rows}, {"digest", t.digest}});
        return json{{"backup_id", m.backup_id}, {"scope", to_string(m.scope)}, {"diff_count", m.diff_count},
                    {"directory", m.directory.string()}, {"tables", tables}};
      },
      [this](Call& c) {
        const auto who = sys_.auth.authorize(c.token);
        require(who, Permission::Backup);
        const auto scope = parse_backup_scope(str(c.body, "scope", "All"));
        return json{{"scope", to_string(scope)}, {"tables", tables_in_scope(scope)},
                    {"directory", sys_.backups.directory().string()}};
      });
}

Gateway::~Gateway() { stop(); }

std::string Gateway::issue_confirmation(const std::string& session, const std::string& binding) {
  const auto token = generate_session_token();
  std::lock_guard lock(pending_mutex_);
  const auto now = sys_.clock().now();
  std::erase_if(pending_, [&](const auto& kv) { return kv.second.expires < now; });
  pending_[token] = Pending{session, binding, now + kConfirmationLifetime};
  return token;
}

void Gateway::redeem_confirmation(const std::string& token, const std::string& session, const std::string& binding) {
  std::lock_guard lock(pending_mutex_);
  auto it = pending_.find(token);
  if (it == pending_.end()) fail(ErrorCode::InvalidConfirmation, "unknown or already used confirmation token");
  const Pending p = it->second;
  pending_.erase(it);
  if (p.expires < sys_.clock().now()) fail(ErrorCode::InvalidConfirmation, "confirmation token expired");
  if (p.session != session || p.binding != binding) {
    fail(ErrorCode::InvalidConfirmation, "confirmation token was issued for a different action");
  }
}

std::size_t Gateway::outstanding_confirmations() const {
  std::lock_guard lock(pending_mutex_);
  return pending_.size();
}

ApiResponse Gateway::handle(const ApiRequest& request) {
  try {
    std::map<std::string, std::string> params;
    bool path_known = false;
    const auto* route = router_->match(request.method, request.path, params, path_known);
    if (!route) {
      return {path_known ? 405 : 404,
              error_envelope(ErrorCode::NotFound, "no endpoint " + request.method + " " + request.path, nullptr)};
    }
    if (route->authenticated && request.bearer.empty()) {
      fail(ErrorCode::UnknownSession, "missing bearer token");
    }

    Call call{request, std::move(params), json::object(), request.bearer};
    if (!request.body.empty()) {
      call.body = json::parse(request.body, nullptr, false);
      if (call.body.is_discarded()) call.body = json::object();  // raw uploads (CSV)
      else if (!call.body.is_object()) fail(ErrorCode::ValidationError, "request body must be a JSON object");
    }

    if (!route->confirmable) return {200, ok_envelope(route->handler(call))};

    const bool confirm = call.body.value("confirm", false);
    const auto token = call.body.value("confirmation_token", std::string());
    json bound = call.body;
    bound.erase("confirm");
    bound.erase("confirmation_token");
    const auto binding = request.method + " " + request.path + " " + hex_digest(bound.dump());

    if (!confirm) {
      json consequence;
      if (route->preview) {
        consequence = route->preview(call);
      } else {
        DryRun dry;
        consequence = route->handler(call);
      }
      auto env = ok_envelope({{"confirmed", false}, {"consequence", consequence}});
      env["confirmation_token"] = issue_confirmation(request.bearer, binding);
      return {200, env};
    }
    if (token.empty()) fail(ErrorCode::ConfirmationRequired, "confirm needs the token from the first call");
    redeem_confirmation(token, request.bearer, binding);
    return {200, ok_envelope({{"confirmed", true}, {"result", route->handler(call)}})};
  } catch (const Error& e) {
    return {http_status_for(e.code()), error_envelope(e.code(), e.what(), e.details())};
  } catch (const json::exception& e) {
    return {400, error_envelope(ErrorCode::ValidationError, e.what(), nullptr)};
  } catch (const std::exception& e) {
    return {500, error_envelope(ErrorCode::StorageFailure, e.what(), nullptr)};
  }
}

// ---------------------------------------------------------------------------
// HTTP transport

namespace {

// Plain SO_REUSEADDR; the library default also sets SO_REUSEPORT, which lets
// a second server bind a port that is already taken.
void exclusive_port(socket_t sock) {
  int yes = 1;
  setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
}

void install(httplib::Server& server, Gateway& gw) {
  server.set_socket_options(exclusive_port);
  auto bridge = [&gw](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    r.body = req.body;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const auto auth = req.get_header_value("Authorization");
    if (auth.starts_with("Bearer ")) r.bearer = auth.substr(7);
    auto out = gw.handle(r);
    res.status = out.http_status;
    res.set_content(out.body.dump(), "application/json");
  };
  const std::string any = R"(/.*)";
  server.Get(any, bridge);
  server.Post(any, bridge);
  server.Put(any, bridge);
  server.Patch(any, bridge);
  server.Delete(any, bridge);
}

}  // namespace

void Gateway::listen(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  server_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  install(*server_, *this);
  if (!server_->bind_to_port(host, port)) {
    fail(ErrorCode::BindFailure, "cannot bind " + host + ":" + std::to_string(port));
  }
  server_->listen_after_bind();
}

int Gateway::start_background(const std::string& host) {
  server_ = std::make_unique<httplib::Server>();
  server_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  install(*server_, *this);
  const int port = server_->bind_to_any_port(host);
  if (port <= 0) fail(ErrorCode::BindFailure, "cannot bind " + host);
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void Gateway::stop() {
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace uuis
