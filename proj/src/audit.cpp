#include "uuis/audit.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <set>

#include "uuis/csv.hpp"

namespace uuis {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<double> number(std::string_view s) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || s.empty()) return std::nullopt;
  return v;
}

// Affiliations a log subject or actor answers to.
std::vector<UuisId> affiliations_of(const Database& db, UuisId id) {
  switch (id.family()) {
    case Family::Affiliation: return {id};
    case Family::Item:
      if (const auto* item = db.find<Item>(id)) return owner_affiliations(db, item->owner_id);
      return {};
    case Family::Person:
      if (db.find<User>(id)) return user_affiliations(db, id);
      if (const auto* r = db.find<Request>(id)) return user_affiliations(db, r->requester);
      return {};
    case Family::Location:
      if (const auto* l = db.find<Location>(id)) return {l->affln_id};
      return {};
    case Family::Role:
      if (const auto* r = db.find<UserRole>(id)) return {r->affln_id};
      return {};
    default: return {};
  }
}

bool any_within(const std::vector<UuisId>& affs, UuisId root) {
  return std::any_of(affs.begin(), affs.end(), [&](UuisId a) { return affiliation_contains(root, a); });
}

class LogScope {
 public:
  LogScope(const Database& db, const Principal& who) : db_(db), who_(who), visible_(db, who) {}

  bool entity(UuisId id) {
    if (who_.level == PermissionLevel::L3 || id == who_.user_id) return true;
    if (id.family() == Family::Item) {
      const auto* item = db_.find<Item>(id);
      return item && visible_(*item);
    }
    if (const auto* r = db_.find<Request>(id); r && r->requester == who_.user_id) return true;
    for (auto a : affiliations_of(db_, id)) {
      if (scope_contains(who_.scope, a)) return true;
    }
    return false;
  }

  bool record(const LogRecord& rec) {
    if (who_.level == PermissionLevel::L3) return true;
    if (rec.user_id && entity(*rec.user_id)) return true;
    return rec.item_id && entity(*rec.item_id);
  }

 private:
  const Database& db_;
  const Principal& who_;
  ItemVisibility visible_;
};

AuditEntry summarize(const LogRecord& rec) {
  AuditEntry e{rec.log_id, rec.log_time, rec.user_id, rec.item_id, rec.event_type, rec.content};
  if (e.summary.size() > 60) e.summary = e.summary.substr(0, 57) + "...";
  return e;
}

template <class T>
bool lookup_state(const Database& db, UuisId id, nlohmann::json& out) {
  if (const auto* r = db.find<T>(id)) {
    out = to_json(*r);
    return true;
  }
  return false;
}

std::string level_text(const Database& db, UuisId user) { return std::to_string(to_int(user_level(db, user))); }

void apply_facets(Tabular& t, const std::vector<ReportFacet>& facets) {
  for (const auto& f : facets) {
    const auto col = std::find(t.columns.begin(), t.columns.end(), f.field);
    if (col == t.columns.end()) fail(ErrorCode::UnknownField, "no column '" + f.field + "'");
    const auto idx = static_cast<std::size_t>(col - t.columns.begin());
    std::erase_if(t.rows, [&](const auto& row) { return !facet_matches(row[idx], f.op, f.value); });
  }
}

}  // namespace

std::string_view to_string(AuditCategory c) {
  switch (c) {
    case AuditCategory::Asset: return "asset";
    case AuditCategory::TimeInterval: return "time";
    case AuditCategory::User: return "user";
    case AuditCategory::Department: return "department";
    case AuditCategory::Faculty: return "faculty";
  }
  return "?";
}

AuditCategory parse_audit_category(std::string_view s) {
  for (auto c : {AuditCategory::Asset, AuditCategory::TimeInterval, AuditCategory::User,
                 AuditCategory::Department, AuditCategory::Faculty}) {
    if (to_string(c) == s) return c;
  }
  fail(ErrorCode::ValidationError, "unknown audit category '" + std::string(s) + "'");
}

ReportCategory parse_report_category(std::string_view s) {
  if (s == "locations") return ReportCategory::Locations;
  if (s == "assets") return ReportCategory::Assets;
  if (s == "users") return ReportCategory::Users;
  if (s == "requests") return ReportCategory::Requests;
  fail(ErrorCode::ValidationError, "unknown report category '" + std::string(s) + "'");
}

std::optional<UuisId> entity_subject(std::string_view table, const nlohmann::json& rec) {
  static const std::map<std::string_view, const char*> key_of = {
      {"bldg", "bldg_id"},         {"loctype", "loc_type_id"}, {"loc", "loc_id"},
      {"affln", "affln_id"},       {"cat", "cat_id"},          {"item", "item_id"},
      {"proplist", "prop_id"},     {"itemprop", "item_id"},    {"inventory", "item_id"},
      {"title", "title_id"},       {"users", "user_id"},       {"userinfo", "user_id"},
      {"userrole", "user_role_id"}, {"acl", "user_role_id"},   {"reqtype", "req_type_id"},
      {"request", "req_id"},       {"notice", "req_id"},
  };
  auto it = key_of.find(table);
  if (it == key_of.end() || !rec.is_object() || !rec.contains(it->second)) return std::nullopt;
  return UuisId::try_parse(rec[it->second].get<std::string>());
}

bool facet_matches(std::string_view actual, std::string_view op, std::string_view value) {
  if (op == "eq") return actual == value;
  if (op == "contains") return lower(actual).find(lower(value)) != std::string::npos;
  if (op == "lt" || op == "gt") {
    const auto a = number(actual), b = number(value);
    const int cmp = (a && b) ? (*a < *b ? -1 : (*a > *b ? 1 : 0)) : actual.compare(value);
    return op == "lt" ? cmp < 0 : cmp > 0;
  }
  fail(ErrorCode::ValidationError, "unknown operator '" + std::string(op) + "'");
}

// ---------------------------------------------------------------------------

std::vector<AuditCategory> Audit::audit_options(const std::string& token) {
  const auto who = auth_.authorize(token);
  require(who, Permission::Audit);
  std::vector<AuditCategory> out = {AuditCategory::Asset, AuditCategory::TimeInterval, AuditCategory::User,
                                    AuditCategory::Department};
  const bool above_department =
      who.level == PermissionLevel::L3 || std::any_of(who.scope.begin(), who.scope.end(), [](UuisId a) {
        return affiliation_tier(a) != AffiliationTier::Department;
      });
  if (above_department) out.push_back(AuditCategory::Faculty);
  return out;
}

std::vector<AuditEntry> Audit::audit_logs(const std::string& token, AuditCategory category, const AuditKey& key) {
  const auto who = auth_.authorize(token);
  require(who, Permission::Audit);
  const auto options = audit_options(token);
  if (std::find(options.begin(), options.end(), category) == options.end()) {
    fail(ErrorCode::PermissionDenied, "audit by " + std::string(to_string(category)) + " is outside your scope");
  }
  auto snap = ctx_.store().snapshot();
  const auto& db = snap.db();
  LogScope scope(db, who);

  std::function<bool(const LogRecord&)> match;
  switch (category) {
    case AuditCategory::Asset: {
      if (!key.entity || !db.find<Item>(*key.entity)) fail(ErrorCode::UnknownKey, "no such asset");
      if (!scope.entity(*key.entity)) fail(ErrorCode::PermissionDenied, "asset is outside your scope");
      const auto id = *key.entity;
      match = [id](const LogRecord& r) { return r.item_id == id; };
      break;
    }
    case AuditCategory::User: {
      if (!key.entity || !db.find<User>(*key.entity)) fail(ErrorCode::UnknownKey, "no such user");
      if (!scope.entity(*key.entity)) fail(ErrorCode::PermissionDenied, "user is outside your scope");
      const auto id = *key.entity;
      match = [id](const LogRecord& r) { return r.user_id == id || r.item_id == id; };
      break;
    }
    case AuditCategory::Department:
    case AuditCategory::Faculty: {
      const auto tier = category == AuditCategory::Faculty ? AffiliationTier::Faculty : AffiliationTier::Department;
      if (!key.entity || !db.find<Affiliation>(*key.entity) || affiliation_tier(*key.entity) != tier) {
        fail(ErrorCode::UnknownKey, "no such " + std::string(to_string(category)));
      }
      const auto root = *key.entity;
      if (who.level != PermissionLevel::L3 && !scope_contains(who.scope, root)) {
        fail(ErrorCode::PermissionDenied, "affiliation is outside your scope");
      }
      match = [&db, root](const LogRecord& r) {
        return (r.user_id && any_within(affiliations_of(db, *r.user_id), root)) ||
               (r.item_id && any_within(affiliations_of(db, *r.item_id), root));
      };
      break;
    }
    case AuditCategory::TimeInterval:
      if (!key.from && !key.to) fail(ErrorCode::UnknownKey, "a time interval needs a start or an end");
      match = [&scope](const LogRecord& r) { return scope.record(r); };
      break;
  }

  std::vector<AuditEntry> out;
  snap.for_each_log([&](const LogRecord& r) {
    if (key.from && r.log_time < *key.from) return;
    if (key.to && r.log_time > *key.to) return;
    if (match(r)) out.push_back(summarize(r));
  });
  return out;
}

AuditDetail Audit::drill_down(const std::string& token, std::uint64_t log_id) {
  const auto who = auth_.authorize(token);
  require(who, Permission::Audit);
  auto snap = ctx_.store().snapshot();
  std::optional<LogRecord> found;
  snap.for_each_log([&](const LogRecord& r) {
    if (r.log_id == log_id) found = r;
  });
  if (!found) fail(ErrorCode::UnknownKey, "no log record " + std::to_string(log_id));
  LogScope scope(snap.db(), who);
  if (!scope.record(*found)) fail(ErrorCode::PermissionDenied, "log record is outside your scope");

  AuditDetail d{*found, nullptr};
  if (found->item_id) {
    const auto& db = snap.db();
    const auto id = *found->item_id;
    auto& s = d.subject_state;
    lookup_state<Item>(db, id, s) || lookup_state<User>(db, id, s) || lookup_state<Request>(db, id, s) ||
        lookup_state<Affiliation>(db, id, s) || lookup_state<Location>(db, id, s) ||
        lookup_state<Building>(db, id, s) || lookup_state<LocationType>(db, id, s) ||
        lookup_state<UserRole>(db, id, s) || lookup_state<Category>(db, id, s) ||
        lookup_state<PropertyDef>(db, id, s) || lookup_state<Title>(db, id, s) ||
        lookup_state<RequestType>(db, id, s);
    if (s.is_object()) s.erase("password");
  }
  return d;
}

// ---------------------------------------------------------------------------

Tabular Audit::produce_report(const std::string& token, const ReportSpec& spec) {
  const auto who = auth_.authorize(token);
  require(who, Permission::Report);
  auto snap = ctx_.store().snapshot();
  const auto& db = snap.db();
  const std::set<UuisId> wanted(spec.item_ids.begin(), spec.item_ids.end());
  auto selected = [&](UuisId id) { return wanted.empty() || wanted.contains(id); };
  const bool everything = who.level == PermissionLevel::L3;
  ItemVisibility visible(db, who);
  Tabular t;

  switch (spec.category) {
    case ReportCategory::Assets: {
      const auto group_by = spec.group_by.empty() ? std::string("loc_id") : spec.group_by;
      const auto* group_field = group_by == "none" ? nullptr : find_field<Item>(group_by);
      if (group_by != "none" && !group_field) fail(ErrorCode::UnknownField, "no item field '" + group_by + "'");
      for (const auto& f : spec.facets) {
        if (!find_field<Item>(f.field)) fail(ErrorCode::UnknownField, "no item field '" + f.field + "'");
      }
      std::map<std::string, std::size_t> counts;
      std::size_t seen = 0;
      db.table<Item>().for_each([&](const Item& item) {
        if (!selected(item.item_id) || !visible(item)) return;
        ++seen;
        for (const auto& f : spec.facets) {
          if (!facet_matches(find_field<Item>(f.field)->get(item), f.op, f.value)) return;
        }
        if (group_field) {
          ++counts[group_field->get(item)];
        } else {
          t.rows.push_back({item.item_id.str(), item.item_description, item.code, item.loc_id.str(),
                            item.owner_id.str(), std::string(enum_name(item.status))});
        }
      });
      if (seen == 0) fail(ErrorCode::NoVisibleData, "no visible assets match the selection");
      if (group_field) {
        t.columns = {group_by, "count"};
        for (const auto& [k, n] : counts) t.rows.push_back({k, std::to_string(n)});
      } else {
        t.columns = {"item_id", "item_description", "code", "loc_id", "owner_id", "status"};
      }
      return t;
    }
    case ReportCategory::Locations: {
      std::map<UuisId, std::size_t> per_loc;
      db.table<Item>().for_each([&](const Item& item) {
        if (visible(item)) ++per_loc[item.loc_id];
      });
      t.columns = {"loc_id", "loc_code", "loc_name", "items"};
      db.table<Location>().for_each([&](const Location& l) {
        if (!selected(l.loc_id) || !(everything || scope_contains(who.scope, l.affln_id))) return;
        t.rows.push_back({l.loc_id.str(), l.loc_code, l.loc_name, std::to_string(per_loc[l.loc_id])});
      });
      break;
    }
    case ReportCategory::Users: {
      t.columns = {"user_id", "user_code", "last_name", "first_name", "level"};
      db.table<User>().for_each([&](const User& u) {
        if (!selected(u.user_id)) return;
        const auto affs = user_affiliations(db, u.user_id);
        const bool in_scope = everything || u.user_id == who.user_id ||
                              std::any_of(affs.begin(), affs.end(),
                                          [&](UuisId a) { return scope_contains(who.scope, a); });
        if (in_scope) t.rows.push_back({u.user_id.str(), u.user_code, u.last_name, u.first_name, level_text(db, u.user_id)});
      });
      break;
    }
    case ReportCategory::Requests: {
      std::map<std::string, std::size_t> per_status;
      std::size_t seen = 0;
      db.table<Request>().for_each([&](const Request& r) {
        if (!selected(r.req_id)) return;
        const auto affs = user_affiliations(db, r.requester);
        const bool in_scope = everything || r.requester == who.user_id ||
                              std::any_of(affs.begin(), affs.end(),
                                          [&](UuisId a) { return scope_contains(who.scope, a); });
        if (!in_scope) return;
        ++seen;
        ++per_status[std::string(enum_name(r.status))];
      });
      if (seen == 0) fail(ErrorCode::NoVisibleData, "no visible requests match the selection");
      t.columns = {"status", "count"};
      for (const auto& [k, n] : per_status) t.rows.push_back({k, std::to_string(n)});
      break;
    }
  }
  if (t.rows.empty()) fail(ErrorCode::NoVisibleData, "nothing visible matches the selection");
  apply_facets(t, spec.facets);
  return t;
}

std::string Audit::export_view(const Tabular& view, std::string_view format,
                               const std::vector<std::size_t>& selection) {
  std::vector<std::vector<std::string>> rows;
  if (selection.empty()) {
    rows = view.rows;
  } else {
    for (auto i : selection) {
      if (i >= view.rows.size()) fail(ErrorCode::ValidationError, "row " + std::to_string(i) + " is not displayed");
      rows.push_back(view.rows[i]);
    }
  }
  if (format == "csv") return csv::format(view.columns, rows);
  if (format == "text") {
    std::vector<std::size_t> width(view.columns.size());
    for (std::size_t c = 0; c < view.columns.size(); ++c) width[c] = view.columns[c].size();
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
      std::string out;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        out += cells[c];
        if (c + 1 < cells.size()) out += std::string(width[c] - cells[c].size() + 2, ' ');
      }
      return out + "\n";
    };
    std::string out = line(view.columns);
    for (const auto& r : rows) out += line(r);
    return out;
  }
  fail(ErrorCode::UnknownFormat, "unknown export format '" + std::string(format) + "'");
}

// ---------------------------------------------------------------------------

std::vector<ErrorRecord> Audit::list_errors(const std::string& token, const ErrorFilter& filter) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ErrorMgmt);
  std::vector<ErrorRecord> out;
  const auto needle = lower(filter.text);
  ctx_.store().snapshot().table<ErrorRecord>().for_each([&](const ErrorRecord& e) {
    if (!filter.severity.empty() && e.severity != filter.severity) return;
    if (!needle.empty() && lower(e.message).find(needle) == std::string::npos) return;
    out.push_back(e);
  });
  if (filter.newest_first) std::reverse(out.begin(), out.end());
  return out;
}

ErrorRecord Audit::annotate_error(const std::string& token, std::uint64_t error_id, const std::string& note) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ErrorMgmt);
  if (note.empty()) fail(ErrorCode::ValidationError, "an annotation needs text");
  return ctx_.run("annotate_error", {{"error_id", error_id}}, [&](Transaction& txn) {
    const auto* found = txn.find<ErrorRecord>(error_id);
    if (!found) fail(ErrorCode::UnknownError, "no error message " + std::to_string(error_id));
    ErrorRecord e = *found;
    e.annotations.push_back(Annotation{who.user_id, txn.now(), note});
    txn.put(e);
    txn.log(who.user_id, std::nullopt, event::Update, "error " + std::to_string(error_id) + " annotated");
    return e;
  });
}

}  // namespace uuis
