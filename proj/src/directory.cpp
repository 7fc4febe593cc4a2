#include "uuis/directory.hpp"

#include <algorithm>
#include <set>

#include "uuis/csv.hpp"

namespace uuis {
namespace {

bool valid_email(std::string_view s) {
  if (s.size() > 255 || s.find_first_of(" \t,") != std::string_view::npos) return false;
  const auto at = s.find('@');
  if (at == std::string_view::npos || at == 0 || s.find('@', at + 1) != std::string_view::npos) {
    return false;
  }
  const auto domain = s.substr(at + 1);
  const auto dot = domain.find('.');
  return dot != std::string_view::npos && dot > 0 && dot + 1 < domain.size();
}

bool valid_phone(std::string_view s) {
  return s.empty() ||
         (s.size() == 10 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }));
}

bool valid_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int m = (s[5] - '0') * 10 + (s[6] - '0');
  const int d = (s[8] - '0') * 10 + (s[9] - '0');
  return m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

std::string trim_copy(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

const Affiliation* find_affiliation_by_code(const Database& db, std::string_view code) {
  return db.table<Affiliation>().find_if([&](const Affiliation& a) { return a.affln_code == code; });
}

void check_width(std::string_view value, std::size_t max, std::string_view what) {
  if (value.size() > max) {
    fail(ErrorCode::ValidationError, std::string(what) + " exceeds " + std::to_string(max) + " characters");
  }
}

}  // namespace

const std::vector<std::string>& user_import_header() {
  static const std::vector<std::string> h = {"user_code", "last_name",  "first_name", "email",
                                             "dob",       "title_code", "affln_code", "initial_password"};
  return h;
}

std::string rejections_csv(const std::vector<std::string>& header,
                           const std::vector<RejectedRow>& rejected) {
  auto h = header;
  h.push_back("reason");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rejected) {
    auto cells = r.cells;
    cells.push_back(r.reason);
    rows.push_back(std::move(cells));
  }
  return csv::format(h, rows);
}

// ---------------------------------------------------------------------------
// Profiles and roles

UserInfo Directory::view_edit_profile(const std::string& token, UuisId target_user,
                                      const FieldEdits& edits) {
  const auto who = auth_.authorize(token);
  if (who.user_id != target_user) require(who, Permission::ManageUsers);

  static const std::set<std::string> editable = {"email", "home_phone", "cell_phone", "street_address"};
  for (const auto& [k, v] : edits) {
    if (!editable.contains(k)) fail(ErrorCode::ValidationError, "field '" + k + "' is not editable");
  }
  if (auto it = edits.find("email"); it != edits.end() && !valid_email(it->second)) {
    fail(ErrorCode::ValidationError, "malformed email address");
  }
  for (const char* phone : {"home_phone", "cell_phone"}) {
    if (auto it = edits.find(phone); it != edits.end() && !valid_phone(it->second)) {
      fail(ErrorCode::ValidationError, std::string(phone) + " must be ten digits");
    }
  }

  if (edits.empty()) {
    auto snap = ctx_.store().snapshot();
    if (!snap.find<User>(target_user)) fail(ErrorCode::NotFound, "no user " + target_user.str());
    const auto* info = snap.find<UserInfo>(target_user);
    return info ? *info : UserInfo{target_user, "", "", "", "", ""};
  }

  nlohmann::json payload = {{"target", target_user.str()}};
  return ctx_.run("view_edit_profile", payload, [&](Transaction& txn) {
    if (!txn.find<User>(target_user)) fail(ErrorCode::NotFound, "no user " + target_user.str());
    UserInfo info = txn.find<UserInfo>(target_user) ? *txn.find<UserInfo>(target_user)
                                                    : UserInfo{target_user, "", "", "", "", ""};
    std::string changed;
    for (const auto& [k, v] : edits) {
      find_field<UserInfo>(k)->set(info, v);
      changed += (changed.empty() ? "" : ",") + k;
    }
    txn.put(info);
    txn.log(who.user_id, target_user, event::Update, "profile: " + changed);
    return info;
  });
}

AclEntry Directory::update_role_profile(const std::string& token, UuisId user_role_id,
                                        PermissionMask new_mask) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageUsers);
  nlohmann::json payload = {{"user_role_id", user_role_id.str()}, {"mask", new_mask.bits()}};
  return ctx_.run("update_role_profile", payload, [&](Transaction& txn) {
    const auto& role = txn.get<UserRole>(user_role_id);
    const auto target_level = user_level(txn.db(), role.user_id);
    if (to_int(target_level) >= who.level_int()) {
      fail(ErrorCode::LevelNotLower, "target user's level is not below yours");
    }
    if (to_int(level_of(new_mask)) >= who.level_int()) {
      fail(ErrorCode::LevelNotLower, "cannot grant a level at or above your own");
    }
    AclEntry acl{user_role_id, new_mask};
    txn.put(acl);
    txn.log(who.user_id, user_role_id, event::Update, "acl permission=" + std::to_string(new_mask.bits()));
    return acl;
  });
}

// ---------------------------------------------------------------------------
// Organization structure

bool Directory::cosign_ok(const Database& db, const Credentials& c, UuisId required_affln) const {
  const User* u = find_user_by_code(db, c.user_code);
  if (!u || u->login_attempts >= ctx_.config().lockout_threshold) return false;
  if (!auth_.hasher().verify(c.password, u->password)) return false;
  if (!user_mask(db, u->user_id).grants(Permission::ApproveL3)) return false;
  const auto roles = roles_of(db, u->user_id);
  return std::any_of(roles.begin(), roles.end(), [&](const UserRole& r) {
    return r.status == RoleStatus::Accepted && r.affln_id == required_affln;
  });
}

Affiliation Directory::insert_affiliation(Transaction& txn, const Principal& who, UuisId id,
                                          const std::string& name, const std::string& code) {
  if (trim_copy(name).empty() || trim_copy(code).empty()) {
    fail(ErrorCode::ValidationError, "name and code are required");
  }
  check_width(name, 50, "name");
  check_width(code, 10, "code");
  txn.claim("affln_name:" + name);
  txn.claim("affln_code:" + code);
  const auto& table = txn.table<Affiliation>();
  if (table.find_if([&](const Affiliation& a) { return a.affln_name == name; })) {
    fail(ErrorCode::DuplicateName, "an affiliation named '" + name + "' exists");
  }
  if (table.find_if([&](const Affiliation& a) { return a.affln_code == code; })) {
    fail(ErrorCode::DuplicateCode, "an affiliation coded '" + code + "' exists");
  }
  Affiliation a{id, name, code};
  txn.put(a);
  txn.log(who.user_id, id, event::Create, "affiliation " + code);
  return a;
}

Affiliation Directory::create_department(const std::string& token, const std::string& name,
                                         const std::string& code, UuisId faculty,
                                         const Credentials& cosigner) {
  const auto who = auth_.authorize(token);
  require(who, Permission::CreateDepartment);
  nlohmann::json payload = {{"name", name}, {"code", code}, {"faculty", faculty.str()}};
  return ctx_.run("create_department", payload, [&](Transaction& txn) {
    if (faculty.family() != Family::Affiliation || !txn.find<Affiliation>(faculty) ||
        affiliation_tier(faculty) != AffiliationTier::Faculty) {
      fail(ErrorCode::UnknownFaculty, faculty.str() + " is not a faculty");
    }
    if (!cosign_ok(txn.db(), cosigner, faculty)) {
      fail(ErrorCode::CosignFailed, "the faculty dean's confirmation failed");
    }
    const auto ff = faculty_code_of(faculty);
    txn.claim("affln_alloc:" + std::to_string(ff));
    std::uint64_t max_tail = 0;
    txn.table<Affiliation>().for_each([&](const Affiliation& a) {
      if (affiliation_tier(a.affln_id) == AffiliationTier::Department && faculty_code_of(a.affln_id) == ff) {
        max_tail = std::max(max_tail, a.affln_id.counter() % kDepartmentSpan);
      }
    });
    if (max_tail + 1 >= kDepartmentSpan) {
      fail(ErrorCode::FacultySpaceExhausted, "no department numbers left in faculty " + faculty.str());
    }
    return insert_affiliation(txn, who, department_id(ff, max_tail + 1), name, code);
  });
}

Affiliation Directory::create_faculty(const std::string& token, const std::string& name,
                                      const std::string& code,
                                      const std::optional<Credentials>& cosigner) {
  const auto who = auth_.authorize(token);
  require(who, Permission::CreateFaculty);
  nlohmann::json payload = {{"name", name}, {"code", code}};
  return ctx_.run("create_faculty", payload, [&](Transaction& txn) {
    const auto caller_roles = roles_of(txn.db(), who.user_id);
    const bool caller_is_principal =
        who.grants(Permission::ApproveL3) &&
        std::any_of(caller_roles.begin(), caller_roles.end(), [](const UserRole& r) {
          return r.status == RoleStatus::Accepted && r.affln_id == university_id();
        });
    if (!caller_is_principal && (!cosigner || !cosign_ok(txn.db(), *cosigner, university_id()))) {
      fail(ErrorCode::CosignFailed, "the principal's confirmation is required");
    }
    txn.claim("affln_alloc:faculty");
    std::uint64_t max_code = 0;
    txn.table<Affiliation>().for_each([&](const Affiliation& a) {
      if (affiliation_tier(a.affln_id) == AffiliationTier::Faculty) {
        max_code = std::max(max_code, faculty_code_of(a.affln_id));
      }
    });
    if (trim_copy(name).empty() || trim_copy(code).empty()) {
      fail(ErrorCode::ValidationError, "incomplete information: name and code are required");
    }
    if (max_code >= kMaxFacultyCode) {
      fail(ErrorCode::FacultySpaceExhausted, "all 99 faculty numbers are in use");
    }
    return insert_affiliation(txn, who, faculty_id(max_code + 1), name, code);
  });
}

Building Directory::add_building(const std::string& token, const std::string& code,
                                 const std::string& name) {
  const auto who = auth_.authorize(token);
  require(who, Permission::AddLocation);
  return ctx_.run("add_building", {{"code", code}}, [&](Transaction& txn) {
    if (trim_copy(code).empty() || trim_copy(name).empty()) {
      fail(ErrorCode::ValidationError, "building code and name are required");
    }
    Building b{txn.allocate(Family::Location), "", ""};
    find_field<Building>("bldg_code")->set(b, code);
    find_field<Building>("bldg_name")->set(b, name);
    txn.claim("loc_code:" + code);
    if (txn.table<Building>().find_if([&](const Building& x) { return x.bldg_code == code || x.bldg_name == name; })) {
      fail(ErrorCode::DuplicateCode, "building '" + code + "' exists");
    }
    txn.put(b);
    txn.log(who.user_id, b.bldg_id, event::Create, "building " + code);
    return b;
  });
}

LocationType Directory::add_location_type(const std::string& token, const std::string& name,
                                          const std::string& description) {
  const auto who = auth_.authorize(token);
  require(who, Permission::AddLocation);
  return ctx_.run("add_location_type", {{"name", name}}, [&](Transaction& txn) {
    if (trim_copy(name).empty()) fail(ErrorCode::ValidationError, "type name is required");
    LocationType t{txn.allocate(Family::Location), "", ""};
    find_field<LocationType>("loc_type_name")->set(t, name);
    find_field<LocationType>("description")->set(t, description);
    txn.claim("loc_type:" + name);
    if (txn.table<LocationType>().find_if([&](const LocationType& x) { return x.loc_type_name == name; })) {
      fail(ErrorCode::DuplicateName, "location type '" + name + "' exists");
    }
    txn.put(t);
    txn.log(who.user_id, t.loc_type_id, event::Create, "location type " + name);
    return t;
  });
}

Location Directory::add_location(const std::string& token, const std::string& name,
                                 const std::string& code, UuisId type, UuisId parent, UuisId owner,
                                 const std::string& comment) {
  const auto who = auth_.authorize(token);
  require(who, Permission::AddLocation);
  nlohmann::json payload = {{"name", name}, {"code", code}, {"parent", parent.str()}};
  return ctx_.run("add_location", payload, [&](Transaction& txn) {
    if (trim_copy(name).empty() || trim_copy(code).empty()) {
      fail(ErrorCode::ValidationError, "location name and code are required");
    }
    Location loc;
    loc.loc_id = txn.allocate(Family::Location);
    if (parent == loc.loc_id) fail(ErrorCode::CycleDetected, "a location cannot contain itself");

    if (const auto* b = txn.find<Building>(parent)) {
      loc.bldg_id = b->bldg_id;
    } else if (const auto* p = txn.find<Location>(parent)) {
      // Walk to the building; a revisit means the stored forest is corrupt.
      std::set<UuisId> seen{loc.loc_id};
      const Location* cur = p;
      while (cur) {
        if (!seen.insert(cur->loc_id).second) fail(ErrorCode::CycleDetected, "location cycle via " + cur->loc_id.str());
        if (txn.find<Building>(cur->parent_loc_id)) break;
        cur = txn.find<Location>(cur->parent_loc_id);
        if (!cur) fail(ErrorCode::UnknownParent, "dangling parent chain");
      }
      loc.bldg_id = p->bldg_id;
    } else {
      fail(ErrorCode::UnknownParent, parent.str() + " is neither a building nor a location");
    }
    if (!txn.find<LocationType>(type)) fail(ErrorCode::UnknownReference, "unknown location type " + type.str());
    if (!txn.find<Affiliation>(owner)) fail(ErrorCode::UnknownReference, "unknown owner " + owner.str());

    loc.parent_loc_id = parent;
    find_field<Location>("loc_code")->set(loc, code);
    find_field<Location>("loc_name")->set(loc, name);
    find_field<Location>("comment")->set(loc, comment);
    loc.affln_id = owner;
    loc.loc_type_id = type;
    loc.status = LocationStatus::Available;

    txn.claim("loc_code:" + code);
    if (txn.table<Location>().find_if([&](const Location& l) { return l.loc_code == code; }) ||
        txn.table<Building>().find_if([&](const Building& b) { return b.bldg_code == code; })) {
      fail(ErrorCode::DuplicateCode, "location code '" + code + "' is in use");
    }
    txn.put(loc);
    txn.log(who.user_id, loc.loc_id, event::Create, "location " + code + " in " + parent.str());
    return loc;
  });
}

std::vector<UuisId> Directory::location_chain(UuisId loc) const {
  auto snap = ctx_.store().snapshot();
  std::vector<UuisId> chain;
  std::set<UuisId> seen;
  UuisId cur = loc;
  while (seen.insert(cur).second) {
    chain.push_back(cur);
    if (snap.find<Building>(cur)) return chain;
    const auto* l = snap.find<Location>(cur);
    if (!l) fail(ErrorCode::NotFound, "unknown location " + cur.str());
    cur = l->parent_loc_id;
  }
  fail(ErrorCode::CycleDetected, "location cycle at " + cur.str());
}

std::vector<Affiliation> Directory::affiliations() const {
  return ctx_.store().snapshot().table<Affiliation>().rows();
}

// ---------------------------------------------------------------------------
// Users

std::optional<std::string> Directory::check_row(const Database& db, const Principal& who,
                                                const UserImportRow& row, Validated& out) const {
  if (row.user_code.empty() || row.user_code.size() > 10) return "user_code must be 1-10 characters";
  if (row.last_name.empty() || row.last_name.size() > 20) return "last_name must be 1-20 characters";
  if (row.first_name.empty() || row.first_name.size() > 20) return "first_name must be 1-20 characters";
  if (!valid_email(row.email)) return "malformed email";
  if (!valid_date(row.dob)) return "dob must be YYYY-MM-DD";
  if (find_user_by_code(db, row.user_code)) return "duplicate user_code";
  const Title* title =
      db.table<Title>().find_if([&](const Title& t) { return t.title_name == row.title_code; });
  if (!title) return "unknown title_code";
  const Affiliation* affln = find_affiliation_by_code(db, row.affln_code);
  if (!affln) return "unknown affln_code";
  if (who.level != PermissionLevel::L3) {
    if (to_int(level_of(title->permission)) >= who.level_int()) return "title exceeds importer level";
    if (!scope_contains(who.scope, affln->affln_id)) return "affiliation outside importer scope";
  }
  if (!password_meets_policy(row.initial_password)) return "weak initial_password";
  out = Validated{row, title->title_id, affln->affln_id, title->permission};
  return std::nullopt;
}

UuisId Directory::insert_user(Transaction& txn, const Principal& who, const Validated& v) {
  txn.claim("user_code:" + v.row.user_code);
  User u;
  u.user_id = txn.allocate(Family::Person);
  u.user_code = v.row.user_code;
  u.last_name = v.row.last_name;
  u.first_name = v.row.first_name;
  u.password = auth_.hasher().hash(v.row.initial_password);
  u.date_modified = txn.now();
  u.must_change_password = true;
  txn.put(u);
  txn.put(UserInfo{u.user_id, v.row.email, v.row.dob, "", "", ""});
  txn.log(who.user_id, u.user_id, event::Create, "user " + u.user_code);

  UserRole role{txn.allocate(Family::Role), u.user_id, v.title_id, v.affln_id, RoleStatus::Accepted};
  txn.put(role);
  txn.put(AclEntry{role.user_role_id, v.title_mask});
  txn.log(who.user_id, role.user_role_id, event::Create,
          "role for " + u.user_code + " permission=" + std::to_string(v.title_mask.bits()));
  return u.user_id;
}

UuisId Directory::create_user(const std::string& token, const UserImportRow& row) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageUsers);
  return ctx_.run("create_user", {{"user_code", row.user_code}}, [&](Transaction& txn) {
    Validated v;
    if (auto reason = check_row(txn.db(), who, row, v)) {
      fail(*reason == "duplicate user_code" ? ErrorCode::DuplicateCode : ErrorCode::ValidationError, *reason);
    }
    return insert_user(txn, who, v);
  });
}

UserRole Directory::grant_role(const std::string& token, UuisId user_id, UuisId title_id, UuisId affln_id) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageUsers);
  nlohmann::json payload = {{"user_id", user_id.str()}, {"title_id", title_id.str()}};
  return ctx_.run("grant_role", payload, [&](Transaction& txn) {
    txn.get<User>(user_id);
    const auto& title = txn.get<Title>(title_id);
    if (!txn.find<Affiliation>(affln_id)) fail(ErrorCode::UnknownReference, "unknown affiliation");
    if (who.level != PermissionLevel::L3) {
      if (to_int(level_of(title.permission)) >= who.level_int()) {
        fail(ErrorCode::LevelNotLower, "cannot grant a title at or above your level");
      }
      if (!scope_contains(who.scope, affln_id)) fail(ErrorCode::PermissionDenied, "affiliation outside scope");
    }
    UserRole role{txn.allocate(Family::Role), user_id, title_id, affln_id, RoleStatus::Accepted};
    txn.put(role);
    txn.put(AclEntry{role.user_role_id, title.permission});
    txn.log(who.user_id, role.user_role_id, event::Create,
            "role for " + user_id.str() + " permission=" + std::to_string(title.permission.bits()));
    return role;
  });
}

ImportReport Directory::bulk_import_users(const std::string& token, std::string_view csv_text) {
  const auto who = auth_.authorize(token);
  require(who, Permission::BulkImport);

  const auto records = csv::parse(csv_text);
  if (records.empty()) fail(ErrorCode::EmptyFile, "the file is empty");
  if (records.front().cells != user_import_header()) {
    fail(ErrorCode::MalformedHeader, "header must be: user_code,last_name,first_name,email,dob,"
                                     "title_code,affln_code,initial_password");
  }

  // A structurally broken row rejects the whole file; rows that parse but
  // fail validation are skipped and reported.
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].cells.size() != user_import_header().size()) {
      fail(ErrorCode::RowFormatError,
           "line " + std::to_string(records[i].line) + ": expected " +
               std::to_string(user_import_header().size()) + " columns, found " +
               std::to_string(records[i].cells.size()),
           {{"line", records[i].line}});
    }
  }

  return ctx_.run("bulk_import_users", {{"rows", records.size() - 1}}, [&](Transaction& txn) {
    ImportReport report;
    std::set<std::string> codes_in_file;
    for (std::size_t i = 1; i < records.size(); ++i) {
      const auto& rec = records[i];
      const auto& c = rec.cells;
      UserImportRow row{c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]};
      Validated v;
      auto reason = check_row(txn.db(), who, row, v);
      if (!reason && !codes_in_file.insert(row.user_code).second) reason = "duplicate user_code";
      if (reason) {
        report.rejected.push_back({rec.line, *reason, rec.cells});
        continue;
      }
      report.created_ids.push_back(insert_user(txn, who, v));
    }
    report.created = report.created_ids.size();
    txn.log(who.user_id, std::nullopt, event::Import,
            "users created=" + std::to_string(report.created) +
                " rejected=" + std::to_string(report.rejected.size()));
    return report;
  });
}

UserProfile Directory::lookup_user(const std::string& token, std::string_view user_code) {
  const auto who = auth_.authorize(token);
  auto snap = ctx_.store().snapshot();
  const User* u = find_user_by_code(snap.db(), user_code);
  if (!u) fail(ErrorCode::NotFound, "no user '" + std::string(user_code) + "'");
  if (u->user_id != who.user_id) require(who, Permission::ManageUsers);
  UserProfile p;
  p.user = *u;
  p.user.password.clear();
  if (const auto* info = snap.find<UserInfo>(u->user_id)) p.info = *info;
  p.roles = roles_of(snap.db(), u->user_id);
  return p;
}

}  // namespace uuis
