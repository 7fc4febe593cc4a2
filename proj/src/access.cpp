#include "uuis/access.hpp"

#include <algorithm>

namespace uuis {

void require(const Principal& who, Permission p) {
  if (!who.grants(p)) {
    fail(ErrorCode::PermissionDenied, "missing permission " + std::string(permission_name(p)));
  }
}

const User* find_user_by_code(const Database& db, std::string_view user_code) {
  return db.table<User>().find_if([&](const User& u) { return u.user_code == user_code; });
}

std::vector<UserRole> roles_of(const Database& db, UuisId user_id) {
  std::vector<UserRole> out;
  db.table<UserRole>().for_each([&](const UserRole& r) {
    if (r.user_id == user_id) out.push_back(r);
  });
  return out;
}

PermissionMask user_mask(const Database& db, UuisId user_id) {
  std::vector<RoleGrant> grants;
  for (const auto& role : roles_of(db, user_id)) {
    const auto* acl = db.table<AclEntry>().find(role.user_role_id);
    grants.push_back(RoleGrant{role.status == RoleStatus::Accepted,
                               acl ? acl->permission : PermissionMask{}});
  }
  return effective_mask(grants);
}

PermissionLevel user_level(const Database& db, UuisId user_id) {
  return level_of(user_mask(db, user_id));
}

std::vector<UuisId> user_affiliations(const Database& db, UuisId user_id) {
  std::vector<UuisId> out;
  for (const auto& role : roles_of(db, user_id)) {
    if (role.status == RoleStatus::Accepted &&
        std::find(out.begin(), out.end(), role.affln_id) == out.end()) {
      out.push_back(role.affln_id);
    }
  }
  return out;
}

Principal resolve_principal(const Database& db, UuisId user_id) {
  Principal p;
  p.user_id = user_id;
  p.mask = user_mask(db, user_id);
  p.level = level_of(p.mask);
  p.scope = user_affiliations(db, user_id);
  return p;
}

bool scope_contains(const std::vector<UuisId>& scope, UuisId affln) {
  return std::any_of(scope.begin(), scope.end(),
                     [&](UuisId root) { return affiliation_contains(root, affln); });
}

std::vector<UuisId> owner_affiliations(const Database& db, UuisId owner_id) {
  switch (owner_id.family()) {
    case Family::Affiliation: return {owner_id};
    case Family::Person: return user_affiliations(db, owner_id);
    default: return {};
  }
}

bool can_view_item(const Database& db, const Principal& who, const Item& item) {
  if (who.grants(Permission::ViewDeptAssets)) {
    if (who.level == PermissionLevel::L3) return true;
    if (item.owner_id == who.user_id) return true;
    for (auto affln : owner_affiliations(db, item.owner_id)) {
      if (scope_contains(who.scope, affln)) return true;
    }
  }
  return who.grants(Permission::ViewOwn) && item.owner_id == who.user_id;
}

bool ItemVisibility::operator()(const Item& item) {
  auto [it, inserted] = by_owner_.try_emplace(item.owner_id.value(), false);
  if (inserted) it->second = can_view_item(db_, who_, item);
  return it->second;
}

}  // namespace uuis
