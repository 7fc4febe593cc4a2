#pragma once

// Who is calling and what they may see. Everything here is a pure function
// of a Database value, so it works on snapshots and inside transactions.

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "uuis/domain.hpp"
#include "uuis/store.hpp"

namespace uuis {

struct Principal {
  UuisId user_id;
  PermissionMask mask;
  PermissionLevel level = PermissionLevel::L0;
  std::vector<UuisId> scope;  // affiliations of accepted roles

  bool grants(Permission p) const noexcept { return mask.grants(p); }
  int level_int() const noexcept { return to_int(level); }
};

// Throws PermissionDenied naming the missing permission.
void require(const Principal& who, Permission p);

const User* find_user_by_code(const Database& db, std::string_view user_code);
std::vector<UserRole> roles_of(const Database& db, UuisId user_id);
PermissionMask user_mask(const Database& db, UuisId user_id);
PermissionLevel user_level(const Database& db, UuisId user_id);
std::vector<UuisId> user_affiliations(const Database& db, UuisId user_id);
Principal resolve_principal(const Database& db, UuisId user_id);

// True if any scope affiliation contains `affln`.
bool scope_contains(const std::vector<UuisId>& scope, UuisId affln);

// Affiliations an owner id stands for: itself for affiliations, the role
// affiliations for users, nothing otherwise.
std::vector<UuisId> owner_affiliations(const Database& db, UuisId owner_id);

// Row-level asset visibility:
//   level 3 with ViewDeptAssets  -> every item
//   ViewDeptAssets               -> owner resolves into the caller's scope subtree
//   ViewOwn                      -> owner is the caller
bool can_view_item(const Database& db, const Principal& who, const Item& item);

// can_view_item memoized per owner for scans over many items.
class ItemVisibility {
 public:
  ItemVisibility(const Database& db, const Principal& who) : db_(db), who_(who) {}
  bool operator()(const Item& item);

 private:
  const Database& db_;
  const Principal& who_;
  std::unordered_map<std::uint64_t, bool> by_owner_;
};

}  // namespace uuis
