#include "uuis/system.hpp"

namespace uuis {

const std::vector<TitleSeed>& default_titles() {
  static const std::vector<TitleSeed> titles = {
      {"Student", PermissionLevel::L0},       {"Staff", PermissionLevel::L0},
      {"Technician", PermissionLevel::L1},    {"Administrator", PermissionLevel::L2},
      {"Chair", PermissionLevel::L3},         {"Dean", PermissionLevel::L3},
      {"Principal", PermissionLevel::L3},
  };
  return titles;
}

System::System(ServiceConfig config, std::shared_ptr<const Clock> clock, std::unique_ptr<Store> store,
               std::unique_ptr<ChallengeProvider> challenges)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      store_(std::move(store)),
      ctx_(*store_, config_),
      auth(ctx_, std::move(challenges)),
      directory(ctx_, auth),
      assets(ctx_, auth),
      requests(ctx_, auth),
      audit(ctx_, auth),
      search(ctx_, auth),
      backups(ctx_, auth, config_.backup_dir) {}

std::unique_ptr<System> System::in_memory(ServiceConfig config, std::shared_ptr<const Clock> clock,
                                          std::unique_ptr<ChallengeProvider> challenges) {
  auto store = Store::in_memory(clock);
  return std::make_unique<System>(std::move(config), std::move(clock), std::move(store), std::move(challenges));
}

std::unique_ptr<System> System::open(ServiceConfig config, std::shared_ptr<const Clock> clock) {
  auto store = Store::open(config.data_dir, clock, config.sync_writes);
  return std::make_unique<System>(std::move(config), std::move(clock), std::move(store));
}

bool System::initialized() const { return !store_->snapshot().table<User>().empty(); }

UuisId System::bootstrap(const BootstrapOptions& o) {
  if (initialized()) fail(ErrorCode::ValidationError, "store is already initialized");
  if (!password_meets_policy(o.admin_password)) {
    fail(ErrorCode::WeakPassword, "administrator password does not meet the policy");
  }
  const auto digest = auth.hasher().hash(o.admin_password);

  return ctx_.run("bootstrap", {{"admin_code", o.admin_code}}, [&](Transaction& txn) {
    const auto now = txn.now();
    for (auto p : all_permissions()) {
      txn.put(PermissionDef{static_cast<std::uint64_t>(p), std::string(permission_name(p))});
    }

    txn.put(Affiliation{university_id(), o.university_name, o.university_code});
    txn.claim("affln_name:" + o.university_name);
    txn.claim("affln_code:" + o.university_code);
    txn.log(std::nullopt, university_id(), event::Create, "affiliation " + o.university_code);

    UuisId principal_title;
    for (const auto& t : default_titles()) {
      Title title{txn.allocate(Family::Person), std::string(t.name), default_mask(t.level)};
      txn.put(title);
      txn.log(std::nullopt, title.title_id, event::Create, "title " + title.title_name);
      if (t.name == "Principal") principal_title = title.title_id;
    }

    struct TypeSeed {
      const char* code;
      const char* description;
      PermissionLevel level;
      RequestEffect effect;
    };
    for (const auto& t : {TypeSeed{"TRANSFER", "Move an item to another location", PermissionLevel::L1,
                                   RequestEffect::Transfer},
                          TypeSeed{"CHECKOUT", "Borrow an item", PermissionLevel::L1, RequestEffect::Checkout},
                          TypeSeed{"PROBLEM", "Report a problem with an item", PermissionLevel::L1,
                                   RequestEffect::Record},
                          TypeSeed{"ACQUIRE", "Acquire new equipment", PermissionLevel::L2, RequestEffect::Record},
                          TypeSeed{"DISPOSE", "Dispose of an item", PermissionLevel::L3, RequestEffect::Record}}) {
      RequestType rt{txn.allocate(Family::Person), t.code, t.description,
                     PermissionMask{approve_permission(t.level)}, t.effect};
      txn.put(rt);
      txn.log(std::nullopt, rt.req_type_id, event::Create, std::string("request type ") + t.code);
    }

    for (const auto& [name, description] :
         {std::pair{"Room", "Teaching or meeting room"}, std::pair{"Lab", "Laboratory"},
          std::pair{"Office", "Office"}, std::pair{"Storage", "Storage area"}}) {
      LocationType lt{txn.allocate(Family::Location), name, description};
      txn.put(lt);
      txn.log(std::nullopt, lt.loc_type_id, event::Create, std::string("location type ") + name);
    }

    seed_search_metadata(txn);

    User admin{txn.allocate(Family::Person), o.admin_code, "Administrator", "System", digest, now, 0, false};
    txn.claim("user_code:" + admin.user_code);
    txn.put(admin);
    txn.put(UserInfo{admin.user_id, "", "", "", "", ""});
    txn.log(std::nullopt, admin.user_id, event::Create, "user " + admin.user_code);
    UserRole role{txn.allocate(Family::Role), admin.user_id, principal_title, university_id(), RoleStatus::Accepted};
    txn.put(role);
    txn.put(AclEntry{role.user_role_id, PermissionMask::full()});
    txn.log(std::nullopt, role.user_role_id, event::Create, "role for " + admin.user_code);
    return admin.user_id;
  });
}

}  // namespace uuis
