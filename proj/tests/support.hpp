#pragma once

// Shared test fixture: an in-memory system on a manual clock with an
// administrator, plus direct seeding helpers that bypass service checks.

#include <filesystem>
#include <random>
#include <unistd.h>
#include <string>

#include "uuis/gateway.hpp"
#include "uuis/system.hpp"

namespace uuis::test {

inline constexpr const char* kPassword = "Passw0rd!";
inline constexpr const char* kAdminPassword = "Adm1n!pass";

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> n{0};
    path_ = std::filesystem::temp_directory_path() /
            ("uuis-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline ServiceConfig test_config(const std::filesystem::path& scratch) {
  auto c = ServiceConfig::for_testing();
  c.challenge_elevated = false;
  c.data_dir = scratch / "data";
  c.backup_dir = scratch / "backups";
  return c;
}

class Fixture {
 public:
  // `durable` keeps the store under the scratch directory instead of memory.
  explicit Fixture(std::function<void(ServiceConfig&)> tweak = nullptr,
                   std::unique_ptr<ChallengeProvider> challenges = nullptr, bool durable = false)
      : clock(std::make_shared<ManualClock>()) {
    auto config = test_config(scratch.path());
    if (tweak) tweak(config);
    sys = durable ? System::open(config, clock) : System::in_memory(config, clock, std::move(challenges));
    admin_id = sys->bootstrap({"admin", kAdminPassword});
    admin = relogin_admin();
    password_digest = sys->auth.hasher().hash(kPassword);
    sys->store().snapshot().table<Title>().for_each([&](const Title& t) { titles[t.title_name] = t.title_id; });
    sys->store().snapshot().table<LocationType>().for_each([&](const LocationType& t) {
      if (t.loc_type_name == "Room") room_type = t.loc_type_id;
    });
  }

  Store& store() { return sys->store(); }

  // Challenge-aware for providers that accept "right".
  std::string relogin_admin() {
    try {
      admin = sys->auth.login("admin", kAdminPassword).token;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ChallengeRequired) throw;
      admin = sys->auth.login("admin", kAdminPassword, ChallengeAnswer{e.details().value("challenge_id", ""), "right"})
                  .token;
    }
    return admin;
  }

  template <class F>
  auto seed(F&& work) {
    return store().transact([&](Transaction& txn) {
      txn.log(std::nullopt, std::nullopt, "SEED", "fixture");
      return work(txn);
    });
  }

  UuisId faculty(std::uint64_t ff, const std::string& name = "") {
    const auto id = faculty_id(ff);
    seed([&](Transaction& txn) {
      txn.put(Affiliation{id, name.empty() ? "Faculty " + std::to_string(ff) : name, "F" + std::to_string(ff)});
    });
    return id;
  }

  UuisId department(std::uint64_t ff, std::uint64_t tail, const std::string& name = "") {
    const auto id = department_id(ff, tail);
    const auto code = "D" + std::to_string(ff) + "_" + std::to_string(tail);
    seed([&](Transaction& txn) { txn.put(Affiliation{id, name.empty() ? "Dept " + code : name, code}); });
    return id;
  }

  // A user holding one accepted role with the level's default mask.
  UuisId user(const std::string& code, PermissionLevel level, UuisId affln) {
    return user_with_mask(code, default_mask(level), affln);
  }

  UuisId user_with_mask(const std::string& code, PermissionMask mask, UuisId affln) {
    return seed([&](Transaction& txn) {
      User u{txn.allocate(Family::Person), code, "Last" + code, "First" + code, password_digest, txn.now(), 0, false};
      txn.put(u);
      txn.put(UserInfo{u.user_id, code + "@example.edu", "1990-01-01", "", "", ""});
      UserRole r{txn.allocate(Family::Role), u.user_id, title_for(level_of(mask)), affln, RoleStatus::Accepted};
      txn.put(r);
      txn.put(AclEntry{r.user_role_id, mask});
      return u.user_id;
    });
  }

  std::string login(const std::string& code, const std::string& password = kPassword) {
    return sys->auth.login(code, password).token;
  }

  UuisId title_for(PermissionLevel level) const {
    switch (level) {
      case PermissionLevel::L0: return titles.at("Staff");
      case PermissionLevel::L1: return titles.at("Technician");
      case PermissionLevel::L2: return titles.at("Administrator");
      case PermissionLevel::L3: return titles.at("Dean");
    }
    return {};
  }

  UuisId building(const std::string& code) {
    return seed([&](Transaction& txn) {
      Building b{txn.allocate(Family::Location), code, "Building " + code};
      txn.put(b);
      return b.bldg_id;
    });
  }

  UuisId location(const std::string& code, UuisId bldg, UuisId affln) {
    return seed([&](Transaction& txn) {
      Location l{txn.allocate(Family::Location), bldg, code, "Room " + code, bldg, affln,
                 LocationStatus::Available, room_type, ""};
      txn.put(l);
      return l.loc_id;
    });
  }

  UuisId category(const std::string& description) {
    return seed([&](Transaction& txn) {
      Category c{txn.allocate(Family::Catalog), std::nullopt, description};
      txn.put(c);
      return c.cat_id;
    });
  }

  UuisId item(const std::string& description, const std::string& code, UuisId owner, UuisId loc, UuisId cat,
              const std::string& serial = "") {
    return seed([&](Transaction& txn) {
      Item it{txn.allocate(Family::Item), description, code, std::nullopt, serial, cat, owner, loc, txn.now(),
              ItemStatus::Available};
      txn.put(it);
      txn.put(InventoryEntry{it.item_id, 1, 0, InventoryStatus::Available, admin_id, txn.now()});
      return it.item_id;
    });
  }

  const Item& get_item(UuisId id) {
    snap_ = store().snapshot();
    return *snap_.find<Item>(id);
  }

  TempDir scratch;
  std::shared_ptr<ManualClock> clock;
  std::unique_ptr<System> sys;
  UuisId admin_id;
  std::string admin;
  std::string password_digest;
  std::map<std::string, UuisId> titles;
  UuisId room_type;

 private:
  Snapshot snap_;
};

// Error code thrown by `f`, or nullopt.
template <class F>
std::optional<ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace uuis::test
