#pragma once

// One running instance: clock, store and every service wired together.

#include <memory>
#include <string>

#include "uuis/assets.hpp"
#include "uuis/audit.hpp"
#include "uuis/auth.hpp"
#include "uuis/backup.hpp"
#include "uuis/directory.hpp"
#include "uuis/requests.hpp"
#include "uuis/search.hpp"

namespace uuis {

struct BootstrapOptions {
  std::string admin_code = "admin";
  std::string admin_password;
  std::string university_name = "University";
  std::string university_code = "UNIV";
};

// Default titles seeded by bootstrap, lowest level first.
struct TitleSeed {
  std::string_view name;
  PermissionLevel level;
};
const std::vector<TitleSeed>& default_titles();

class System {
  ServiceConfig config_;
  std::shared_ptr<const Clock> clock_;
  std::unique_ptr<Store> store_;
  Context ctx_;

 public:
  System(ServiceConfig config, std::shared_ptr<const Clock> clock, std::unique_ptr<Store> store,
         std::unique_ptr<ChallengeProvider> challenges = nullptr);

  static std::unique_ptr<System> in_memory(ServiceConfig config,
                                           std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>(),
                                           std::unique_ptr<ChallengeProvider> challenges = nullptr);
  // Durable store under config.data_dir; throws StorageUnavailable.
  static std::unique_ptr<System> open(ServiceConfig config,
                                      std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>());

  bool initialized() const;
  // Seeds the university, default titles, request types, search metadata and
  // the administrator. Throws ValidationError if already initialized,
  // WeakPassword for a weak administrator password.
  UuisId bootstrap(const BootstrapOptions& options);

  const ServiceConfig& config() const noexcept { return config_; }
  Store& store() noexcept { return *store_; }
  Context& context() noexcept { return ctx_; }
  const Clock& clock() const noexcept { return *clock_; }

  Auth auth;
  Directory directory;
  Assets assets;
  Requests requests;
  Audit audit;
  Search search;
  Backups backups;
};

}  // namespace uuis
