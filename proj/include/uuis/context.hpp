#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "uuis/config.hpp"
#include "uuis/store.hpp"

namespace uuis {

// While a DryRun is alive on a thread, Context::run executes work against a
// private transaction and discards it. Used to compute the consequence of a
// confirmable action before committing it.
class DryRun {
 public:
  DryRun() : previous_(active_) { active_ = true; }
  ~DryRun() { active_ = previous_; }
  DryRun(const DryRun&) = delete;
  DryRun& operator=(const DryRun&) = delete;
  static bool active() noexcept { return active_; }

 private:
  bool previous_;
  static inline thread_local bool active_ = false;
};

// Shared plumbing handed to every service.
class Context {
 public:
  Context(Store& store, const ServiceConfig& config) : store_(store), config_(config) {}

  Store& store() const noexcept { return store_; }
  const ServiceConfig& config() const noexcept { return config_; }
  Timestamp now() const { return store_.clock().now(); }

  // Transaction with conflict retry. Storage failures are recorded as error
  // messages (with the operation name and payload) before propagating.
  template <class F>
  auto run(std::string_view operation, const nlohmann::json& payload, F&& work)
      -> std::invoke_result_t<F&, Transaction&> {
    if (DryRun::active()) return store_.preview(work);
    try {
      return store_.transact(work);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::StorageFailure) record_error("error", e.what(), operation, payload);
      throw;
    }
  }

  // Best effort; a second storage failure is swallowed.
  void record_error(std::string_view severity, std::string_view message,
                    std::string_view operation, const nlohmann::json& payload) noexcept;

 private:
  Store& store_;
  const ServiceConfig& config_;
};

}  // namespace uuis
