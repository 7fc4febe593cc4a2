#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace uuis {

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::filesystem::path data_dir = "uuis-data";
  std::filesystem::path backup_dir = "uuis-backups";
  std::string backup_schedule = "daily 00:00";
  std::chrono::seconds session_timeout{30 * 60};
  std::uint32_t lockout_threshold = 3;
  std::size_t page_size = 50;
  // Argon2id cost; defaults are libsodium's "interactive" limits.
  unsigned long long kdf_opslimit = 2;
  std::size_t kdf_memlimit = 64u * 1024u * 1024u;
  bool challenge_elevated = true;  // challenge accounts at level >= 2
  bool sync_writes = false;
  std::size_t max_query_length = 1024;

  // Cheapest legal KDF settings; for tests and benchmarks.
  static ServiceConfig for_testing();

  // Keys mirror the member names. Unknown keys throw ValidationError.
  static ServiceConfig from_json(const nlohmann::json& j);
  static ServiceConfig load(const std::filesystem::path& file);
  // UUIS_<UPPERCASE_KEY> environment variables override file values.
  void apply_env();
  nlohmann::json to_json() const;
};

}  // namespace uuis
