#include "uuis/config.hpp"

#include <sodium.h>

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "uuis/errors.hpp"

namespace uuis {

ServiceConfig ServiceConfig::for_testing() {
  ServiceConfig c;
  c.kdf_opslimit = crypto_pwhash_OPSLIMIT_MIN;
  c.kdf_memlimit = crypto_pwhash_MEMLIMIT_MIN;
  return c;
}

nlohmann::json ServiceConfig::to_json() const {
  return {
      {"listen_host", listen_host},
      {"listen_port", listen_port},
      {"data_dir", data_dir.string()},
      {"backup_dir", backup_dir.string()},
      {"backup_schedule", backup_schedule},
      {"session_timeout", session_timeout.count()},
      {"lockout_threshold", lockout_threshold},
      {"page_size", page_size},
      {"kdf_opslimit", kdf_opslimit},
      {"kdf_memlimit", kdf_memlimit},
      {"challenge_elevated", challenge_elevated},
      {"sync_writes", sync_writes},
      {"max_query_length", max_query_length},
  };
}

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ValidationError, "config must be a JSON object");
  ServiceConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "listen_host") c.listen_host = value.get<std::string>();
      else if (key == "listen_port") c.listen_port = value.get<int>();
      else if (key == "data_dir") c.data_dir = value.get<std::string>();
      else if (key == "backup_dir") c.backup_dir = value.get<std::string>();
      else if (key == "backup_schedule") c.backup_schedule = value.get<std::string>();
      else if (key == "session_timeout") c.session_timeout = std::chrono::seconds{value.get<long long>()};
      else if (key == "lockout_threshold") c.lockout_threshold = value.get<std::uint32_t>();
      else if (key == "page_size") c.page_size = value.get<std::size_t>();
      else if (key == "kdf_opslimit") c.kdf_opslimit = value.get<unsigned long long>();
      else if (key == "kdf_memlimit") c.kdf_memlimit = value.get<std::size_t>();
      else if (key == "challenge_elevated") c.challenge_elevated = value.get<bool>();
      else if (key == "sync_writes") c.sync_writes = value.get<bool>();
      else if (key == "max_query_length") c.max_query_length = value.get<std::size_t>();
      else fail(ErrorCode::ValidationError, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ValidationError, std::string("bad config value: ") + e.what());
  }
  if (c.lockout_threshold == 0 || c.page_size == 0 || c.session_timeout.count() <= 0) {
    fail(ErrorCode::ValidationError, "config limits must be positive");
  }
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::ValidationError, "cannot read config " + file.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ValidationError, "config is not valid JSON");
  return from_json(j);
}

void ServiceConfig::apply_env() {
  auto j = to_json();
  nlohmann::json overrides = nlohmann::json::object();
  for (const auto& [key, value] : j.items()) {
    std::string name = "UUIS_";
    for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const char* env = std::getenv(name.c_str());
    if (!env) continue;
    if (value.is_string()) {
      overrides[key] = env;
    } else {
      auto parsed = nlohmann::json::parse(env, nullptr, false);
      if (parsed.is_discarded()) fail(ErrorCode::ValidationError, "bad value in " + name);
      overrides[key] = parsed;
    }
  }
  j.update(overrides);
  *this = from_json(j);
}

}  // namespace uuis
