// Operator command line: serve the API or work directly on a data directory.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "uuis/gateway.hpp"
#include "uuis/system.hpp"

namespace {

using namespace uuis;

// 2 input or validation problems, 3 authentication or authorization,
// 4 unknown entity, 5 state conflict, 6 storage.
int exit_code_for(ErrorCode code) {
  switch (http_status_for(code)) {
    case 401:
    case 403:
    case 423: return 3;
    case 404: return 4;
    case 409: return 5;
    case 500:
    case 503: return 6;
    default: return 2;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

struct Globals {
  std::string config_file;
  std::string data_dir;
  std::string backup_dir;
  std::string user = env_or("UUIS_USER", "");
  std::string password = env_or("UUIS_PASSWORD", "");
};

ServiceConfig load_config(const Globals& g) {
  auto config = g.config_file.empty() ? ServiceConfig{} : ServiceConfig::load(g.config_file);
  config.apply_env();
  if (!g.data_dir.empty()) config.data_dir = g.data_dir;
  if (!g.backup_dir.empty()) config.backup_dir = g.backup_dir;
  return config;
}

// Logs in as the operator named by --user/--password, answering a challenge
// on stdin when one is required.
std::string login(System& sys, const Globals& g) {
  if (g.user.empty()) fail(ErrorCode::InvalidCredentials, "--user (or UUIS_USER) is required");
  try {
    return sys.auth.login(g.user, g.password).token;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ChallengeRequired) throw;
    std::cerr << e.details().value("question", "") << " ";
    std::string answer;
    std::getline(std::cin, answer);
    return sys.auth.login(g.user, g.password, ChallengeAnswer{e.details().value("challenge_id", ""), answer}).token;
  }
}

std::atomic<Gateway*> g_serving{nullptr};

void on_signal(int) {
  if (auto* gw = g_serving.load()) gw->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"University inventory service"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "JSON configuration file");
  app.add_option("--data-dir", g.data_dir, "Storage directory");
  app.add_option("--backup-dir", g.backup_dir, "Backup output directory");
  app.add_option("--user", g.user, "Operator user code (or UUIS_USER)");
  app.add_option("--password", g.password, "Operator password (or UUIS_PASSWORD)");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  std::string host;
  int port = 0;
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port");

  auto* init = app.add_subcommand("init", "Initialize an empty store");
  BootstrapOptions boot;
  boot.admin_password = env_or("UUIS_ADMIN_PASSWORD", "");
  init->add_option("--admin-code", boot.admin_code, "Administrator user code");
  init->add_option("--admin-password", boot.admin_password, "Administrator password (or UUIS_ADMIN_PASSWORD)");
  init->add_option("--university-name", boot.university_name);
  init->add_option("--university-code", boot.university_code);

  std::string file;
  auto* import_users = app.add_subcommand("import-users", "Create users from a CSV file");
  import_users->add_option("file", file)->required();
  auto* bulk_assets = app.add_subcommand("bulk-add-assets", "Create assets from a CSV file");
  bulk_assets->add_option("file", file)->required();

  std::string scope = "all";
  auto* backup = app.add_subcommand("backup", "Export tables to CSV and verify");
  backup->add_option("scope", scope, "users, university, inventory, requests or all");

  std::string dir;
  auto* restore = app.add_subcommand("restore", "Rebuild an empty store from a backup directory");
  restore->add_option("dir", dir)->required();

  std::string user_code;
  auto* unlock = app.add_subcommand("unlock-user", "Clear a user's failed login attempts");
  unlock->add_option("code", user_code)->required();

  std::string category;
  std::string key;
  std::string from;
  std::string to;
  auto* audit = app.add_subcommand("audit", "Browse the audit log");
  audit->add_option("category", category, "asset, time, user, department or faculty")->required();
  audit->add_option("key", key, "Entity id (omit for time)");
  audit->add_option("--from", from, "Start time, inclusive");
  audit->add_option("--to", to, "End time, inclusive");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = load_config(g);

    if (*restore) {
      auto store = Store::open(config.data_dir, std::make_shared<SystemClock>(), true);
      restore_from_backup(*store, dir);
      std::cout << "restored " << dir << " into " << config.data_dir.string() << "\n";
      return 0;
    }

    auto sys = System::open(config);

    if (*init) {
      const auto admin = sys->bootstrap(boot);
      std::cout << "initialized; administrator " << boot.admin_code << " is " << admin.str() << "\n";
      return 0;
    }
    if (*serve) {
      if (!sys->initialized()) fail(ErrorCode::StorageUnavailable, "store is not initialized; run init first");
      Gateway gw(*sys);
      auto schedule = schedule_backups(config, sys->backups);
      g_serving = &gw;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const auto h = host.empty() ? config.listen_host : host;
      const auto p = port ? port : config.listen_port;
      std::cout << "listening on " << h << ":" << p << std::endl;
      gw.listen(h, p);
      g_serving = nullptr;
      return 0;
    }
    if (*unlock) {
      sys->auth.unlock_user_direct(user_code);
      std::cout << "unlocked " << user_code << "\n";
      return 0;
    }
    if (*backup) {
      const auto m = sys->backups.run_backup_as(std::nullopt, parse_backup_scope(scope));
      std::cout << "backup_id " << m.backup_id << "\n"
                << "directory " << m.directory.string() << "\n"
                << "tables " << m.tables.size() << "\n"
                << "diff_count " << m.diff_count << "\n";
      return 0;
    }
    if (*import_users) {
      const auto token = login(*sys, g);
      const auto report = sys->directory.bulk_import_users(token, read_file(file));
      std::cout << "created " << report.created << "\nrejected " << report.rejected.size() << "\n";
      if (!report.rejected.empty()) std::cout << rejections_csv(user_import_header(), report.rejected);
      return report.rejected.empty() ? 0 : 1;
    }
    if (*bulk_assets) {
      const auto token = login(*sys, g);
      const auto report = sys->assets.bulk_add_assets(token, read_file(file));
      std::cout << "created " << report.created_ids.size() << "\n";
      return 0;
    }
    if (*audit) {
      const auto token = login(*sys, g);
      AuditKey k;
      if (!key.empty()) k.entity = UuisId::parse(key);
      if (!from.empty()) k.from = parse_iso8601(from);
      if (!to.empty()) k.to = parse_iso8601(to);
      Tabular view{{"log_id", "log_time", "actor", "subject", "event_type", "summary"}, {}};
      for (const auto& e : sys->audit.audit_logs(token, parse_audit_category(category), k)) {
        view.rows.push_back({std::to_string(e.log_id), to_iso8601(e.log_time), e.actor ? e.actor->str() : "",
                             e.subject ? e.subject->str() : "", e.event_type, e.summary});
      }
      std::cout << Audit::export_view(view, "text");
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    if (!e.details().is_null()) std::cerr << e.details().dump() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
