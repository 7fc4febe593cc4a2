#include "uuis/backup.hpp"

#include <sodium.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "uuis/csv.hpp"

namespace uuis {
namespace fs = std::filesystem;
namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::StorageFailure, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  out.flush();
  if (!out) fail(ErrorCode::StorageFailure, "cannot write " + p.string());
}

std::string digest_of(std::string_view bytes) {
  unsigned char h[crypto_generichash_BYTES];
  crypto_generichash(h, sizeof h, reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), nullptr, 0);
  char hex[sizeof h * 2 + 1];
  sodium_bin2hex(hex, sizeof hex, h, sizeof h);
  return hex;
}

// Rendered rows of one table, keyed by the primary key column.
struct Rendered {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Rendered render_table(const Snapshot& snap, std::string_view code) {
  Rendered out;
  if (code == Schema<LogRecord>::table_code) {
    out.header = header_of<LogRecord>();
    snap.for_each_log([&](const LogRecord& r) { out.rows.push_back(render_row(r)); });
    return out;
  }
  bool found = false;
  for_each_stored_type([&]<class T>() {
    if (Schema<T>::table_code != code) return;
    found = true;
    out.header = header_of<T>();
    snap.table<T>().for_each([&](const T& r) { out.rows.push_back(render_row(r)); });
  });
  if (!found) fail(ErrorCode::ValidationError, "unknown table '" + std::string(code) + "'");
  return out;
}

std::string manifest_csv(const BackupManifest& m) {
  std::vector<std::vector<std::string>> rows = {
      {"backup_id", std::to_string(m.backup_id), "", ""},
      {"started_at", to_iso8601(m.started_at), "", ""},
      {"scope", std::string(to_string(m.scope)), "", ""},
      {"diff_count", std::to_string(m.diff_count), "", ""},
  };
  for (const auto& t : m.tables) rows.push_back({"table", t.table_code, std::to_string(t.rows), t.digest});
  return csv::format({"key", "value", "rows", "digest"}, rows);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(BackupScope s) {
  switch (s) {
    case BackupScope::Users: return "Users";
    case BackupScope::University: return "University";
    case BackupScope::Inventory: return "Inventory";
    case BackupScope::Requests: return "Requests";
    case BackupScope::All: return "All";
  }
  return "?";
}

BackupScope parse_backup_scope(std::string_view s) {
  for (auto v : {BackupScope::Users, BackupScope::University, BackupScope::Inventory, BackupScope::Requests,
                 BackupScope::All}) {
    if (lower(to_string(v)) == lower(s)) return v;
  }
  fail(ErrorCode::ValidationError, "unknown backup scope '" + std::string(s) + "'");
}

const std::vector<std::string>& tables_in_scope(BackupScope s) {
  static const std::vector<std::string> users = {"users", "userinfo", "userrole", "acl"};
  static const std::vector<std::string> university = {"affln", "bldg", "loctype", "loc"};
  static const std::vector<std::string> inventory = {"cat", "item", "proplist", "itemprop", "inventory"};
  static const std::vector<std::string> requests = {"reqtype", "request", "notice"};
  static const std::vector<std::string> all = [] {
    std::vector<std::string> v;
    for_each_stored_type([&]<class T>() { v.emplace_back(Schema<T>::table_code); });
    v.emplace_back(Schema<LogRecord>::table_code);
    return v;
  }();
  switch (s) {
    case BackupScope::Users: return users;
    case BackupScope::University: return university;
    case BackupScope::Inventory: return inventory;
    case BackupScope::Requests: return requests;
    case BackupScope::All: return all;
  }
  return all;
}

std::string file_digest(const fs::path& file) {
  if (sodium_init() < 0) fail(ErrorCode::StorageFailure, "libsodium unavailable");
  return digest_of(read_file(file));
}

BackupManifest read_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.csv";
  if (!fs::exists(path)) fail(ErrorCode::NotFound, "no manifest in " + dir.string());
  const auto records = csv::parse(read_file(path));
  BackupManifest m;
  m.directory = dir;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& c = records[i].cells;
    if (c.size() != 4) fail(ErrorCode::RowFormatError, "manifest line " + std::to_string(records[i].line));
    try {
      if (c[0] == "backup_id") m.backup_id = std::stoull(c[1]);
      else if (c[0] == "started_at") m.started_at = parse_iso8601(c[1]).value();
      else if (c[0] == "scope") m.scope = parse_backup_scope(c[1]);
      else if (c[0] == "diff_count") m.diff_count = std::stoull(c[2].empty() ? c[1] : c[2]);
      else if (c[0] == "table") m.tables.push_back({c[1], c[1] + ".csv", std::stoull(c[2]), c[3]});
    } catch (const std::exception&) {
      fail(ErrorCode::RowFormatError, "manifest line " + std::to_string(records[i].line));
    }
  }
  return m;
}

std::size_t diff_against(const fs::path& dir, const BackupManifest& manifest, const Snapshot& snap) {
  std::size_t diffs = 0;
  for (const auto& entry : manifest.tables) {
    const auto records = csv::parse(read_file(dir / entry.file));
    std::map<std::string, const std::vector<std::string>*> exported;
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (!records[i].cells.empty()) exported.emplace(records[i].cells.front(), &records[i].cells);
    }
    const auto current = render_table(snap, entry.table_code);
    const bool prefix_only = entry.table_code == Schema<LogRecord>::table_code;
    std::size_t matched = 0;
    for (const auto& row : current.rows) {
      auto it = exported.find(row.front());
      if (it == exported.end()) {
        if (!prefix_only) ++diffs;  // row added since export
        continue;
      }
      ++matched;
      if (*it->second != row) ++diffs;
    }
    diffs += exported.size() - matched;  // rows gone since export
  }
  return diffs;
}

void restore_from_backup(Store& target, const fs::path& dir) {
  const auto manifest = read_manifest(dir);
  if (!target.empty()) fail(ErrorCode::NonEmptyTarget, "restore needs an empty store");
  for (const auto& e : manifest.tables) {
    if (!fs::exists(dir / e.file) || file_digest(dir / e.file) != e.digest) {
      fail(ErrorCode::DigestMismatch, e.file + " does not match its manifest digest", {{"file", e.file}});
    }
  }

  Database db;
  std::vector<LogRecord> logs;
  for (const auto& e : manifest.tables) {
    const auto records = csv::parse(read_file(dir / e.file));
    auto load_rows = [&]<class T>(auto&& sink) {
      if (records.empty() || records.front().cells != header_of<T>()) {
        fail(ErrorCode::MalformedHeader, e.file + " has an unexpected header");
      }
      for (std::size_t i = 1; i < records.size(); ++i) sink(parse_row<T>(records[i].cells));
    };
    if (e.table_code == Schema<LogRecord>::table_code) {
      load_rows.template operator()<LogRecord>([&](LogRecord r) { logs.push_back(std::move(r)); });
      continue;
    }
    for_each_stored_type([&]<class T>() {
      if (Schema<T>::table_code != e.table_code) return;
      load_rows.template operator()<T>([&](T r) { db.table<T>().put(r); });
    });
  }
  target.load(std::move(db), std::move(logs));
}

// ---------------------------------------------------------------------------

BackupManifest Backups::run_backup(const std::string& token, BackupScope scope) {
  const auto who = auth_.authorize(token);
  require(who, Permission::Backup);
  return run_backup_as(who.user_id, scope);
}

BackupManifest Backups::run_backup_as(std::optional<UuisId> actor, BackupScope scope) {
  std::lock_guard lock(run_mutex_);
  if (sodium_init() < 0) fail(ErrorCode::StorageFailure, "libsodium unavailable");
  const nlohmann::json payload = {{"scope", to_string(scope)}};
  try {
    BackupManifest m;
    m.scope = scope;
    m.started_at = ctx_.now();
    m.backup_id = ctx_.store().preview([](Transaction& txn) { return txn.next(Sequence::Backup); });
    std::error_code ec;
    fs::create_directories(dir_, ec);
    while (fs::exists(dir_ / std::to_string(m.backup_id))) ++m.backup_id;
    m.directory = dir_ / std::to_string(m.backup_id);
    if (!fs::create_directories(m.directory, ec) || ec) {
      fail(ErrorCode::StorageFailure, "cannot create " + m.directory.string());
    }

    {
      const auto snap = ctx_.store().snapshot();
      for (const auto& code : tables_in_scope(scope)) {
        const auto rendered = render_table(snap, code);
        const auto bytes = csv::format(rendered.header, rendered.rows);
        write_file(m.directory / (code + ".csv"), bytes);
        m.tables.push_back({code, code + ".csv", rendered.rows.size(), digest_of(bytes)});
      }
    }
    if (verify_hook_) verify_hook_();
    m.diff_count = diff_against(m.directory, m, ctx_.store().snapshot());
    write_file(m.directory / "manifest.csv", manifest_csv(m));

    ctx_.run("backup", payload, [&](Transaction& txn) {
      txn.log(actor, std::nullopt, event::Backup,
              "backup " + std::to_string(m.backup_id) + " scope=" + std::string(to_string(scope)) +
                  " tables=" + std::to_string(m.tables.size()) + " diff_count=" + std::to_string(m.diff_count));
    });
    return m;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::StorageFailure) ctx_.record_error("error", e.what(), "backup", payload);
    throw;
  }
}

// ---------------------------------------------------------------------------
// Scheduling

BackupSchedule parse_schedule(std::string_view spec) {
  std::istringstream in{std::string(spec)};
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(lower(w));
  auto bad = [&](const std::string& why) -> BackupSchedule {
    fail(ErrorCode::InvalidSchedule, "invalid backup schedule '" + std::string(spec) + "': " + why);
  };
  if (words.empty()) return bad("empty");

  BackupSchedule s;
  std::size_t i = 1;
  if (words[0] == "daily") {
    s.cadence = BackupSchedule::Cadence::Daily;
  } else if (words[0] == "weekly") {
    s.cadence = BackupSchedule::Cadence::Weekly;
    static const std::vector<std::string> days = {"sun", "mon", "tue", "wed", "thu", "fri", "sat"};
    if (i < words.size()) {
      auto it = std::find(days.begin(), days.end(), words[i].substr(0, 3));
      if (it != days.end() && words[i].find(':') == std::string::npos) {
        s.weekday = static_cast<int>(it - days.begin());
        ++i;
      }
    }
  } else {
    return bad("cadence must be daily or weekly");
  }

  auto two = [&](std::string_view t, std::size_t at) {
    if (at + 2 > t.size() || !std::isdigit(static_cast<unsigned char>(t[at])) ||
        !std::isdigit(static_cast<unsigned char>(t[at + 1]))) {
      bad("expected HH:MM");
    }
    return (t[at] - '0') * 10 + (t[at + 1] - '0');
  };
  if (i < words.size() && words[i][0] != '+' && words[i][0] != '-') {
    const auto& t = words[i++];
    if (t.size() != 5 || t[2] != ':') return bad("time must be HH:MM");
    s.hour = two(t, 0);
    s.minute = two(t, 3);
    if (s.hour > 23 || s.minute > 59) return bad("time out of range");
  }
  if (i < words.size()) {
    const auto& t = words[i++];
    if (t.size() != 6 || t[3] != ':') return bad("offset must be +HH:MM or -HH:MM");
    const int h = two(t, 1), m = two(t, 4);
    if (h > 14 || m > 59) return bad("offset out of range");
    s.utc_offset_minutes = (t[0] == '-' ? -1 : 1) * (h * 60 + m);
  }
  if (i != words.size()) return bad("trailing text");
  return s;
}

Timestamp next_fire(const BackupSchedule& s, Timestamp now) {
  using namespace std::chrono;
  const auto offset = minutes(s.utc_offset_minutes);
  const auto local = now + offset;
  const auto day = floor<days>(local);
  auto candidate = time_point_cast<seconds>(day + hours(s.hour) + minutes(s.minute));
  if (s.cadence == BackupSchedule::Cadence::Daily) {
    if (candidate <= local) candidate += days(1);
  } else {
    const auto day_index = day.time_since_epoch().count();
    const int weekday = static_cast<int>(((day_index % 7) + 7 + 4) % 7);  // 1970-01-01 was a Thursday
    candidate += days((s.weekday - weekday + 7) % 7);
    if (candidate <= local) candidate += days(7);
  }
  return candidate - offset;
}

ScheduleHandle::ScheduleHandle(BackupSchedule schedule, std::function<void()> fire)
    : schedule_(schedule), fire_(std::move(fire)) {
  next_ = next_fire(schedule_, std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()));
  thread_ = std::thread([this] {
    std::unique_lock lock(mutex_);
    while (!stopping_) {
      if (cv_.wait_until(lock, next_, [this] { return stopping_; })) break;
      lock.unlock();
      try {
        fire_();
      } catch (...) {
      }
      lock.lock();
      next_ = next_fire(schedule_, std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()));
    }
  });
}

ScheduleHandle::~ScheduleHandle() { stop(); }

Timestamp ScheduleHandle::next() const {
  std::lock_guard lock(mutex_);
  return next_;
}

void ScheduleHandle::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::unique_ptr<ScheduleHandle> schedule_backups(const ServiceConfig& config, Backups& backups) {
  const auto schedule = parse_schedule(config.backup_schedule);
  return std::make_unique<ScheduleHandle>(schedule, [&backups] { backups.run_backup_as(std::nullopt, BackupScope::All); });
}

}  // namespace uuis
