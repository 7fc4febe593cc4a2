#pragma once

// CSV backups: one <table_code>.csv per table plus manifest.csv under
// <backup_dir>/<backup_id>/. Header row is the field codes, rows ascend by
// primary key, so exporting the same state twice gives identical bytes.

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "uuis/auth.hpp"

namespace uuis {

enum class BackupScope : std::uint8_t { Users, University, Inventory, Requests, All };
std::string_view to_string(BackupScope s);
BackupScope parse_backup_scope(std::string_view s);  // case-insensitive; ValidationError
const std::vector<std::string>& tables_in_scope(BackupScope s);

struct ManifestEntry {
  std::string table_code;
  std::string file;
  std::size_t rows = 0;
  std::string digest;  // BLAKE2b-256, hex
};

struct BackupManifest {
  std::uint64_t backup_id = 0;
  Timestamp started_at{};
  BackupScope scope = BackupScope::All;
  std::vector<ManifestEntry> tables;
  std::size_t diff_count = 0;
  std::filesystem::path directory;
};

std::string file_digest(const std::filesystem::path& file);
BackupManifest read_manifest(const std::filesystem::path& dir);

// Rows that differ between an exported directory and a snapshot: changed,
// missing and extra keys per table. The append-only log table is compared
// over the exported prefix only.
std::size_t diff_against(const std::filesystem::path& dir, const BackupManifest& manifest, const Snapshot& snap);

// Rebuilds `target` from a backup directory. Every digest is checked before
// anything is loaded. Throws DigestMismatch, NonEmptyTarget.
void restore_from_backup(Store& target, const std::filesystem::path& dir);

class Backups {
 public:
  Backups(Context& ctx, Auth& auth, std::filesystem::path backup_dir)
      : ctx_(ctx), auth_(auth), dir_(std::move(backup_dir)) {}

  BackupManifest run_backup(const std::string& token, BackupScope scope);
  // Operator and scheduler path; no session.
  BackupManifest run_backup_as(std::optional<UuisId> actor, BackupScope scope);

  // Runs between export and verification; tests use it to mutate the store.
  void set_verify_hook(std::function<void()> hook) { verify_hook_ = std::move(hook); }

  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  Context& ctx_;
  Auth& auth_;
  std::filesystem::path dir_;
  std::function<void()> verify_hook_;
  std::mutex run_mutex_;
};

// "daily HH:MM", "weekly <mon..sun> HH:MM", optionally followed by a UTC
// offset "+HH:MM" / "-HH:MM". Bare "daily" and "weekly" mean 00:00 (weekly on
// Sunday).
struct BackupSchedule {
  enum class Cadence : std::uint8_t { Daily, Weekly } cadence = Cadence::Daily;
  int hour = 0;
  int minute = 0;
  int weekday = 0;             // 0 = Sunday
  int utc_offset_minutes = 0;  // local = UTC + offset
};

BackupSchedule parse_schedule(std::string_view spec);  // InvalidSchedule
Timestamp next_fire(const BackupSchedule& s, Timestamp now);

// Background thread firing backups on a schedule. Stops on destruction.
class ScheduleHandle {
 public:
  ScheduleHandle(BackupSchedule schedule, std::function<void()> fire);
  ~ScheduleHandle();
  ScheduleHandle(const ScheduleHandle&) = delete;
  ScheduleHandle& operator=(const ScheduleHandle&) = delete;

  Timestamp next() const;
  void stop();

 private:
  BackupSchedule schedule_;
  std::function<void()> fire_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
  Timestamp next_{};
  std::thread thread_;
};

std::unique_ptr<ScheduleHandle> schedule_backups(const ServiceConfig& config, Backups& backups);

}  // namespace uuis
