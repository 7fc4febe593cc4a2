#include "uuis/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace uuis {
namespace {

// Tables whose key is not a UuisId.
bool plain_keyed(std::string_view table_code) {
  return table_code == Schema<PermissionDef>::table_code ||
         table_code == Schema<TableMeta>::table_code ||
         table_code == Schema<FieldMeta>::table_code ||
         table_code == Schema<ErrorRecord>::table_code ||
         table_code == Schema<Notification>::table_code;
}

void apply_serialized(Database& db, const std::string& table, std::uint64_t key,
                      const nlohmann::json& value) {
  bool matched = false;
  for_each_stored_type([&]<class T>() {
    if (matched || Schema<T>::table_code != table) return;
    matched = true;
    if (value.is_null()) {
      db.table<T>().erase(key);
    } else {
      db.table<T>().put(from_json<T>(value));
    }
  });
  if (!matched) fail(ErrorCode::StorageFailure, "journal references unknown table " + table);
}

}  // namespace

bool Database::empty() const {
  bool empty = true;
  for_each_stored_type([&]<class T>() { empty = empty && table<T>().empty(); });
  return empty;
}

// ---------------------------------------------------------------------------
// Snapshot

void Snapshot::for_each_log(const std::function<void(const LogRecord&)>& f) const {
  std::shared_lock lock(store_->log_mutex_);
  const auto n = std::min(log_horizon_, store_->log_.size());
  for (std::size_t i = 0; i < n; ++i) f(store_->log_[i]);
}

std::vector<LogRecord> Snapshot::logs() const {
  std::vector<LogRecord> out;
  out.reserve(log_horizon_);
  for_each_log([&](const LogRecord& r) { out.push_back(r); });
  return out;
}

// ---------------------------------------------------------------------------
// Transaction

Transaction::Transaction(Store* store, std::shared_ptr<const Database> base, std::uint64_t version)
    : store_(store), base_(std::move(base)), db_(*base_), base_version_(version) {}

std::string Transaction::key_of(std::string_view table, std::uint64_t key) {
  std::string s(table);
  s += ':';
  s += std::to_string(key);
  return s;
}

void Transaction::log(std::optional<UuisId> actor, std::optional<UuisId> subject,
                      std::string_view event_type, std::string content) {
  if (content.size() > 255) content.resize(255);
  LogRecord rec;
  rec.log_time = now();
  rec.user_id = actor;
  rec.item_id = subject;
  rec.event_type = std::string(event_type);
  rec.content = std::move(content);
  logs_.push_back(std::move(rec));
}

UuisId Transaction::allocate(Family family) {
  const auto counter = next(static_cast<Sequence>(family));
  return UuisId::encode(family, counter);
}

std::uint64_t Transaction::next(Sequence seq) {
  return store_->sequences_[Store::idx(seq)].fetch_add(1);
}

Timestamp Transaction::now() const { return store_->clock().now(); }

// ---------------------------------------------------------------------------
// Store

Store::Store(std::shared_ptr<const Clock> clock, StoreOptions options)
    : clock_(std::move(clock)), options_(std::move(options)), current_(std::make_shared<Database>()) {
  for (auto& s : sequences_) s.store(1);
  if (options_.directory) {
    std::error_code ec;
    std::filesystem::create_directories(*options_.directory, ec);
    if (ec) fail(ErrorCode::StorageUnavailable, "cannot create " + options_.directory->string());
    replay_journal();
    journal_ = std::fopen((*options_.directory / "journal.jsonl").c_str(), "ab");
    if (!journal_) fail(ErrorCode::StorageUnavailable, "cannot open journal in " + options_.directory->string());
  }
}

Store::~Store() {
  if (journal_) std::fclose(journal_);
}

std::unique_ptr<Store> Store::open(const std::filesystem::path& dir,
                                   std::shared_ptr<const Clock> clock, bool sync_writes) {
  return std::make_unique<Store>(std::move(clock), StoreOptions{dir, sync_writes});
}

Snapshot Store::snapshot() const {
  Snapshot s;
  s.store_ = this;
  std::lock_guard lock(publish_mutex_);
  s.db_ = current_;
  s.version_ = version_;
  std::shared_lock log_lock(log_mutex_);
  s.log_horizon_ = log_.size();
  return s;
}

Transaction Store::begin() {
  std::shared_ptr<const Database> base;
  std::uint64_t version;
  {
    std::lock_guard lock(publish_mutex_);
    base = current_;
    version = version_;
  }
  return Transaction(this, std::move(base), version);
}

void Store::commit(Transaction& txn) {
  if (txn.ops_.empty() && txn.logs_.empty()) return;
  if (!txn.ops_.empty() && txn.logs_.empty()) {
    throw std::logic_error("mutating transaction without a log record");
  }

  std::lock_guard writer(write_mutex_);

  for (int n = injected_failures_.load(); n > 0;) {
    if (injected_failures_.compare_exchange_weak(n, n - 1)) {
      fail(ErrorCode::StorageFailure, "database error (injected)");
    }
  }

  for (const auto& key : txn.write_keys_) {
    auto it = key_versions_.find(key);
    if (it != key_versions_.end() && it->second > txn.base_version_) {
      fail(ErrorCode::Conflict, "concurrent update of " + key);
    }
  }

  std::shared_ptr<const Database> latest;
  std::uint64_t version;
  {
    std::lock_guard lock(publish_mutex_);
    latest = current_;
    version = version_ + 1;
  }

  auto next_db = std::make_shared<Database>(*latest);
  for (const auto& op : txn.ops_) op.apply(*next_db);

  std::vector<LogRecord> logs = txn.logs_;
  for (auto& rec : logs) rec.log_id = sequences_[idx(Sequence::Log)].fetch_add(1);

  CommitInfo info;
  const bool want_info = static_cast<bool>(commit_hook_);
  if (journal_ || want_info) {
    info.version = version;
    for (const auto& op : txn.ops_) {
      info.writes.emplace_back(op.table, op.key);
      info.records.push_back(op.serialize());
    }
    info.logs = logs;
  }

  if (journal_) {
    nlohmann::json entry;
    entry["v"] = version;
    auto& ops = entry["ops"] = nlohmann::json::array();
    for (std::size_t i = 0; i < info.writes.size(); ++i) {
      ops.push_back({{"t", info.writes[i].first}, {"k", info.writes[i].second}, {"r", info.records[i]}});
    }
    auto& lj = entry["logs"] = nlohmann::json::array();
    for (const auto& rec : logs) lj.push_back(to_json(rec));
    entry["seq"] = sequence_state();
    append_journal(entry);
  }

  for (const auto& key : txn.write_keys_) key_versions_[key] = version;
  {
    // Database and log become visible together.
    std::lock_guard lock(publish_mutex_);
    std::unique_lock log_lock(log_mutex_);
    log_.insert(log_.end(), logs.begin(), logs.end());
    current_ = std::move(next_db);
    version_ = version;
  }
  txn.ops_.clear();
  txn.logs_.clear();
  if (want_info) commit_hook_(info);
}

bool Store::empty() const {
  std::shared_ptr<const Database> db;
  {
    std::lock_guard lock(publish_mutex_);
    db = current_;
  }
  std::shared_lock lock(log_mutex_);
  return db->empty() && log_.empty();
}

void Store::load(Database db, std::vector<LogRecord> logs) {
  std::lock_guard writer(write_mutex_);
  if (!empty()) fail(ErrorCode::NonEmptyTarget, "restore target is not empty");
  std::sort(logs.begin(), logs.end(),
            [](const LogRecord& a, const LogRecord& b) { return a.log_id < b.log_id; });
  advance_sequences_past(db, logs);

  if (journal_) {
    nlohmann::json entry;
    entry["v"] = version_ + 1;
    auto& ops = entry["ops"] = nlohmann::json::array();
    for_each_stored_type([&]<class T>() {
      db.table<T>().for_each([&](const T& rec) {
        ops.push_back({{"t", Schema<T>::table_code}, {"k", Schema<T>::key(rec)}, {"r", to_json(rec)}});
      });
    });
    auto& lj = entry["logs"] = nlohmann::json::array();
    for (const auto& rec : logs) lj.push_back(to_json(rec));
    entry["seq"] = sequence_state();
    append_journal(entry);
  }

  std::lock_guard lock(publish_mutex_);
  std::unique_lock log_lock(log_mutex_);
  log_ = std::move(logs);
  current_ = std::make_shared<Database>(std::move(db));
  ++version_;
}

void Store::set_commit_hook(std::function<void(const CommitInfo&)> hook) {
  std::lock_guard writer(write_mutex_);
  commit_hook_ = std::move(hook);
}

nlohmann::json Store::sequence_state() const {
  auto arr = nlohmann::json::array();
  for (const auto& s : sequences_) arr.push_back(s.load());
  return arr;
}

void Store::append_journal(const nlohmann::json& entry) {
  const std::string line = entry.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), journal_) != line.size() || std::fflush(journal_) != 0) {
    fail(ErrorCode::StorageFailure, "journal write failed");
  }
  if (options_.sync_writes && ::fsync(::fileno(journal_)) != 0) {
    fail(ErrorCode::StorageFailure, "journal sync failed");
  }
}

void Store::advance_sequences_past(const Database& db, const std::vector<LogRecord>& logs) {
  auto bump = [&](Sequence s, std::uint64_t used) {
    auto& seq = sequences_[idx(s)];
    if (seq.load() <= used) seq.store(used + 1);
  };
  for_each_stored_type([&]<class T>() {
    db.table<T>().for_each([&](const T& rec) {
      const auto key = Schema<T>::key(rec);
      if (plain_keyed(Schema<T>::table_code)) {
        if constexpr (std::is_same_v<T, ErrorRecord>) bump(Sequence::Error, key);
        if constexpr (std::is_same_v<T, Notification>) bump(Sequence::Notice, key);
      } else {
        const auto family = static_cast<std::size_t>(key / kCounterLimit);
        if (family < 7) bump(static_cast<Sequence>(family), key % kCounterLimit);
      }
    });
  });
  for (const auto& rec : logs) bump(Sequence::Log, rec.log_id);
}

void Store::replay_journal() {
  const auto path = *options_.directory / "journal.jsonl";
  std::ifstream in(path);
  if (!in) return;

  Database db;
  std::vector<LogRecord> logs;
  std::vector<std::uint64_t> seq;
  std::string line;
  std::uint64_t version = 0;
  std::streamoff good_end = 0;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // no trailing newline: torn write
    auto entry = nlohmann::json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.is_object()) break;
    for (const auto& op : entry["ops"]) {
      apply_serialized(db, op["t"].get<std::string>(), op["k"].get<std::uint64_t>(), op["r"]);
    }
    for (const auto& lj : entry["logs"]) logs.push_back(from_json<LogRecord>(lj));
    seq = entry["seq"].get<std::vector<std::uint64_t>>();
    version = entry["v"].get<std::uint64_t>();
    good_end = in.tellg();
  }
  in.close();
  // Drop a torn tail so later appends start on a clean line.
  std::error_code ec;
  if (std::filesystem::file_size(path, ec) != static_cast<std::uintmax_t>(good_end) && !ec) {
    std::filesystem::resize_file(path, static_cast<std::uintmax_t>(good_end), ec);
  }

  for (std::size_t i = 0; i < seq.size() && i < kSequenceCount; ++i) sequences_[i].store(seq[i]);
  advance_sequences_past(db, logs);
  log_ = std::move(logs);
  current_ = std::make_shared<Database>(std::move(db));
  version_ = version;
  // Keys touched before the restart are older than any new snapshot.
  key_versions_.clear();
}

}  // namespace uuis
