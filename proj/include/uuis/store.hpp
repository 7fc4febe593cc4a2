#pragma once

// Transactional record store.
//
// Committed state is an immutable Database value published through a
// shared_ptr; readers take a snapshot by copying the pointer and never block
// writers. A Transaction works on a private copy-on-write view and records
// its writes; commit re-applies them to the latest state under the writer
// mutex after checking that no key it wrote was committed by someone else
// since its snapshot (first committer wins, the other gets Conflict).
//
// Durable stores append one JSON line per commit to <dir>/journal.jsonl and
// replay it on open. A torn final line is ignored.

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <type_traits>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "uuis/clock.hpp"
#include "uuis/domain.hpp"
#include "uuis/errors.hpp"
#include "uuis/schema.hpp"

namespace uuis {

// Records keyed by Schema<T>::key, stored in fixed-width key-range shards so
// a copy shares all shards and a write clones only the shard it touches.
template <class T>
class Table {
 public:
  static constexpr unsigned kShardBits = 8;
  using Shard = std::map<std::uint64_t, T>;

  Table() = default;
  Table(const Table& other) : shards_(other.shards_), size_(other.size_) {}
  Table& operator=(const Table& other) {
    shards_ = other.shards_;
    size_ = other.size_;
    owned_.clear();
    return *this;
  }
  Table(Table&&) noexcept = default;
  Table& operator=(Table&&) noexcept = default;

  const T* find(std::uint64_t key) const {
    auto s = shards_.find(key >> kShardBits);
    if (s == shards_.end()) return nullptr;
    auto it = s->second->find(key);
    return it == s->second->end() ? nullptr : &it->second;
  }
  const T* find(UuisId id) const { return find(id.value()); }
  bool contains(std::uint64_t key) const { return find(key) != nullptr; }

  void put(const T& rec) {
    const auto key = Schema<T>::key(rec);
    auto& shard = writable(key >> kShardBits);
    auto [it, inserted] = shard.insert_or_assign(key, rec);
    if (inserted) ++size_;
  }

  bool erase(std::uint64_t key) {
    const auto sk = key >> kShardBits;
    auto s = shards_.find(sk);
    if (s == shards_.end() || !s->second->contains(key)) return false;
    auto& shard = writable(sk);
    shard.erase(key);
    --size_;
    if (shard.empty()) {
      shards_.erase(sk);
      owned_.erase(sk);
    }
    return true;
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  // Visits records in ascending key order.
  template <class F>
  void for_each(F&& f) const {
    for (const auto& [sk, shard] : shards_) {
      for (const auto& [k, rec] : *shard) f(rec);
    }
  }

  template <class Pred>
  const T* find_if(Pred&& pred) const {
    for (const auto& [sk, shard] : shards_) {
      for (const auto& [k, rec] : *shard) {
        if (pred(rec)) return &rec;
      }
    }
    return nullptr;
  }

  std::vector<T> rows() const {
    std::vector<T> out;
    out.reserve(size_);
    for_each([&](const T& r) { out.push_back(r); });
    return out;
  }

  std::optional<std::uint64_t> max_key() const {
    if (shards_.empty()) return std::nullopt;
    return shards_.rbegin()->second->rbegin()->first;
  }

 private:
  Shard& writable(std::uint64_t sk) {
    auto& slot = shards_[sk];
    if (!slot) {
      slot = std::make_shared<Shard>();
      owned_.insert(sk);
    } else if (!owned_.contains(sk)) {
      slot = std::make_shared<Shard>(*slot);
      owned_.insert(sk);
    }
    return *slot;
  }

  std::map<std::uint64_t, std::shared_ptr<Shard>> shards_;
  std::size_t size_ = 0;
  std::unordered_set<std::uint64_t> owned_;  // shards private to this copy
};

template <class... Ts>
struct TypeList {};

using StoredTypes =
    TypeList<Building, LocationType, Location, Affiliation, Category, Item, PropertyDef,
             ItemProperty, InventoryEntry, PermissionDef, Title, User, UserInfo, UserRole,
             AclEntry, RequestType, Request, TableMeta, FieldMeta, ErrorRecord, Notification>;

template <class List>
struct TablesOf;
template <class... Ts>
struct TablesOf<TypeList<Ts...>> {
  using type = std::tuple<Table<Ts>...>;
};

// Calls f.template operator()<T>() for every stored record type.
template <class F, class... Ts>
void for_each_type(F&& f, TypeList<Ts...>) {
  (f.template operator()<Ts>(), ...);
}
template <class F>
void for_each_stored_type(F&& f) {
  for_each_type(std::forward<F>(f), StoredTypes{});
}

class Database {
 public:
  template <class T>
  Table<T>& table() {
    return std::get<Table<T>>(tables_);
  }
  template <class T>
  const Table<T>& table() const {
    return std::get<Table<T>>(tables_);
  }
  template <class T>
  const T* find(UuisId id) const {
    return table<T>().find(id.value());
  }

  bool empty() const;

 private:
  TablesOf<StoredTypes>::type tables_;
};

// Named sequences. The first seven mirror the id families.
enum class Sequence : std::uint8_t {
  Location = 0,
  Affiliation,
  Person,
  Role,
  Item,
  Catalog,
  ItemProperty,
  Error,
  Notice,
  Backup,
  Log,
};
inline constexpr std::size_t kSequenceCount = 11;

class Store;

class Snapshot {
 public:
  const Database& db() const noexcept { return *db_; }
  template <class T>
  const Table<T>& table() const {
    return db_->table<T>();
  }
  template <class T>
  const T* find(UuisId id) const {
    return db_->find<T>(id);
  }
  std::uint64_t version() const noexcept { return version_; }
  std::size_t log_count() const noexcept { return log_horizon_; }

  // Log records committed at or before this snapshot, in log_id order.
  void for_each_log(const std::function<void(const LogRecord&)>& f) const;
  std::vector<LogRecord> logs() const;

 private:
  friend class Store;
  std::shared_ptr<const Database> db_;
  const Store* store_ = nullptr;
  std::size_t log_horizon_ = 0;
  std::uint64_t version_ = 0;
};

// What a commit changed; handed to the commit hook.
struct CommitInfo {
  std::uint64_t version = 0;
  std::vector<std::pair<std::string, std::uint64_t>> writes;  // (table_code, key), in order
  std::vector<nlohmann::json> records;                         // post-image, null = erased
  std::vector<LogRecord> logs;
};

class Transaction {
 public:
  Transaction(Transaction&&) noexcept = default;
  Transaction& operator=(Transaction&&) noexcept = default;

  const Database& db() const noexcept { return db_; }
  template <class T>
  const Table<T>& table() const {
    return db_.table<T>();
  }
  template <class T>
  const T* find(UuisId id) const {
    return db_.find<T>(id);
  }
  template <class T>
  const T* find(std::uint64_t key) const {
    return db_.table<T>().find(key);
  }
  // Throws NotFound.
  template <class T>
  const T& get(UuisId id) const {
    if (const T* r = find<T>(id)) return *r;
    fail(ErrorCode::NotFound, std::string(Schema<T>::table_name) + " " + id.str() + " not found");
  }

  template <class T>
  void put(const T& rec) {
    const auto key = Schema<T>::key(rec);
    db_.table<T>().put(rec);
    write_keys_.insert(key_of(Schema<T>::table_code, key));
    ops_.push_back(Op{std::string(Schema<T>::table_code), key,
                      [rec](Database& d) { d.table<T>().put(rec); },
                      [rec] { return to_json(rec); }});
  }

  template <class T>
  void erase(std::uint64_t key) {
    db_.table<T>().erase(key);
    write_keys_.insert(key_of(Schema<T>::table_code, key));
    ops_.push_back(Op{std::string(Schema<T>::table_code), key,
                      [key](Database& d) { d.table<T>().erase(key); },
                      [] { return nlohmann::json(nullptr); }});
  }

  // Reserves a logical slot (e.g. a unique serial number) so that two
  // transactions claiming the same slot conflict.
  void claim(const std::string& slot) { write_keys_.insert("#" + slot); }

  void log(std::optional<UuisId> actor, std::optional<UuisId> subject, std::string_view event_type,
           std::string content);

  UuisId allocate(Family family);
  std::uint64_t next(Sequence seq);
  Timestamp now() const;

  bool has_writes() const noexcept { return !ops_.empty(); }
  const std::vector<LogRecord>& pending_logs() const noexcept { return logs_; }
  std::uint64_t base_version() const noexcept { return base_version_; }

 private:
  friend class Store;
  struct Op {
    std::string table;
    std::uint64_t key;
    std::function<void(Database&)> apply;
    std::function<nlohmann::json()> serialize;
  };
  Transaction(Store* store, std::shared_ptr<const Database> base, std::uint64_t version);
  static std::string key_of(std::string_view table, std::uint64_t key);

  Store* store_;
  std::shared_ptr<const Database> base_;
  Database db_;
  std::uint64_t base_version_;
  std::vector<Op> ops_;
  std::set<std::string> write_keys_;
  std::vector<LogRecord> logs_;
};

struct StoreOptions {
  std::optional<std::filesystem::path> directory;  // empty = in-memory only
  bool sync_writes = false;                         // fsync after every commit
};

class Store {
 public:
  explicit Store(std::shared_ptr<const Clock> clock, StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  static std::unique_ptr<Store> in_memory(std::shared_ptr<const Clock> clock) {
    return std::make_unique<Store>(std::move(clock));
  }
  // Opens (or creates) a durable store; throws StorageUnavailable.
  static std::unique_ptr<Store> open(const std::filesystem::path& dir,
                                     std::shared_ptr<const Clock> clock, bool sync_writes = false);

  Snapshot snapshot() const;
  Transaction begin();

  // Throws Conflict or StorageFailure; on failure nothing is applied.
  void commit(Transaction& txn);

  // One attempt: run, commit. A throwing work function aborts.
  template <class F>
  auto with_transaction(F&& work) -> std::invoke_result_t<F&, Transaction&> {
    auto txn = begin();
    if constexpr (std::is_void_v<std::invoke_result_t<F&, Transaction&>>) {
      work(txn);
      commit(txn);
    } else {
      auto result = work(txn);
      commit(txn);
      return result;
    }
  }

  // Retries on Conflict against a fresh snapshot.
  template <class F>
  auto transact(F&& work) -> std::invoke_result_t<F&, Transaction&> {
    for (int attempt = 0;; ++attempt) {
      try {
        return with_transaction(work);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Conflict || attempt >= kMaxRetries) throw;
      }
    }
  }

  // Runs work and discards its writes; used to preview consequences.
  template <class F>
  auto preview(F&& work) -> std::invoke_result_t<F&, Transaction&> {
    auto txn = begin();
    return work(txn);
  }

  const Clock& clock() const noexcept { return *clock_; }
  std::shared_ptr<const Clock> clock_ptr() const noexcept { return clock_; }
  bool durable() const noexcept { return options_.directory.has_value(); }
  const StoreOptions& options() const noexcept { return options_; }

  bool empty() const;

  // Replaces the contents of an empty store wholesale (restore path).
  // Sequences advance past every loaded id. Throws NonEmptyTarget.
  void load(Database db, std::vector<LogRecord> logs);

  // The next `count` commits fail with StorageFailure.
  void inject_failures(int count) { injected_failures_.store(count); }

  void set_commit_hook(std::function<void(const CommitInfo&)> hook);

  std::uint64_t peek_sequence(Sequence seq) const { return sequences_[idx(seq)].load(); }

 private:
  friend class Transaction;
  friend class Snapshot;
  static constexpr int kMaxRetries = 64;
  static constexpr std::size_t idx(Sequence s) { return static_cast<std::size_t>(s); }

  void replay_journal();
  void advance_sequences_past(const Database& db, const std::vector<LogRecord>& logs);
  void append_journal(const nlohmann::json& entry);
  nlohmann::json sequence_state() const;

  std::shared_ptr<const Clock> clock_;
  StoreOptions options_;

  mutable std::mutex write_mutex_;
  mutable std::mutex publish_mutex_;  // guards current_/version_ pointer swap
  std::shared_ptr<const Database> current_;
  std::uint64_t version_ = 0;
  std::unordered_map<std::string, std::uint64_t> key_versions_;

  mutable std::shared_mutex log_mutex_;
  std::vector<LogRecord> log_;

  std::array<std::atomic<std::uint64_t>, kSequenceCount> sequences_{};
  std::atomic<int> injected_failures_{0};
  std::function<void(const CommitInfo&)> commit_hook_;
  std::FILE* journal_ = nullptr;
};

}  // namespace uuis
