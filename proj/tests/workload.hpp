#pragma once

// A small campus and a random mix of mutating service calls, shared by the
// audit tests and the acceptance checks.

#include <random>

#include "support.hpp"
#include "uuis/audit.hpp"

namespace uuis::test {

struct Campus {
  Fixture& f;
  std::vector<UuisId> faculties, departments, locations;
  std::vector<UuisId> items;
  std::vector<UuisId> users;
  std::vector<std::string> user_codes;
  UuisId cat;

  explicit Campus(Fixture& fx, int n_items = 12) : f(fx) {
    auto& dir = f.sys->directory;
    const auto b = dir.add_building(f.admin, "MAIN", "Main Hall").bldg_id;
    for (int ff = 1; ff <= 2; ++ff) {
      faculties.push_back(dir.create_faculty(f.admin, "Faculty " + std::to_string(ff), "F" + std::to_string(ff),
                                             std::nullopt)
                              .affln_id);
    }
    int n = 0;
    for (auto fac : faculties) {
      const auto dean = "dean" + std::to_string(n);
      f.user(dean, PermissionLevel::L3, fac);
      for (int d = 0; d < 2; ++d, ++n) {
        departments.push_back(dir.create_department(f.admin, "Dept " + std::to_string(n), "D" + std::to_string(n),
                                                    fac, {dean, kPassword})
                                  .affln_id);
      }
    }
    for (std::size_t i = 0; i < departments.size(); ++i) {
      locations.push_back(dir.add_location(f.admin, "Room " + std::to_string(i), "RM" + std::to_string(i),
                                           f.room_type, b, departments[i])
                              .loc_id);
    }
    cat = f.sys->assets.add_category(f.admin, "Equipment").cat_id;
    for (int i = 0; i < n_items; ++i) {
      const auto d = departments[i % departments.size()];
      const auto loc = locations[i % locations.size()];
      items.push_back(f.sys->assets
                          .add_asset(f.admin, {"Asset " + std::to_string(i), "A" + std::to_string(i),
                                               "SN" + std::to_string(i), cat, d, loc, {}})
                          .item_id);
    }
    for (int l = 0; l < 4; ++l) {
      const auto code = "w" + std::to_string(l);
      users.push_back(f.user(code, level_from_int(l), departments[l % departments.size()]));
      user_codes.push_back(code);
    }
  }
};

// Runs `n` random mutating operations as the administrator; failures are
// allowed and simply change nothing. Returns the number that succeeded.
inline int run_random_ops(Campus& c, int n, std::uint32_t seed) {
  auto& s = *c.f.sys;
  std::mt19937 rng(seed);
  auto pick = [&](const auto& v) { return v[rng() % v.size()]; };
  const auto transfer = s.requests.type_by_code("TRANSFER").req_type_id;
  const auto problem = s.requests.type_by_code("PROBLEM").req_type_id;
  std::vector<UuisId> open;
  const auto requester = c.f.login(c.user_codes[0]);
  int ok = 0;
  int serial = 0;
  for (int i = 0; i < n; ++i) {
    const auto& admin = c.f.admin;
    const int kind = static_cast<int>(rng() % 10);
    try {
      switch (kind) {
        case 0: {
          const auto r = s.requests.submit_request(requester, transfer, pick(c.items), "move");
          s.requests.approve_request(admin, r.req_id, {{"loc_id", pick(c.locations).str()}});
          break;
        }
        case 1: s.assets.checkout_item(admin, pick(c.items)); break;
        case 2: s.assets.return_item(admin, pick(c.items)); break;
        case 3:
          s.assets.update_assets(admin, {pick(c.items), pick(c.items)},
                                 {{"item_description", "Edited " + std::to_string(i)}});
          break;
        case 4: s.assets.group_assets(admin, {pick(c.items), pick(c.items), pick(c.items)}, true); break;
        case 5: {
          open.push_back(s.requests.submit_request(requester, problem, std::nullopt, "problem " + std::to_string(i)).req_id);
          break;
        }
        case 6:
          if (open.empty()) continue;
          s.requests.reject_request(admin, open.back(), "no");
          open.pop_back();
          break;
        case 7:
          s.directory.view_edit_profile(admin, pick(c.users), {{"cell_phone", std::to_string(5140000000 + i)}});
          break;
        case 8: {
          const auto code = "x" + std::to_string(++serial) + "_" + std::to_string(seed);
          s.directory.create_user(admin, {code.substr(0, 10), "L", "F", "x@y.ca", "1990-01-01", "Staff",
                                          "F1", "Start123!"});
          break;
        }
        case 9: {
          const auto code = "N" + std::to_string(seed) + "_" + std::to_string(i);
          c.items.push_back(s.assets
                                .add_asset(admin, {"New " + code, code, "", c.cat, pick(c.departments),
                                                   pick(c.locations), {}})
                                .item_id);
          break;
        }
      }
      ++ok;
    } catch (const Error&) {
    }
  }
  return ok;
}

// Watches commits and records every one whose log records do not match the
// entities it changed one-for-one.
class CompletenessProbe {
 public:
  explicit CompletenessProbe(Store& store) : store_(store) {
    store_.set_commit_hook([this](const CommitInfo& info) { check(info); });
  }
  ~CompletenessProbe() { store_.set_commit_hook(nullptr); }

  std::size_t commits() const { return commits_; }
  std::size_t entity_changes() const { return changes_; }
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  void check(const CommitInfo& info) {
    ++commits_;
    std::set<UuisId> changed;
    for (std::size_t i = 0; i < info.writes.size(); ++i) {
      if (auto e = entity_subject(info.writes[i].first, info.records[i])) changed.insert(*e);
    }
    std::map<UuisId, int> logged;
    for (const auto& l : info.logs)
      if (l.item_id) ++logged[*l.item_id];
    changes_ += changed.size();
    for (auto e : changed) {
      if (logged[e] != 1) violations_.push_back("entity " + e.str() + " logged " + std::to_string(logged[e]) + "x");
    }
    for (auto [e, n] : logged) {
      if (!changed.contains(e)) violations_.push_back("log for unchanged " + e.str());
    }
  }

  Store& store_;
  std::size_t commits_ = 0;
  std::size_t changes_ = 0;
  std::vector<std::string> violations_;
};

// Replays item logs in order and returns the last (loc_id, owner_id) seen per item.
inline std::map<UuisId, std::pair<std::string, std::string>> replay_item_positions(const std::vector<LogRecord>& logs) {
  std::map<UuisId, std::pair<std::string, std::string>> out;
  for (const auto& l : logs) {
    if (!l.item_id || l.item_id->family() != Family::Item) continue;
    const auto st = parse_item_state(l.content);
    if (st.contains("loc_id") && st.contains("owner_id")) out[*l.item_id] = {st.at("loc_id"), st.at("owner_id")};
  }
  return out;
}

}  // namespace uuis::test
