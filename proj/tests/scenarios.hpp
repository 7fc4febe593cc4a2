#pragma once

// Small seeded scenarios shared by the module tests and the acceptance checks.

#include <array>

#include "oracles.hpp"
#include "support.hpp"

namespace uuis::test {

// Items alternating between two faculties and two rooms, seeded directly.
struct Catalog {
  Fixture f;
  UuisId fac1, fac2, bldg, loc1, loc2, cat;
  std::vector<UuisId> items;

  explicit Catalog(int n = 8) {
    fac1 = f.faculty(1);
    fac2 = f.faculty(2);
    bldg = f.building("B");
    loc1 = f.location("R1", bldg, fac1);
    loc2 = f.location("R2", bldg, fac2);
    cat = f.category("Laptop");
    for (int i = 0; i < n; ++i) {
      items.push_back(f.item("item" + std::to_string(i), "C" + std::to_string(i), i % 2 ? fac2 : fac1,
                             i % 2 ? loc2 : loc1, cat, "S" + std::to_string(i)));
    }
  }

  Partition partition() {
    std::map<UuisId, std::set<int>> by;
    const auto snap = f.store().snapshot();
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto g = snap.find<Item>(items[i])->group_id;
      if (g) by[*g].insert(static_cast<int>(i));
    }
    Partition p;
    for (auto& [g, m] : by) p.insert(m);
    return p;
  }

  std::vector<UuisId> ids(const std::set<int>& sel) const {
    std::vector<UuisId> out;
    for (int i : sel) out.push_back(items[i]);
    return out;
  }
};

inline std::optional<GroupVerdict> verdict_of(std::optional<ErrorCode> e) {
  if (!e) return GroupVerdict::Applied;
  switch (*e) {
    case ErrorCode::AlreadyGrouped: return GroupVerdict::AlreadyGrouped;
    case ErrorCode::RefuseHidden: return GroupVerdict::RefuseHidden;
    case ErrorCode::ConfirmationRequired: return GroupVerdict::NeedsConfirm;
    case ErrorCode::ValidationError: return GroupVerdict::TooSmall;
    default: return std::nullopt;
  }
}


// One faculty with a user at every level and a laptop to file requests about.
struct Workflow {
  Fixture f;
  UuisId fac, loc1, loc2, cat, item;
  std::array<UuisId, 4> user_ids;
  std::array<std::string, 4> tokens;

  Workflow() {
    fac = f.faculty(1);
    const auto b = f.building("B");
    loc1 = f.location("R1", b, fac);
    loc2 = f.location("R2", b, fac);
    cat = f.category("Laptop");
    item = f.item("laptop", "L1", fac, loc1, cat, "SN1");
    for (int l = 0; l < 4; ++l) {
      user_ids[l] = f.user("u" + std::to_string(l), level_from_int(l), fac);
      tokens[l] = f.login("u" + std::to_string(l));
    }
  }

  UuisId type(const std::string& code) { return f.sys->requests.type_by_code(code).req_type_id; }

  UuisId seed_request(UuisId type_id, RequestStatus status, int handling, int requester_level) {
    return f.seed([&](Transaction& txn) {
      Request r;
      r.req_id = txn.allocate(Family::Person);
      r.requester = user_ids[requester_level];
      r.submitted_by = r.requester;
      r.req_type = type_id;
      r.item_id = item;
      r.description = "seeded";
      r.date_submitted = txn.now();
      r.status = status;
      r.requester_level = static_cast<std::uint32_t>(requester_level);
      r.handling_level = static_cast<std::uint32_t>(handling);
      txn.put(r);
      return r.req_id;
    });
  }
};


}  // namespace uuis::test
