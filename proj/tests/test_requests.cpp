#include <doctest.h>

#include "scenarios.hpp"

using namespace uuis;
using uuis::test::error_of;
using uuis::test::Fixture;
using uuis::test::RequestAction;
using uuis::test::Workflow;

TEST_CASE("legal transitions") {
  using S = RequestStatus;
  const std::array all{S::InProcess, S::Approved, S::Rejected, S::Cancelled, S::Escalated, S::Locked};
  int legal = 0;
  for (auto from : all)
    for (auto to : all) legal += legal_transition(from, to);
  CHECK(legal == 8);
  CHECK(legal_transition(S::InProcess, S::Cancelled));
  CHECK_FALSE(legal_transition(S::Escalated, S::Cancelled));
  CHECK_FALSE(legal_transition(S::Approved, S::Rejected));
}

TEST_CASE("submitting a request") {
  Workflow w;
  auto& rq = w.f.sys->requests;
  const auto r = rq.submit_request(w.tokens[0], w.type("TRANSFER"), w.item, "move it");
  CHECK(r.status == RequestStatus::InProcess);
  CHECK(r.requester == w.user_ids[0]);
  CHECK(r.submitted_by == w.user_ids[0]);
  CHECK(r.handling_level == 1);
  CHECK(w.f.store().snapshot().logs().back().event_type == "CREATE");
  CHECK(rq.view_request_status(w.tokens[0]).front().req_id == r.req_id);

  CHECK(error_of([&] { rq.submit_request(w.tokens[0], w.type("TRANSFER"), w.item, "   "); }) ==
        ErrorCode::ValidationError);
  CHECK(error_of([&] { rq.submit_request(w.tokens[0], w.type("TRANSFER"), UuisId::encode(Family::Item, 999), "x"); }) ==
        ErrorCode::UnknownTarget);
  CHECK(error_of([&] { rq.submit_request(w.tokens[0], w.item, w.item, "x"); }) == ErrorCode::UnknownReference);
  CHECK(error_of([&] { rq.type_by_code("NOPE"); }) == ErrorCode::NotFound);
}

TEST_CASE("submitting on behalf of a lower-level user") {
  Workflow w;
  auto& rq = w.f.sys->requests;
  const auto r = rq.submit_request(w.tokens[2], w.type("PROBLEM"), std::nullopt, "broken", w.user_ids[0]);
  CHECK(r.requester == w.user_ids[0]);
  CHECK(r.submitted_by == w.user_ids[2]);
  CHECK(r.requester_level == 0);
  CHECK(error_of([&] { rq.submit_request(w.tokens[1], w.type("PROBLEM"), std::nullopt, "x", w.user_ids[2]); }) ==
        ErrorCode::LevelNotLower);
}

TEST_CASE("cancelling requests") {
  Workflow w;
  auto& rq = w.f.sys->requests;
  const auto a = rq.submit_request(w.tokens[0], w.type("PROBLEM"), std::nullopt, "a").req_id;
  const auto b = rq.submit_request(w.tokens[0], w.type("PROBLEM"), std::nullopt, "b").req_id;
  const auto other = rq.submit_request(w.tokens[1], w.type("PROBLEM"), std::nullopt, "c").req_id;
  CHECK(error_of([&] { rq.cancel_request(w.tokens[0], {a, other}); }) == ErrorCode::NotOwner);
  CHECK(rq.get(a).status == RequestStatus::InProcess);
  CHECK(rq.cancel_request(w.tokens[0], {a, b}).size() == 2);
  CHECK(rq.get(b).status == RequestStatus::Cancelled);
  CHECK(error_of([&] { rq.cancel_request(w.tokens[0], {a}); }) == ErrorCode::NotPending);
  CHECK(error_of([&] { rq.cancel_request(w.tokens[0], {}); }) == ErrorCode::EmptySelection);
}

TEST_CASE("pending view shows lower-level requests and the caller's own") {
  Workflow w;
  auto& rq = w.f.sys->requests;
  const auto r0 = rq.submit_request(w.tokens[0], w.type("PROBLEM"), std::nullopt, "zero").req_id;
  w.f.clock->advance(std::chrono::seconds(1));
  const auto r1 = rq.submit_request(w.tokens[1], w.type("PROBLEM"), std::nullopt, "one").req_id;
  w.f.clock->advance(std::chrono::seconds(1));
  const auto r2 = rq.submit_request(w.tokens[2], w.type("PROBLEM"), std::nullopt, "two").req_id;
  auto ids = [](const std::vector<Request>& v) {
    std::vector<UuisId> out;
    for (const auto& r : v) out.push_back(r.req_id);
    return out;
  };
  CHECK(ids(rq.view_pending(w.tokens[1])) == std::vector<UuisId>{r0, r1});
  CHECK(ids(rq.view_pending(w.tokens[2])) == std::vector<UuisId>{r0, r1, r2});
  CHECK(ids(rq.view_pending(w.tokens[3])) == std::vector<UuisId>{r0, r1, r2});
  CHECK(error_of([&] { rq.view_pending(w.tokens[0]); }) == ErrorCode::PermissionDenied);
}

TEST_CASE("exhaustive transition grid over statuses, actions and actor levels") {
  using S = RequestStatus;
  Workflow w;
  auto& rq = w.f.sys->requests;
  const std::array statuses{S::InProcess, S::Approved, S::Rejected, S::Cancelled, S::Escalated, S::Locked};
  const std::array actions{RequestAction::Approve, RequestAction::Escalate, RequestAction::Reject,
                           RequestAction::Cancel};
  const std::array<std::pair<const char*, int>, 3> types{{{"PROBLEM", 1}, {"ACQUIRE", 2}, {"DISPOSE", 3}}};
  int cells = 0;
  for (auto status : statuses) {
    for (auto action : actions) {
      for (int level = 0; level < 4; ++level) {
        for (auto [code, type_level] : types) {
          for (int handling : {1, 2, 3}) {
            if (status == S::InProcess && handling != 1) continue;
            if (status == S::Escalated && handling == 1) continue;
            const bool own = action == RequestAction::Cancel;
            const int requester_level = own ? level : 0;
            const auto id = w.seed_request(w.type(code), status, handling, requester_level);
            const auto expected = uuis::test::request_oracle(status, handling, action, level, type_level, own);
            const auto err = error_of([&] {
              switch (action) {
                case RequestAction::Approve: rq.approve_request(w.tokens[level], id, {}); break;
                case RequestAction::Escalate: rq.approve_request(w.tokens[level], id, {}, true); break;
                case RequestAction::Reject: rq.reject_request(w.tokens[level], id, "no"); break;
                case RequestAction::Cancel: rq.cancel_request(w.tokens[level], {id}); break;
              }
            });
            const auto after = rq.get(id);
            INFO("status=" << enum_name(status) << " level=" << level << " type=" << code
                           << " handling=" << handling << " action=" << static_cast<int>(action));
            CHECK(err.has_value() == !expected.has_value());
            CHECK(after.status == expected.value_or(status));
            if (after.status == S::Approved) {
              CHECK(to_int(user_level(w.f.store().snapshot().db(), *after.approved_by)) >= type_level);
            }
            if (!err && after.status == S::Escalated && status == S::Escalated) {
              CHECK(static_cast<int>(after.handling_level) > handling);
            }
            ++cells;
          }
        }
      }
    }
  }
  CHECK(cells > 200);
}

TEST_CASE("an L3-type request climbs 1 to 2 to 3") {
  Workflow w;
  auto& rq = w.f.sys->requests;
  const auto id = rq.submit_request(w.tokens[0], w.type("DISPOSE"), w.item, "retire it").req_id;
  auto r = rq.approve_request(w.tokens[1], id, {});
  CHECK(r.status == RequestStatus::Escalated);
  CHECK(r.handling_level == 2);
  CHECK(error_of([&] { rq.approve_request(w.tokens[1], id, {}); }) == ErrorCode::PermissionDenied);
  r = rq.approve_request(w.tokens[2], id, {});
  CHECK(r.status == RequestStatus::Escalated);
  CHECK(r.handling_level == 3);
  CHECK(error_of([&] { rq.approve_request(w.tokens[2], id, {}); }) == ErrorCode::PermissionDenied);
  r = rq.approve_request(w.tokens[3], id, {});
  CHECK(r.status == RequestStatus::Approved);
  CHECK(r.approved_by == w.user_ids[3]);
}

TEST_CASE("approving a transfer moves the item in the same transaction") {
  Workflow w;
  auto& rq = w.f.sys->requests;
  const auto id = rq.submit_request(w.tokens[0], w.type("TRANSFER"), w.item, "to R2").req_id;
  const auto err = error_of([&] { rq.approve_request(w.tokens[1], id, {}); });
  CHECK(err == ErrorCode::MissingFields);
  CHECK(rq.get(id).status == RequestStatus::InProcess);
  CHECK(error_of([&] { rq.approve_request(w.tokens[1], id, {{"loc_id", "garbage"}}); }) == ErrorCode::ValidationError);
  CHECK(error_of([&] { rq.approve_request(w.tokens[1], id, {{"loc_id", w.cat.str()}}); }) ==
        ErrorCode::UnknownReference);
  CHECK(w.f.get_item(w.item).loc_id == w.loc1);

  const auto r = rq.approve_request(w.tokens[1], id, {{"loc_id", w.loc2.str()}});
  CHECK(r.status == RequestStatus::Approved);
  CHECK(w.f.get_item(w.item).loc_id == w.loc2);
  const auto logs = w.f.store().snapshot().logs();
  const auto& move = logs[logs.size() - 2];
  CHECK(move.item_id == w.item);
  CHECK(logs.back().event_type == "APPROVE");
  CHECK(move.log_time == logs.back().log_time);
}

TEST_CASE("approving a checkout request updates the inventory") {
  Workflow w;
  auto& rq = w.f.sys->requests;
  const auto id = rq.submit_request(w.tokens[0], w.type("CHECKOUT"), w.item, "borrow").req_id;
  rq.approve_request(w.tokens[1], id, {});
  CHECK(w.f.sys->assets.inventory_of(w.item).qty_out == 1);
  const auto again = rq.submit_request(w.tokens[0], w.type("CHECKOUT"), w.item, "borrow again").req_id;
  CHECK(error_of([&] { rq.approve_request(w.tokens[1], again, {}); }) == ErrorCode::NotAvailable);
  CHECK(rq.get(again).status == RequestStatus::InProcess);
}

TEST_CASE("rejection notifies the requester") {
  Workflow w;
  auto& rq = w.f.sys->requests;
  const auto id = rq.submit_request(w.tokens[0], w.type("PROBLEM"), std::nullopt, "x").req_id;
  rq.reject_request(w.tokens[1], id, "duplicate");
  const auto inbox = rq.inbox(w.tokens[0]);
  REQUIRE(inbox.size() == 1);
  CHECK(inbox[0].req_id == id);
  CHECK(inbox[0].message.find("duplicate") != std::string::npos);
  CHECK(rq.get(id).comment == "duplicate");
  CHECK(rq.inbox(w.tokens[1]).empty());
}

TEST_CASE("a storage failure during rejection locks the request") {
  Workflow w;
  auto& rq = w.f.sys->requests;
  const auto id = rq.submit_request(w.tokens[0], w.type("PROBLEM"), std::nullopt, "x").req_id;
  w.f.store().inject_failures(1);
  CHECK(error_of([&] { rq.reject_request(w.tokens[1], id, "no"); }) == ErrorCode::StorageFailure);
  CHECK(rq.get(id).status == RequestStatus::Locked);
  CHECK(error_of([&] { rq.approve_request(w.tokens[1], id, {}); }) == ErrorCode::NotPending);
}
