#include "uuis/requests.hpp"

#include <algorithm>

#include "uuis/assets.hpp"

namespace uuis {
namespace {

bool pending_for(const Request& r, const Principal& who) {
  const int level = who.level_int();
  if (static_cast<int>(r.requester_level) >= level) return false;
  if (r.status == RequestStatus::InProcess) return static_cast<int>(r.handling_level) <= level;
  if (r.status == RequestStatus::Escalated) return static_cast<int>(r.handling_level) == level;
  return false;
}

nlohmann::json merged(const Request& r, const Formalization& f) {
  auto j = r.formalization.empty() ? nlohmann::json::object() : nlohmann::json::parse(r.formalization);
  for (const auto& [k, v] : f) j[k] = v;
  return j;
}

std::optional<UuisId> id_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) return std::nullopt;
  const auto id = UuisId::try_parse(j[key].get<std::string>());
  if (!id) fail(ErrorCode::ValidationError, std::string(key) + " is not a ten-digit id");
  return id;
}

}  // namespace

bool is_pending(RequestStatus s) noexcept {
  return s == RequestStatus::InProcess || s == RequestStatus::Escalated;
}

bool legal_transition(RequestStatus from, RequestStatus to) noexcept {
  using S = RequestStatus;
  switch (from) {
    case S::InProcess:
      return to == S::Approved || to == S::Rejected || to == S::Cancelled || to == S::Escalated ||
             to == S::Locked;
    case S::Escalated:
      return to == S::Approved || to == S::Rejected || to == S::Locked;
    default:
      return false;
  }
}

int required_level(const RequestType& type) noexcept {
  return std::max(1, to_int(level_of(type.permission)));
}

Request Requests::submit_request(const std::string& token, UuisId req_type, std::optional<UuisId> target,
                                 const std::string& description, std::optional<UuisId> on_behalf_of) {
  const auto who = auth_.authorize(token);
  require(who, Permission::SubmitRequest);
  if (description.find_first_not_of(" \t\r\n") == std::string::npos) {
    fail(ErrorCode::ValidationError, "a description is required");
  }
  nlohmann::json payload = {{"req_type", req_type.str()}, {"description", description}};
  return ctx_.run("submit_request", payload, [&](Transaction& txn) {
    if (!txn.find<RequestType>(req_type)) fail(ErrorCode::UnknownReference, "unknown request type");
    if (target && !txn.find<Item>(*target)) fail(ErrorCode::UnknownTarget, "no item " + target->str());

    Request r;
    r.requester = who.user_id;
    r.requester_level = static_cast<std::uint32_t>(who.level_int());
    if (on_behalf_of && *on_behalf_of != who.user_id) {
      if (!txn.find<User>(*on_behalf_of)) fail(ErrorCode::UnknownTarget, "no user " + on_behalf_of->str());
      const int their_level = to_int(user_level(txn.db(), *on_behalf_of));
      if (their_level >= who.level_int()) {
        fail(ErrorCode::LevelNotLower, "may only submit on behalf of lower-level users");
      }
      r.requester = *on_behalf_of;
      r.requester_level = static_cast<std::uint32_t>(their_level);
    }
    r.req_id = txn.allocate(Family::Person);
    r.req_type = req_type;
    r.submitted_by = who.user_id;
    r.item_id = target;
    find_field<Request>("description")->set(r, description);
    r.date_submitted = txn.now();
    r.status = RequestStatus::InProcess;
    r.handling_level = static_cast<std::uint32_t>(std::clamp(static_cast<int>(r.requester_level) + 1, 1, 3));
    txn.put(r);
    txn.log(who.user_id, r.req_id, event::Create, "request by " + r.requester.str());
    return r;
  });
}

std::vector<Request> Requests::view_request_status(const std::string& token) {
  const auto who = auth_.authorize(token);
  std::vector<Request> out;
  ctx_.store().snapshot().table<Request>().for_each([&](const Request& r) {
    if (r.requester == who.user_id) out.push_back(r);
  });
  std::stable_sort(out.begin(), out.end(), [](const Request& a, const Request& b) {
    return a.date_submitted != b.date_submitted ? a.date_submitted > b.date_submitted : a.req_id > b.req_id;
  });
  return out;
}

std::vector<Request> Requests::cancel_request(const std::string& token, const std::vector<UuisId>& req_ids) {
  const auto who = auth_.authorize(token);
  if (req_ids.empty()) fail(ErrorCode::EmptySelection, "no requests selected");
  nlohmann::json payload = nlohmann::json::array();
  for (auto id : req_ids) payload.push_back(id.str());
  return ctx_.run("cancel_request", payload, [&](Transaction& txn) {
    std::vector<Request> out;
    for (auto id : std::set<UuisId>(req_ids.begin(), req_ids.end())) {
      Request r = txn.get<Request>(id);
      if (r.requester != who.user_id) fail(ErrorCode::NotOwner, "request " + id.str() + " is not yours");
      if (r.status != RequestStatus::InProcess) {
        fail(ErrorCode::NotPending, "request " + id.str() + " is " + std::string(enum_name(r.status)));
      }
      r.status = RequestStatus::Cancelled;
      r.date_modified = txn.now();
      txn.put(r);
      txn.log(who.user_id, r.req_id, event::Cancel, "cancelled");
      out.push_back(r);
    }
    return out;
  });
}

std::vector<Request> Requests::view_pending(const std::string& token) {
  const auto who = auth_.authorize(token);
  if (who.level_int() < 1) fail(ErrorCode::PermissionDenied, "approver level required");
  std::vector<Request> out;
  ctx_.store().snapshot().table<Request>().for_each([&](const Request& r) {
    if ((r.requester == who.user_id && is_pending(r.status)) || pending_for(r, who)) out.push_back(r);
  });
  std::stable_sort(out.begin(), out.end(), [](const Request& a, const Request& b) {
    return a.date_submitted != b.date_submitted ? a.date_submitted < b.date_submitted : a.req_id < b.req_id;
  });
  return out;
}

Request Requests::approve_request(const std::string& token, UuisId req_id, const Formalization& formalization,
                                  bool escalate) {
  const auto who = auth_.authorize(token);
  if (who.level_int() < 1) fail(ErrorCode::PermissionDenied, "approver level required");
  nlohmann::json payload = {{"req_id", req_id.str()}, {"formalization", formalization}, {"escalate", escalate}};
  return ctx_.run("approve_request", payload, [&](Transaction& txn) {
    Request r = txn.get<Request>(req_id);
    if (!is_pending(r.status)) {
      fail(ErrorCode::NotPending, "request is " + std::string(enum_name(r.status)));
    }
    if (!pending_for(r, who)) {
      fail(ErrorCode::PermissionDenied, "request is not in your queue",
           {{"handling_level", r.handling_level}, {"requester_level", r.requester_level}});
    }
    const auto& type = txn.get<RequestType>(r.req_type);
    const auto f = merged(r, formalization);
    r.formalization = f.dump();
    r.date_modified = txn.now();

    if (escalate || !who.mask.covers(type.permission)) {
      const auto next = std::max<int>(static_cast<int>(r.handling_level), who.level_int()) + 1;
      if (next > 3) fail(ErrorCode::PermissionDenied, "no higher level to escalate to");
      r.handling_level = static_cast<std::uint32_t>(next);
      r.status = RequestStatus::Escalated;
      txn.put(r);
      txn.log(who.user_id, r.req_id, event::Update, "escalated to level " + std::to_string(next));
      return r;
    }

    auto item = id_field(f, "item_id");
    if (!item) item = r.item_id;
    const auto note = "request " + r.req_id.str();
    switch (type.effect) {
      case RequestEffect::Transfer: {
        std::vector<std::string> missing;
        const auto loc = id_field(f, "loc_id");
        if (!item) missing.push_back("item_id");
        if (!loc) missing.push_back("loc_id");
        if (!missing.empty()) {
          fail(ErrorCode::MissingFields, "transfer needs a destination", {{"missing", missing}});
        }
        transfer_in(txn, who.user_id, *item, loc, id_field(f, "owner_id"), note);
        break;
      }
      case RequestEffect::Checkout:
        if (!item) fail(ErrorCode::MissingFields, "checkout needs an item", {{"missing", {"item_id"}}});
        checkout_in(txn, who.user_id, *item);
        break;
      case RequestEffect::Record:
        break;
    }
    r.status = RequestStatus::Approved;
    r.approved_by = who.user_id;
    r.date_approved = txn.now();
    txn.put(r);
    txn.log(who.user_id, r.req_id, event::Approve, "approved " + std::string(enum_name(type.effect)));
    return r;
  });
}

Request Requests::reject_request(const std::string& token, UuisId req_id, const std::string& comment) {
  const auto who = auth_.authorize(token);
  if (who.level_int() < 1) fail(ErrorCode::PermissionDenied, "approver level required");
  nlohmann::json payload = {{"req_id", req_id.str()}, {"comment", comment}};
  try {
    return ctx_.run("reject_request", payload, [&](Transaction& txn) {
      Request r = txn.get<Request>(req_id);
      if (!is_pending(r.status)) fail(ErrorCode::NotPending, "request is " + std::string(enum_name(r.status)));
      if (!pending_for(r, who)) fail(ErrorCode::PermissionDenied, "request is not in your queue");
      r.status = RequestStatus::Rejected;
      find_field<Request>("comment")->set(r, comment);
      r.date_modified = txn.now();
      txn.put(r);
      Notification n;
      n.notice_id = txn.next(Sequence::Notice);
      n.user_id = r.requester;
      n.created_at = txn.now();
      n.req_id = r.req_id;
      n.message = "Request " + r.req_id.str() + " was rejected" + (comment.empty() ? "" : ": " + comment);
      if (n.message.size() > 255) n.message.resize(255);
      txn.put(n);
      txn.log(who.user_id, r.req_id, event::Reject, "rejected");
      return r;
    });
  } catch (const Error& e) {
    if (e.code() != ErrorCode::StorageFailure) throw;
    try {
      ctx_.store().transact([&](Transaction& txn) {
        Request r = txn.get<Request>(req_id);
        if (!is_pending(r.status)) return;
        r.status = RequestStatus::Locked;
        r.date_modified = txn.now();
        txn.put(r);
        txn.log(who.user_id, r.req_id, event::Update, "locked after failed rejection");
      });
    } catch (const Error&) {
    }
    throw;
  }
}

std::vector<Notification> Requests::inbox(const std::string& token) {
  const auto who = auth_.authorize(token);
  std::vector<Notification> out;
  ctx_.store().snapshot().table<Notification>().for_each([&](const Notification& n) {
    if (n.user_id == who.user_id) out.push_back(n);
  });
  return out;
}

std::vector<RequestType> Requests::request_types() const {
  return ctx_.store().snapshot().table<RequestType>().rows();
}

RequestType Requests::type_by_code(std::string_view code) const {
  auto snap = ctx_.store().snapshot();
  const auto* t = snap.table<RequestType>().find_if([&](const RequestType& t) { return t.req_type_code == code; });
  if (!t) fail(ErrorCode::NotFound, "no request type '" + std::string(code) + "'");
  return *t;
}

Request Requests::get(UuisId req_id) const {
  auto snap = ctx_.store().snapshot();
  const auto* r = snap.find<Request>(req_id);
  if (!r) fail(ErrorCode::NotFound, "no request " + req_id.str());
  return *r;
}

}  // namespace uuis
