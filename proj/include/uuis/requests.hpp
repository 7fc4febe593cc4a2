#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uuis/auth.hpp"

namespace uuis {

bool is_pending(RequestStatus s) noexcept;
// Status changes only; a further escalation keeps the Escalated status.
bool legal_transition(RequestStatus from, RequestStatus to) noexcept;

// Level demanded by the type's ApproveLn bit (1 if none is set).
int required_level(const RequestType& type) noexcept;

// Formalization keys understood by the built-in effects.
//   Transfer: item_id (defaults to the request target), loc_id, owner_id (optional)
//   Checkout: item_id (defaults to the request target)
using Formalization = std::map<std::string, std::string>;

class Requests {
 public:
  Requests(Context& ctx, Auth& auth) : ctx_(ctx), auth_(auth) {}

  // `on_behalf_of` lets a higher-level user submit for a lower-level one.
  Request submit_request(const std::string& token, UuisId req_type, std::optional<UuisId> target,
                         const std::string& description,
                         std::optional<UuisId> on_behalf_of = std::nullopt);

  // Caller's own requests, newest first.
  std::vector<Request> view_request_status(const std::string& token);

  std::vector<Request> cancel_request(const std::string& token, const std::vector<UuisId>& req_ids);

  // Oldest first.
  std::vector<Request> view_pending(const std::string& token);

  Request approve_request(const std::string& token, UuisId req_id, const Formalization& formalization,
                          bool escalate = false);
  Request reject_request(const std::string& token, UuisId req_id, const std::string& comment);

  std::vector<Notification> inbox(const std::string& token);
  std::vector<RequestType> request_types() const;
  RequestType type_by_code(std::string_view code) const;
  Request get(UuisId req_id) const;

 private:
  Context& ctx_;
  Auth& auth_;
};

}  // namespace uuis
