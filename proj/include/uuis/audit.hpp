#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uuis/auth.hpp"

namespace uuis {

enum class AuditCategory : std::uint8_t { Asset, TimeInterval, User, Department, Faculty };
std::string_view to_string(AuditCategory c);
// Throws ValidationError.
AuditCategory parse_audit_category(std::string_view s);

struct AuditKey {
  std::optional<UuisId> entity;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // inclusive
};

// One summarized line; drill_down expands it.
struct AuditEntry {
  std::uint64_t log_id = 0;
  Timestamp log_time{};
  std::optional<UuisId> actor;
  std::optional<UuisId> subject;
  std::string event_type;
  std::string summary;
};

struct AuditDetail {
  LogRecord record;
  nlohmann::json subject_state;  // current record of the subject, null if none
};

// A rectangular result that export_view can serialize.
struct Tabular {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

enum class ReportCategory : std::uint8_t { Locations, Assets, Users, Requests };
ReportCategory parse_report_category(std::string_view s);

struct ReportFacet {
  std::string field;  // item field code or "prop:<name>"
  std::string op;     // eq | contains | lt | gt
  std::string value;
};

struct ReportSpec {
  ReportCategory category = ReportCategory::Assets;
  std::vector<UuisId> item_ids;  // empty = everything visible
  std::string group_by;          // assets only; default loc_id
  std::vector<ReportFacet> facets;
};

struct ErrorFilter {
  std::string severity;  // empty = any
  std::string text;      // substring of message
  bool newest_first = true;
};

// Logical entity a stored record belongs to, for one-log-per-entity
// accounting: inventory and item properties fold into their item, user info
// into its user, ACL entries into their role, notices into their request.
// Empty for bookkeeping rows (errors, metadata).
std::optional<UuisId> entity_subject(std::string_view table_code, const nlohmann::json& record);

// True if a facet comparison holds; lt/gt compare numerically when both
// sides parse as numbers.
bool facet_matches(std::string_view actual, std::string_view op, std::string_view value);

class Audit {
 public:
  Audit(Context& ctx, Auth& auth) : ctx_(ctx), auth_(auth) {}

  std::vector<AuditCategory> audit_options(const std::string& token);
  std::vector<AuditEntry> audit_logs(const std::string& token, AuditCategory category, const AuditKey& key);
  AuditDetail drill_down(const std::string& token, std::uint64_t log_id);

  Tabular produce_report(const std::string& token, const ReportSpec& spec);

  // `selection` indexes rows; empty exports every row.
  static std::string export_view(const Tabular& view, std::string_view format,
                                 const std::vector<std::size_t>& selection = {});

  std::vector<ErrorRecord> list_errors(const std::string& token, const ErrorFilter& filter = {});
  ErrorRecord annotate_error(const std::string& token, std::uint64_t error_id, const std::string& note);

 private:
  Context& ctx_;
  Auth& auth_;
};

}  // namespace uuis
