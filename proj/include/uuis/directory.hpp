#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uuis/auth.hpp"

namespace uuis {

using FieldEdits = std::map<std::string, std::string>;

struct Credentials {
  std::string user_code;
  std::string password;
};

// One user per CSV line, columns in this order.
struct UserImportRow {
  std::string user_code;
  std::string last_name;
  std::string first_name;
  std::string email;
  std::string dob;
  std::string title_code;  // matches Title::title_name
  std::string affln_code;
  std::string initial_password;
};

const std::vector<std::string>& user_import_header();

struct RejectedRow {
  std::size_t line = 0;
  std::string reason;
  std::vector<std::string> cells;
};

struct ImportReport {
  std::size_t created = 0;
  std::vector<RejectedRow> rejected;
  std::vector<UuisId> created_ids;
};

// Rejected rows re-rendered with an extra trailing "reason" column.
std::string rejections_csv(const std::vector<std::string>& header,
                           const std::vector<RejectedRow>& rejected);

struct UserProfile {
  User user;
  UserInfo info;
  std::vector<UserRole> roles;
};

class Directory {
 public:
  Directory(Context& ctx, Auth& auth) : ctx_(ctx), auth_(auth) {}

  // Self, or ManageUsers. Editable: email, home_phone, cell_phone, street_address.
  UserInfo view_edit_profile(const std::string& token, UuisId target_user, const FieldEdits& edits);

  AclEntry update_role_profile(const std::string& token, UuisId user_role_id, PermissionMask new_mask);

  Affiliation create_department(const std::string& token, const std::string& name,
                                const std::string& code, UuisId faculty, const Credentials& cosigner);
  Affiliation create_faculty(const std::string& token, const std::string& name,
                             const std::string& code, const std::optional<Credentials>& cosigner);

  Building add_building(const std::string& token, const std::string& code, const std::string& name);
  LocationType add_location_type(const std::string& token, const std::string& name,
                                 const std::string& description);
  Location add_location(const std::string& token, const std::string& name, const std::string& code,
                        UuisId type, UuisId parent, UuisId owner, const std::string& comment = "");

  // Single-user create; shares row validation with the bulk path.
  UuisId create_user(const std::string& token, const UserImportRow& row);
  UserRole grant_role(const std::string& token, UuisId user_id, UuisId title_id, UuisId affln_id);

  ImportReport bulk_import_users(const std::string& token, std::string_view csv_text);

  UserProfile lookup_user(const std::string& token, std::string_view user_code);
  std::vector<Affiliation> affiliations() const;

  // Location chain from `loc` up to and including its building.
  std::vector<UuisId> location_chain(UuisId loc) const;

 private:
  struct Validated {
    UserImportRow row;
    UuisId title_id;
    UuisId affln_id;
    PermissionMask title_mask;
  };
  // Returns the reason a row cannot be created, or nullopt.
  std::optional<std::string> check_row(const Database& db, const Principal& who,
                                       const UserImportRow& row, Validated& out) const;
  UuisId insert_user(Transaction& txn, const Principal& who, const Validated& v);
  Affiliation insert_affiliation(Transaction& txn, const Principal& who, UuisId id,
                                 const std::string& name, const std::string& code);
  bool cosign_ok(const Database& db, const Credentials& c, UuisId required_affln) const;

  Context& ctx_;
  Auth& auth_;
};

}  // namespace uuis
