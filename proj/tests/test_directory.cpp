#include <doctest.h>

#include "support.hpp"
#include "uuis/csv.hpp"

using namespace uuis;
using uuis::test::error_of;
using uuis::test::Fixture;
using uuis::test::kPassword;

namespace {

const std::string kHeader = "user_code,last_name,first_name,email,dob,title_code,affln_code,initial_password\n";

std::size_t user_count(Fixture& f) { return f.store().snapshot().table<User>().size(); }

}  // namespace

TEST_CASE("users view and edit their own profile") {
  Fixture f;
  const auto uid = f.user("amy", PermissionLevel::L0, university_id());
  const auto token = f.login("amy");
  auto& dir = f.sys->directory;
  CHECK(dir.view_edit_profile(token, uid, {}).email == "amy@example.edu");
  const auto logs_before = f.store().snapshot().log_count();
  CHECK(f.store().snapshot().log_count() == logs_before);

  const auto info = dir.view_edit_profile(token, uid, {{"cell_phone", "5145550000"}, {"email", "amy@uni.ca"}});
  CHECK(info.cell_phone == "5145550000");
  CHECK(f.store().snapshot().find<UserInfo>(uid)->email == "amy@uni.ca");
  const auto last = f.store().snapshot().logs().back();
  CHECK(last.event_type == "UPDATE");
  CHECK(last.item_id == uid);

  CHECK(error_of([&] { dir.view_edit_profile(token, uid, {{"dob", "2000-01-01"}}); }) == ErrorCode::ValidationError);
  CHECK(error_of([&] { dir.view_edit_profile(token, uid, {{"email", "not-an-email"}}); }) ==
        ErrorCode::ValidationError);
  CHECK(error_of([&] { dir.view_edit_profile(token, uid, {{"home_phone", "12345"}}); }) ==
        ErrorCode::ValidationError);
}

TEST_CASE("editing someone else's profile needs ManageUsers") {
  Fixture f;
  const auto a = f.user("amy", PermissionLevel::L0, university_id());
  f.user("ben", PermissionLevel::L0, university_id());
  CHECK(error_of([&] { f.sys->directory.view_edit_profile(f.login("ben"), a, {}); }) == ErrorCode::PermissionDenied);
  CHECK_NOTHROW(f.sys->directory.view_edit_profile(f.admin, a, {{"street_address", "1 Main St"}}));
}

TEST_CASE("role updates must stay below the caller's level") {
  Fixture f;
  const auto fac = f.faculty(1);
  const auto l2 = f.user("mgr", PermissionLevel::L2, fac);
  const auto l1 = f.user("tech", PermissionLevel::L1, fac);
  const auto l2b = f.user("peer", PermissionLevel::L2, fac);
  (void)l2;
  auto role_of = [&](UuisId uid) { return roles_of(f.store().snapshot().db(), uid).front().user_role_id; };
  const auto token = f.login("mgr");
  auto& dir = f.sys->directory;

  CHECK(error_of([&] { dir.update_role_profile(token, role_of(l2b), default_mask(PermissionLevel::L1)); }) ==
        ErrorCode::LevelNotLower);
  CHECK(error_of([&] { dir.update_role_profile(token, role_of(l1), default_mask(PermissionLevel::L2)); }) ==
        ErrorCode::LevelNotLower);
  const auto acl = dir.update_role_profile(token, role_of(l1), default_mask(PermissionLevel::L0));
  CHECK(acl.permission == default_mask(PermissionLevel::L0));
  CHECK(user_level(f.store().snapshot().db(), l1) == PermissionLevel::L0);
  CHECK(error_of([&] { dir.update_role_profile(f.login("tech"), role_of(l1), {}); }) == ErrorCode::PermissionDenied);
}

TEST_CASE("departments need the dean's cosignature") {
  Fixture f;
  const auto fac = f.faculty(2, "Engineering");
  f.user("dean", PermissionLevel::L3, fac);
  f.user("other", PermissionLevel::L3, f.faculty(3));
  f.user("admin2", PermissionLevel::L2, fac);
  const auto token = f.login("admin2");
  auto& dir = f.sys->directory;

  const auto d1 = dir.create_department(token, "Civil", "CIV", fac, {"dean", kPassword});
  CHECK(d1.affln_id == department_id(2, 1));
  const auto d2 = dir.create_department(token, "Mechanical", "MEC", fac, {"dean", kPassword});
  CHECK(d2.affln_id == department_id(2, 2));

  CHECK(error_of([&] { dir.create_department(token, "X", "X", fac, {"dean", "wrong"}); }) == ErrorCode::CosignFailed);
  CHECK(error_of([&] { dir.create_department(token, "X", "X", fac, {"other", kPassword}); }) ==
        ErrorCode::CosignFailed);
  CHECK(error_of([&] { dir.create_department(token, "X", "X", faculty_id(9), {"dean", kPassword}); }) ==
        ErrorCode::UnknownFaculty);
  CHECK(error_of([&] { dir.create_department(token, "X", "X", d1.affln_id, {"dean", kPassword}); }) ==
        ErrorCode::UnknownFaculty);
  CHECK(error_of([&] { dir.create_department(token, "Civil", "NEW", fac, {"dean", kPassword}); }) ==
        ErrorCode::DuplicateName);
  CHECK(error_of([&] { dir.create_department(token, "New", "CIV", fac, {"dean", kPassword}); }) ==
        ErrorCode::DuplicateCode);
  CHECK(error_of([&] { dir.create_department(f.login("dean"), "Y", "Y", fac, {"dean", kPassword}); }) ==
        std::nullopt);
  f.user("tech", PermissionLevel::L1, fac);
  CHECK(error_of([&] { dir.create_department(f.login("tech"), "Z", "Z", fac, {"dean", kPassword}); }) ==
        ErrorCode::PermissionDenied);
}

TEST_CASE("faculties are created by the principal or with the principal's cosignature") {
  Fixture f;
  auto& dir = f.sys->directory;
  const auto fa = dir.create_faculty(f.admin, "Science", "SCI", std::nullopt);
  CHECK(fa.affln_id == faculty_id(1));
  CHECK(dir.create_faculty(f.admin, "Arts", "ART", std::nullopt).affln_id == faculty_id(2));

  f.user_with_mask("vp", default_mask(PermissionLevel::L3), fa.affln_id);
  const auto vp = f.login("vp");
  CHECK(error_of([&] { dir.create_faculty(vp, "Law", "LAW", std::nullopt); }) == ErrorCode::CosignFailed);
  CHECK(error_of([&] { dir.create_faculty(vp, "Law", "LAW", Credentials{"admin", "nope"}); }) ==
        ErrorCode::CosignFailed);
  CHECK(dir.create_faculty(vp, "Law", "LAW", Credentials{"admin", uuis::test::kAdminPassword}).affln_id ==
        faculty_id(3));
  CHECK(error_of([&] { dir.create_faculty(f.admin, "", "MED", std::nullopt); }) == ErrorCode::ValidationError);
}

TEST_CASE("the faculty number space holds 99 faculties") {
  Fixture f;
  for (std::uint64_t ff = 1; ff <= 99; ++ff) f.faculty(ff);
  CHECK(error_of([&] { f.sys->directory.create_faculty(f.admin, "One more", "MORE", std::nullopt); }) ==
        ErrorCode::FacultySpaceExhausted);
}

TEST_CASE("locations nest under buildings") {
  Fixture f;
  auto& dir = f.sys->directory;
  const auto fac = f.faculty(1);
  const auto b = dir.add_building(f.admin, "EV", "Engineering Building");
  const auto lab = dir.add_location(f.admin, "Robotics Lab", "EV-301", f.room_type, b.bldg_id, fac);
  CHECK(lab.bldg_id == b.bldg_id);
  const auto cab = dir.add_location(f.admin, "Cabinet", "EV-301-C", f.room_type, lab.loc_id, fac, "locked");
  CHECK(cab.bldg_id == b.bldg_id);
  CHECK(dir.location_chain(cab.loc_id) == std::vector<UuisId>{cab.loc_id, lab.loc_id, b.bldg_id});

  CHECK(error_of([&] { dir.add_location(f.admin, "X", "X1", f.room_type, UuisId::encode(Family::Location, 999), fac); }) ==
        ErrorCode::UnknownParent);
  CHECK(error_of([&] { dir.add_location(f.admin, "X", "EV-301", f.room_type, b.bldg_id, fac); }) ==
        ErrorCode::DuplicateCode);
  CHECK(error_of([&] { dir.add_location(f.admin, "X", "EV", f.room_type, b.bldg_id, fac); }) ==
        ErrorCode::DuplicateCode);
  CHECK(error_of([&] { dir.add_location(f.admin, "X", "X2", b.bldg_id, b.bldg_id, fac); }) ==
        ErrorCode::UnknownReference);
  CHECK(error_of([&] { dir.add_location(f.admin, "X", "X3", f.room_type, b.bldg_id, faculty_id(40)); }) ==
        ErrorCode::UnknownReference);
  CHECK(error_of([&] { dir.add_building(f.admin, "EV", "Other"); }) == ErrorCode::DuplicateCode);
  CHECK(error_of([&] { dir.add_location_type(f.admin, "Room", ""); }) == ErrorCode::DuplicateName);
}

TEST_CASE("a corrupt containment cycle is detected") {
  Fixture f;
  const auto b = f.building("B");
  const auto l1 = f.location("L1", b, university_id());
  const auto l2 = f.location("L2", b, university_id());
  f.seed([&](Transaction& txn) {
    auto a = txn.get<Location>(l1);
    a.parent_loc_id = l2;
    txn.put(a);
    auto c = txn.get<Location>(l2);
    c.parent_loc_id = l1;
    txn.put(c);
  });
  CHECK(error_of([&] { f.sys->directory.add_location(f.admin, "X", "X", f.room_type, l1, university_id()); }) ==
        ErrorCode::CycleDetected);
  CHECK(error_of([&] { f.sys->directory.location_chain(l1); }) == ErrorCode::CycleDetected);
}

TEST_CASE("single user creation validates the row") {
  Fixture f;
  auto& dir = f.sys->directory;
  UserImportRow row{"kim", "Kim", "K", "kim@example.edu", "1991-04-05", "Technician", "UNIV", "Start123!"};
  const auto id = dir.create_user(f.admin, row);
  const auto p = dir.lookup_user(f.admin, "kim");
  CHECK(p.user.user_id == id);
  CHECK(p.user.password.empty());
  CHECK(p.user.must_change_password);
  CHECK(p.info.dob == "1991-04-05");
  REQUIRE(p.roles.size() == 1);
  CHECK(p.roles[0].title_id == f.titles.at("Technician"));
  CHECK(user_mask(f.store().snapshot().db(), id) == default_mask(PermissionLevel::L1));

  CHECK(error_of([&] { dir.create_user(f.admin, row); }) == ErrorCode::DuplicateCode);
  row.user_code = "kim2";
  row.dob = "1991-13-05";
  CHECK(error_of([&] { dir.create_user(f.admin, row); }) == ErrorCode::ValidationError);
  CHECK(error_of([&] { dir.lookup_user(f.admin, "ghost"); }) == ErrorCode::NotFound);
}

TEST_CASE("bulk import: structural problems reject the whole file") {
  Fixture f;
  auto& dir = f.sys->directory;
  const auto before = user_count(f);
  CHECK(error_of([&] { dir.bulk_import_users(f.admin, ""); }) == ErrorCode::EmptyFile);
  CHECK(error_of([&] { dir.bulk_import_users(f.admin, "code,name\nx,y\n"); }) == ErrorCode::MalformedHeader);
  const auto bad_row = kHeader + "u1,L,F,u1@x.ca,1990-01-01,Staff,UNIV,Start123!\nu2,L,F\n";
  CHECK(error_of([&] { dir.bulk_import_users(f.admin, bad_row); }) == ErrorCode::RowFormatError);
  CHECK(error_of([&] { dir.bulk_import_users(f.admin, kHeader + "u1,\"unterminated\n"); }) ==
        ErrorCode::RowFormatError);
  CHECK(user_count(f) == before);
}

TEST_CASE("bulk import: invalid rows are reported and valid rows created") {
  Fixture f;
  const auto text = kHeader +
                    "u1,Lee,Ann,ann@x.ca,1990-01-01,Staff,UNIV,Start123!\n"
                    "u2,Lee,Bob,bad-email,1990-01-01,Staff,UNIV,Start123!\n"
                    "u1,Lee,Dup,dup@x.ca,1990-01-01,Staff,UNIV,Start123!\n"
                    "u3,Lee,Cat,cat@x.ca,1990-01-01,Wizard,UNIV,Start123!\n"
                    "u4,Lee,Dan,dan@x.ca,1990-01-01,Staff,NOPE,Start123!\n"
                    "u5,Lee,Eve,eve@x.ca,1990-01-01,Staff,UNIV,weak\n"
                    "u6,\"Lee, Jr\",Fay,fay@x.ca,1985-12-31,Technician,UNIV,Start123!\n";
  const auto report = f.sys->directory.bulk_import_users(f.admin, text);
  CHECK(report.created == 2);
  REQUIRE(report.rejected.size() == 5);
  CHECK(report.rejected[0].line == 3);
  CHECK(report.rejected[0].reason == "malformed email");
  CHECK(report.rejected[1].reason == "duplicate user_code");
  CHECK(report.rejected[2].reason == "unknown title_code");
  CHECK(report.rejected[3].reason == "unknown affln_code");
  CHECK(report.rejected[4].reason == "weak initial_password");

  const auto out = csv::parse(rejections_csv(user_import_header(), report.rejected));
  CHECK(out.front().cells.back() == "reason");
  CHECK(out.size() == 6);

  const auto p = f.sys->directory.lookup_user(f.admin, "u6");
  CHECK(p.user.last_name == "Lee, Jr");
  CHECK(p.user.first_name == "Fay");
  CHECK(p.info.email == "fay@x.ca");
  CHECK(p.info.dob == "1985-12-31");
  CHECK(p.roles[0].affln_id == university_id());
  CHECK(f.sys->auth.login("u6", "Start123!").password_change_required);

  const auto logs = f.store().snapshot().logs();
  const auto imp = std::find_if(logs.rbegin(), logs.rend(), [](const LogRecord& l) { return l.event_type == "IMPORT"; });
  REQUIRE(imp != logs.rend());
  CHECK(imp->content == "users created=2 rejected=5");
}

TEST_CASE("importers below level 3 are limited to lower titles inside their scope") {
  Fixture f;
  const auto fac1 = f.faculty(1);
  f.faculty(2);
  f.user_with_mask("hr", default_mask(PermissionLevel::L2), fac1);
  const auto text = kHeader +
                    "a1,A,A,a1@x.ca,1990-01-01,Technician,F1,Start123!\n"
                    "a2,A,A,a2@x.ca,1990-01-01,Administrator,F1,Start123!\n"
                    "a3,A,A,a3@x.ca,1990-01-01,Staff,F2,Start123!\n";
  const auto report = f.sys->directory.bulk_import_users(f.login("hr"), text);
  CHECK(report.created == 1);
  REQUIRE(report.rejected.size() == 2);
  CHECK(report.rejected[0].reason == "title exceeds importer level");
  CHECK(report.rejected[1].reason == "affiliation outside importer scope");
}

TEST_CASE("granting roles respects level and scope") {
  Fixture f;
  const auto fac1 = f.faculty(1);
  const auto fac2 = f.faculty(2);
  const auto target = f.user("t", PermissionLevel::L0, fac1);
  f.user("hr", PermissionLevel::L2, fac1);
  const auto hr = f.login("hr");
  auto& dir = f.sys->directory;
  CHECK(dir.grant_role(hr, target, f.titles.at("Technician"), fac1).status == RoleStatus::Accepted);
  CHECK(user_level(f.store().snapshot().db(), target) == PermissionLevel::L1);
  CHECK(error_of([&] { dir.grant_role(hr, target, f.titles.at("Dean"), fac1); }) == ErrorCode::LevelNotLower);
  CHECK(error_of([&] { dir.grant_role(hr, target, f.titles.at("Staff"), fac2); }) == ErrorCode::PermissionDenied);
}
