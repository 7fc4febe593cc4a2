#include "uuis/permissions.hpp"

#include "uuis/errors.hpp"

namespace uuis {
namespace {

constexpr std::array<std::string_view, kPermissionCount> kNames = {
    "ViewOwn",      "SubmitRequest",    "ViewDeptAssets", "ManageAssets",
    "ApproveL1",    "ApproveL2",        "ApproveL3",      "ManageUsers",
    "CreateDepartment", "CreateFaculty", "AddLocation",   "Backup",
    "Audit",        "ErrorMgmt",        "Report",         "BulkImport",
};

}  // namespace

std::string_view permission_name(Permission p) noexcept {
  return kNames[static_cast<std::size_t>(p)];
}

Permission parse_permission(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Permission>(i);
  }
  fail(ErrorCode::UnknownPermission, "no permission named '" + std::string(name) + "'");
}

const std::array<Permission, kPermissionCount>& all_permissions() noexcept {
  static const auto all = [] {
    std::array<Permission, kPermissionCount> a{};
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<Permission>(i);
    return a;
  }();
  return all;
}

std::vector<std::string_view> PermissionMask::names() const {
  std::vector<std::string_view> out;
  for (auto p : all_permissions()) {
    if (grants(p)) out.push_back(permission_name(p));
  }
  return out;
}

PermissionMask PermissionMask::from_integer(long long value) {
  if (value < 0 || value > 0xFFFF) {
    fail(ErrorCode::ValidationError, "permission mask out of range: " + std::to_string(value));
  }
  return PermissionMask(static_cast<std::uint16_t>(value));
}

bool mask_grants(PermissionMask mask, std::string_view permission) {
  return mask.grants(parse_permission(permission));
}

PermissionLevel level_from_int(int level) {
  if (level < 0 || level > 3) fail(ErrorCode::ValidationError, "permission level out of range");
  return static_cast<PermissionLevel>(level);
}

PermissionLevel level_of(PermissionMask mask) noexcept {
  if (mask.grants(Permission::ApproveL3)) return PermissionLevel::L3;
  if (mask.grants(Permission::ApproveL2)) return PermissionLevel::L2;
  if (mask.grants(Permission::ApproveL1)) return PermissionLevel::L1;
  return PermissionLevel::L0;
}

PermissionMask default_mask(PermissionLevel level) noexcept {
  using P = Permission;
  const PermissionMask l0{P::ViewOwn, P::SubmitRequest};
  const PermissionMask l1 =
      l0 | PermissionMask{P::ViewDeptAssets, P::ManageAssets, P::ApproveL1, P::Backup, P::Audit,
                          P::BulkImport};
  const PermissionMask l2 =
      l1 | PermissionMask{P::ApproveL2, P::ManageUsers, P::CreateDepartment, P::AddLocation,
                          P::ErrorMgmt, P::Report};
  switch (level) {
    case PermissionLevel::L0: return l0;
    case PermissionLevel::L1: return l1;
    case PermissionLevel::L2: return l2;
    case PermissionLevel::L3: return PermissionMask::full();
  }
  return {};
}

Permission approve_permission(PermissionLevel level) {
  switch (level) {
    case PermissionLevel::L1: return Permission::ApproveL1;
    case PermissionLevel::L2: return Permission::ApproveL2;
    case PermissionLevel::L3: return Permission::ApproveL3;
    case PermissionLevel::L0: break;
  }
  fail(ErrorCode::ValidationError, "level 0 has no approval permission");
}

PermissionMask effective_mask(std::span<const RoleGrant> roles) noexcept {
  PermissionMask out;
  for (const auto& r : roles) {
    if (r.accepted) out = out | r.mask;
  }
  return out;
}

}  // namespace uuis
