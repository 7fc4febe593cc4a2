#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uuis {

enum class Permission : std::uint8_t {
  ViewOwn = 0,
  SubmitRequest = 1,
  ViewDeptAssets = 2,
  ManageAssets = 3,
  ApproveL1 = 4,
  ApproveL2 = 5,
  ApproveL3 = 6,
  ManageUsers = 7,
  CreateDepartment = 8,
  CreateFaculty = 9,
  AddLocation = 10,
  Backup = 11,
  Audit = 12,
  ErrorMgmt = 13,
  Report = 14,
  BulkImport = 15,
};

inline constexpr std::size_t kPermissionCount = 16;

std::string_view permission_name(Permission p) noexcept;
// Throws UnknownPermission.
Permission parse_permission(std::string_view name);
const std::array<Permission, kPermissionCount>& all_permissions() noexcept;

// 16-bit OR-composition of granted permissions.
class PermissionMask {
 public:
  constexpr PermissionMask() = default;
  constexpr explicit PermissionMask(std::uint16_t bits) : bits_(bits) {}
  constexpr PermissionMask(std::initializer_list<Permission> ps) {
    for (auto p : ps) bits_ |= bit(p);
  }

  static constexpr PermissionMask full() { return PermissionMask(0xFFFF); }

  constexpr std::uint16_t bits() const noexcept { return bits_; }
  constexpr bool grants(Permission p) const noexcept { return (bits_ & bit(p)) != 0; }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr bool covers(PermissionMask other) const noexcept {
    return (bits_ & other.bits_) == other.bits_;
  }

  constexpr PermissionMask with(Permission p) const noexcept {
    return PermissionMask(static_cast<std::uint16_t>(bits_ | bit(p)));
  }
  constexpr PermissionMask operator|(PermissionMask o) const noexcept {
    return PermissionMask(static_cast<std::uint16_t>(bits_ | o.bits_));
  }
  constexpr PermissionMask operator&(PermissionMask o) const noexcept {
    return PermissionMask(static_cast<std::uint16_t>(bits_ & o.bits_));
  }
  constexpr bool operator==(const PermissionMask&) const = default;

  std::vector<std::string_view> names() const;

  // Accepts 0..65535; anything else throws ValidationError.
  static PermissionMask from_integer(long long value);

 private:
  static constexpr std::uint16_t bit(Permission p) noexcept {
    return static_cast<std::uint16_t>(1u << static_cast<unsigned>(p));
  }
  std::uint16_t bits_ = 0;
};

// mask_grants by permission name; throws UnknownPermission.
bool mask_grants(PermissionMask mask, std::string_view permission);

// Approval capability ordering: 0 = requester only, 3 = chair/dean/controller.
enum class PermissionLevel : std::uint8_t { L0 = 0, L1 = 1, L2 = 2, L3 = 3 };

constexpr int to_int(PermissionLevel l) noexcept { return static_cast<int>(l); }
PermissionLevel level_from_int(int level);

// Highest ApproveLn bit held; 0 when none.
PermissionLevel level_of(PermissionMask mask) noexcept;
PermissionMask default_mask(PermissionLevel level) noexcept;
Permission approve_permission(PermissionLevel level);  // L1..L3

struct RoleGrant {
  bool accepted = false;
  PermissionMask mask;
};

// OR of the masks of accepted roles.
PermissionMask effective_mask(std::span<const RoleGrant> roles) noexcept;

}  // namespace uuis
