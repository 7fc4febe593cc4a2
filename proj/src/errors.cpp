#include "uuis/errors.hpp"

#include <array>
#include <utility>

namespace uuis {
namespace {

constexpr std::array kNames = {
    std::pair{ErrorCode::CounterOverflow, "CounterOverflow"},
    std::pair{ErrorCode::MalformedId, "MalformedId"},
    std::pair{ErrorCode::MalformedAffiliationId, "MalformedAffiliationId"},
    std::pair{ErrorCode::UnknownPermission, "UnknownPermission"},
    std::pair{ErrorCode::InvalidCredentials, "InvalidCredentials"},
    std::pair{ErrorCode::AccountLocked, "AccountLocked"},
    std::pair{ErrorCode::ChallengeRequired, "ChallengeRequired"},
    std::pair{ErrorCode::UnknownSession, "UnknownSession"},
    std::pair{ErrorCode::SessionExpired, "SessionExpired"},
    std::pair{ErrorCode::OldPasswordMismatch, "OldPasswordMismatch"},
    std::pair{ErrorCode::NewPasswordsDiffer, "NewPasswordsDiffer"},
    std::pair{ErrorCode::WeakPassword, "WeakPassword"},
    std::pair{ErrorCode::PasswordChangeRequired, "PasswordChangeRequired"},
    std::pair{ErrorCode::PermissionDenied, "PermissionDenied"},
    std::pair{ErrorCode::ValidationError, "ValidationError"},
    std::pair{ErrorCode::LevelNotLower, "LevelNotLower"},
    std::pair{ErrorCode::CosignFailed, "CosignFailed"},
    std::pair{ErrorCode::DuplicateName, "DuplicateName"},
    std::pair{ErrorCode::DuplicateCode, "DuplicateCode"},
    std::pair{ErrorCode::UnknownFaculty, "UnknownFaculty"},
    std::pair{ErrorCode::FacultySpaceExhausted, "FacultySpaceExhausted"},
    std::pair{ErrorCode::UnknownParent, "UnknownParent"},
    std::pair{ErrorCode::CycleDetected, "CycleDetected"},
    std::pair{ErrorCode::MalformedHeader, "MalformedHeader"},
    std::pair{ErrorCode::EmptyFile, "EmptyFile"},
    std::pair{ErrorCode::DuplicateSerial, "DuplicateSerial"},
    std::pair{ErrorCode::UnknownReference, "UnknownReference"},
    std::pair{ErrorCode::EmptySelection, "EmptySelection"},
    std::pair{ErrorCode::RowFormatError, "RowFormatError"},
    std::pair{ErrorCode::AlreadyGrouped, "AlreadyGrouped"},
    std::pair{ErrorCode::RefuseHidden, "RefuseHidden"},
    std::pair{ErrorCode::ConfirmationRequired, "ConfirmationRequired"},
    std::pair{ErrorCode::NotAvailable, "NotAvailable"},
    std::pair{ErrorCode::NotCheckedOut, "NotCheckedOut"},
    std::pair{ErrorCode::UnknownTarget, "UnknownTarget"},
    std::pair{ErrorCode::NotOwner, "NotOwner"},
    std::pair{ErrorCode::NotPending, "NotPending"},
    std::pair{ErrorCode::MissingFields, "MissingFields"},
    std::pair{ErrorCode::UnknownKey, "UnknownKey"},
    std::pair{ErrorCode::NoVisibleData, "NoVisibleData"},
    std::pair{ErrorCode::UnknownFormat, "UnknownFormat"},
    std::pair{ErrorCode::UnknownError, "UnknownError"},
    std::pair{ErrorCode::UnknownField, "UnknownField"},
    std::pair{ErrorCode::SyntaxError, "SyntaxError"},
    std::pair{ErrorCode::StorageFailure, "StorageFailure"},
    std::pair{ErrorCode::InvalidSchedule, "InvalidSchedule"},
    std::pair{ErrorCode::DigestMismatch, "DigestMismatch"},
    std::pair{ErrorCode::NonEmptyTarget, "NonEmptyTarget"},
    std::pair{ErrorCode::Conflict, "Conflict"},
    std::pair{ErrorCode::NotFound, "NotFound"},
    std::pair{ErrorCode::InvalidConfirmation, "InvalidConfirmation"},
    std::pair{ErrorCode::BindFailure, "BindFailure"},
    std::pair{ErrorCode::StorageUnavailable, "StorageUnavailable"},
};

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

const std::vector<ErrorCode>& all_error_codes() {
  static const std::vector<ErrorCode> codes = [] {
    std::vector<ErrorCode> v;
    for (const auto& entry : kNames) v.push_back(entry.first);
    return v;
  }();
  return codes;
}

}  // namespace uuis
