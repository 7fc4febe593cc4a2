#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace uuis {

// Machine-readable failure vocabulary shared by every module and the API.
enum class ErrorCode {
  CounterOverflow,
  MalformedId,
  MalformedAffiliationId,
  UnknownPermission,
  InvalidCredentials,
  AccountLocked,
  ChallengeRequired,
  UnknownSession,
  SessionExpired,
  OldPasswordMismatch,
  NewPasswordsDiffer,
  WeakPassword,
  PasswordChangeRequired,
  PermissionDenied,
  ValidationError,
  LevelNotLower,
  CosignFailed,
  DuplicateName,
  DuplicateCode,
  UnknownFaculty,
  FacultySpaceExhausted,
  UnknownParent,
  CycleDetected,
  MalformedHeader,
  EmptyFile,
  DuplicateSerial,
  UnknownReference,
  EmptySelection,
  RowFormatError,
  AlreadyGrouped,
  RefuseHidden,
  ConfirmationRequired,
  NotAvailable,
  NotCheckedOut,
  UnknownTarget,
  NotOwner,
  NotPending,
  MissingFields,
  UnknownKey,
  NoVisibleData,
  UnknownFormat,
  UnknownError,
  UnknownField,
  SyntaxError,
  StorageFailure,
  InvalidSchedule,
  DigestMismatch,
  NonEmptyTarget,
  Conflict,
  NotFound,
  InvalidConfirmation,
  BindFailure,
  StorageUnavailable,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every enumerator, in declaration order.
const std::vector<ErrorCode>& all_error_codes();

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json details = nullptr)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }

  // Structured context, e.g. the computed resolution of a confirmable action.
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              nlohmann::json details = nullptr) {
  throw Error(code, message, std::move(details));
}

}  // namespace uuis
