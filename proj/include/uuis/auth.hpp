#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>

#include "uuis/access.hpp"
#include "uuis/context.hpp"

namespace uuis {

// Salted Argon2id digests rendered as "<salt b64>$<hash b64>" (45 chars).
class PasswordHasher {
 public:
  PasswordHasher(unsigned long long opslimit, std::size_t memlimit);
  std::string hash(std::string_view password) const;
  bool verify(std::string_view password, std::string_view digest) const;

 private:
  unsigned long long opslimit_;
  std::size_t memlimit_;
};

// >= 8 characters drawn from >= 2 of {lower, upper, digit, other}.
bool password_meets_policy(std::string_view password);

struct Challenge {
  std::string id;
  std::string question;
};

// Human-verification hook for risky logins.
class ChallengeProvider {
 public:
  virtual ~ChallengeProvider() = default;
  virtual Challenge issue() = 0;
  // Challenges are single-use: verify consumes the id either way.
  virtual bool verify(const std::string& id, const std::string& answer) = 0;
};

// "What is 7 + 12?"
class ArithmeticChallenge final : public ChallengeProvider {
 public:
  Challenge issue() override;
  bool verify(const std::string& id, const std::string& answer) override;

 private:
  std::mutex mutex_;
  std::unordered_map<std::string, int> answers_;
  std::mt19937 rng_{std::random_device{}()};
};

struct ChallengeAnswer {
  std::string id;
  std::string answer;
};

struct Session {
  std::string token;  // 128-bit random, hex
  UuisId user_id;
  PermissionMask effective_mask;
  PermissionLevel level = PermissionLevel::L0;
  Timestamp created_at{};
  Timestamp last_activity{};
  bool password_change_required = false;
};

struct LockoutState {
  UuisId user_id;
  std::uint32_t failed_attempts = 0;
  bool locked = false;
};

std::string generate_session_token();

class Auth {
 public:
  Auth(Context& ctx, std::unique_ptr<ChallengeProvider> challenges = nullptr);

  Session login(std::string_view user_code, std::string_view password,
                const std::optional<ChallengeAnswer>& challenge = std::nullopt);
  void logout(const std::string& token);
  void change_password(const std::string& token, std::string_view old_password,
                       std::string_view new1, std::string_view new2);
  Session touch(const std::string& token);

  // Validates and refreshes the session, then resolves the caller's current
  // grants. Sessions flagged for a password change may only change it.
  Principal authorize(const std::string& token, bool allow_pending_password_change = false);

  // Requires ManageUsers; clears failed attempts.
  void unlock_user(const std::string& token, std::string_view user_code);
  // Operator path (CLI, direct storage): no session needed.
  void unlock_user_direct(std::string_view user_code);

  LockoutState lockout_state(std::string_view user_code) const;

  const PasswordHasher& hasher() const noexcept { return hasher_; }
  ChallengeProvider& challenges() noexcept { return *challenges_; }
  std::size_t live_sessions() const;

 private:
  Session validate(const std::string& token);
  void unlock(std::optional<UuisId> actor, std::string_view user_code);

  Context& ctx_;
  PasswordHasher hasher_;
  std::unique_ptr<ChallengeProvider> challenges_;
  mutable std::mutex sessions_mutex_;
  std::unordered_map<std::string, Session> sessions_;
};

}  // namespace uuis
