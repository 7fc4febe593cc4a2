#include "uuis/auth.hpp"

#include <sodium.h>

#include <cctype>
#include <stdexcept>

namespace uuis {
namespace {

constexpr std::size_t kSaltBytes = 16;
constexpr std::size_t kHashBytes = 16;
constexpr int kB64 = sodium_base64_VARIANT_ORIGINAL_NO_PADDING;

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

std::string b64(const unsigned char* data, std::size_t len) {
  std::string out(sodium_base64_ENCODED_LEN(len, kB64), '\0');
  sodium_bin2base64(out.data(), out.size(), data, len, kB64);
  out.resize(std::char_traits<char>::length(out.c_str()));
  return out;
}

bool unb64(std::string_view text, unsigned char* out, std::size_t len) {
  std::size_t written = 0;
  return sodium_base642bin(out, len, text.data(), text.size(), nullptr, &written, nullptr, kB64) == 0 &&
         written == len;
}

}  // namespace

// ---------------------------------------------------------------------------

PasswordHasher::PasswordHasher(unsigned long long opslimit, std::size_t memlimit)
    : opslimit_(opslimit), memlimit_(memlimit) {
  ensure_sodium();
}

std::string PasswordHasher::hash(std::string_view password) const {
  unsigned char salt[kSaltBytes];
  unsigned char out[kHashBytes];
  randombytes_buf(salt, sizeof salt);
  if (crypto_pwhash(out, sizeof out, password.data(), password.size(), salt, opslimit_, memlimit_,
                    crypto_pwhash_ALG_ARGON2ID13) != 0) {
    throw std::runtime_error("password hashing ran out of memory");
  }
  return b64(salt, sizeof salt) + "$" + b64(out, sizeof out);
}

bool PasswordHasher::verify(std::string_view password, std::string_view digest) const {
  const auto sep = digest.find('$');
  if (sep == std::string_view::npos) return false;
  unsigned char salt[kSaltBytes];
  unsigned char expected[kHashBytes];
  if (!unb64(digest.substr(0, sep), salt, sizeof salt) ||
      !unb64(digest.substr(sep + 1), expected, sizeof expected)) {
    return false;
  }
  unsigned char actual[kHashBytes];
  if (crypto_pwhash(actual, sizeof actual, password.data(), password.size(), salt, opslimit_,
                    memlimit_, crypto_pwhash_ALG_ARGON2ID13) != 0) {
    return false;
  }
  return sodium_memcmp(actual, expected, sizeof actual) == 0;
}

bool password_meets_policy(std::string_view password) {
  if (password.size() < 8) return false;
  bool lower = false, upper = false, digit = false, other = false;
  for (unsigned char c : password) {
    if (std::islower(c)) lower = true;
    else if (std::isupper(c)) upper = true;
    else if (std::isdigit(c)) digit = true;
    else other = true;
  }
  return lower + upper + digit + other >= 2;
}

std::string generate_session_token() {
  ensure_sodium();
  unsigned char raw[16];
  randombytes_buf(raw, sizeof raw);
  char hex[33];
  sodium_bin2hex(hex, sizeof hex, raw, sizeof raw);
  return hex;
}

// ---------------------------------------------------------------------------

Challenge ArithmeticChallenge::issue() {
  std::lock_guard lock(mutex_);
  std::uniform_int_distribution<int> d(1, 20);
  const int a = d(rng_), b = d(rng_);
  Challenge c{generate_session_token(), "What is " + std::to_string(a) + " + " + std::to_string(b) + "?"};
  answers_[c.id] = a + b;
  return c;
}

bool ArithmeticChallenge::verify(const std::string& id, const std::string& answer) {
  std::lock_guard lock(mutex_);
  auto it = answers_.find(id);
  if (it == answers_.end()) return false;
  const int expected = it->second;
  answers_.erase(it);
  return answer == std::to_string(expected);
}

// ---------------------------------------------------------------------------

Auth::Auth(Context& ctx, std::unique_ptr<ChallengeProvider> challenges)
    : ctx_(ctx),
      hasher_(ctx.config().kdf_opslimit, ctx.config().kdf_memlimit),
      challenges_(challenges ? std::move(challenges) : std::make_unique<ArithmeticChallenge>()) {}

Session Auth::login(std::string_view user_code, std::string_view password,
                    const std::optional<ChallengeAnswer>& challenge) {
  const auto threshold = ctx_.config().lockout_threshold;

  auto challenge_needed = [&](const Database& db, const User& u) {
    return u.login_attempts >= 1 ||
           (ctx_.config().challenge_elevated && to_int(user_level(db, u.user_id)) >= 2);
  };

  // Challenges are consumed on verification, so check once, outside the
  // (retryable) transaction.
  std::optional<bool> challenge_passed;
  {
    auto snap = ctx_.store().snapshot();
    const User* u = find_user_by_code(snap.db(), user_code);
    if (u && u->login_attempts < threshold && challenge_needed(snap.db(), *u) && challenge) {
      challenge_passed = challenges_->verify(challenge->id, challenge->answer);
    }
  }

  enum class Outcome { Unknown, Locked, NeedChallenge, Failed, Succeeded };
  struct Attempt {
    Outcome outcome;
    User user;
  };

  const auto attempt = ctx_.run("login", {{"user_code", user_code}}, [&](Transaction& txn) {
    const User* found = find_user_by_code(txn.db(), user_code);
    if (!found) return Attempt{Outcome::Unknown, {}};
    User user = *found;
    if (user.login_attempts >= threshold) return Attempt{Outcome::Locked, user};

    bool ok = true;
    if (challenge_needed(txn.db(), user)) {
      if (!challenge_passed) return Attempt{Outcome::NeedChallenge, user};
      ok = *challenge_passed;
    }
    ok = ok && hasher_.verify(password, user.password);

    if (!ok) {
      user.login_attempts += 1;
      txn.put(user);
      txn.log(user.user_id, user.user_id, event::Login,
              user.login_attempts >= threshold
                  ? "failed attempt " + std::to_string(user.login_attempts) + "; account locked"
                  : "failed attempt " + std::to_string(user.login_attempts));
      return Attempt{Outcome::Failed, user};
    }
    user.login_attempts = 0;
    txn.put(user);
    txn.log(user.user_id, user.user_id, event::Login, "login");
    return Attempt{Outcome::Succeeded, user};
  });

  switch (attempt.outcome) {
    case Outcome::Unknown:
      fail(ErrorCode::InvalidCredentials, "invalid username or password");
    case Outcome::Locked:
      fail(ErrorCode::AccountLocked, "account locked; an administrator must unlock it");
    case Outcome::NeedChallenge: {
      auto c = challenges_->issue();
      fail(ErrorCode::ChallengeRequired, "answer the challenge to continue",
           {{"challenge_id", c.id}, {"question", c.question}});
    }
    case Outcome::Failed: {
      const auto left = threshold - std::min(threshold, attempt.user.login_attempts);
      fail(ErrorCode::InvalidCredentials, "invalid username or password",
           {{"attempts_remaining", left}});
    }
    case Outcome::Succeeded:
      break;
  }

  auto principal = resolve_principal(ctx_.store().snapshot().db(), attempt.user.user_id);
  Session s;
  s.token = generate_session_token();
  s.user_id = attempt.user.user_id;
  s.effective_mask = principal.mask;
  s.level = principal.level;
  s.created_at = ctx_.now();
  s.last_activity = s.created_at;
  s.password_change_required = attempt.user.must_change_password;
  std::lock_guard lock(sessions_mutex_);
  sessions_[s.token] = s;
  return s;
}

Session Auth::validate(const std::string& token) {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "no such session");
  const auto now = ctx_.now();
  if (now - it->second.last_activity > ctx_.config().session_timeout) {
    sessions_.erase(it);
    fail(ErrorCode::SessionExpired, "session expired after inactivity");
  }
  it->second.last_activity = std::max(it->second.last_activity, now);
  return it->second;
}

Session Auth::touch(const std::string& token) { return validate(token); }

Principal Auth::authorize(const std::string& token, bool allow_pending_password_change) {
  auto session = validate(token);
  if (session.password_change_required && !allow_pending_password_change) {
    fail(ErrorCode::PasswordChangeRequired, "change your password before continuing");
  }
  auto principal = resolve_principal(ctx_.store().snapshot().db(), session.user_id);
  std::lock_guard lock(sessions_mutex_);
  if (auto it = sessions_.find(token); it != sessions_.end()) {
    it->second.effective_mask = principal.mask;
    it->second.level = principal.level;
  }
  return principal;
}

void Auth::logout(const std::string& token) {
  Session s;
  {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(token);
    if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "no such session");
    s = it->second;
    sessions_.erase(it);
  }
  ctx_.run("logout", nullptr, [&](Transaction& txn) {
    txn.log(s.user_id, s.user_id, event::Logout, "logout");
  });
}

void Auth::change_password(const std::string& token, std::string_view old_password,
                           std::string_view new1, std::string_view new2) {
  const auto session = validate(token);
  ctx_.run("change_password", nullptr, [&](Transaction& txn) {
    User user = txn.get<User>(session.user_id);
    if (!hasher_.verify(old_password, user.password)) {
      fail(ErrorCode::OldPasswordMismatch, "old password is incorrect");
    }
    if (new1 != new2) fail(ErrorCode::NewPasswordsDiffer, "new passwords do not match");
    if (!password_meets_policy(new1)) {
      fail(ErrorCode::WeakPassword, "password needs 8+ characters from 2+ character classes");
    }
    user.password = hasher_.hash(new1);
    user.must_change_password = false;
    user.date_modified = txn.now();
    txn.put(user);
    txn.log(user.user_id, user.user_id, event::Update, "password changed");
  });
  std::lock_guard lock(sessions_mutex_);
  for (auto& [tok, s] : sessions_) {
    if (s.user_id == session.user_id) s.password_change_required = false;
  }
}

void Auth::unlock(std::optional<UuisId> actor, std::string_view user_code) {
  ctx_.run("unlock_user", {{"user_code", user_code}}, [&](Transaction& txn) {
    const User* found = find_user_by_code(txn.db(), user_code);
    if (!found) fail(ErrorCode::NotFound, "no user '" + std::string(user_code) + "'");
    User user = *found;
    user.login_attempts = 0;
    user.date_modified = txn.now();
    txn.put(user);
    txn.log(actor, user.user_id, event::Update, "unlocked");
  });
}

void Auth::unlock_user(const std::string& token, std::string_view user_code) {
  const auto who = authorize(token);
  require(who, Permission::ManageUsers);
  unlock(who.user_id, user_code);
}

void Auth::unlock_user_direct(std::string_view user_code) { unlock(std::nullopt, user_code); }

LockoutState Auth::lockout_state(std::string_view user_code) const {
  auto snap = ctx_.store().snapshot();
  const User* u = find_user_by_code(snap.db(), user_code);
  if (!u) fail(ErrorCode::NotFound, "no user '" + std::string(user_code) + "'");
  return LockoutState{u->user_id, u->login_attempts,
                      u->login_attempts >= ctx_.config().lockout_threshold};
}

std::size_t Auth::live_sessions() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

}  // namespace uuis
