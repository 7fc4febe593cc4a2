#include <doctest.h>

#include <sodium.h>

#include <random>

#include "support.hpp"

using namespace uuis;
using namespace std::chrono_literals;
using uuis::test::error_of;
using uuis::test::Fixture;
using uuis::test::kPassword;

namespace {

// Accepts the answer "right" for any issued challenge.
class FixedChallenge final : public ChallengeProvider {
 public:
  Challenge issue() override { return {"c" + std::to_string(++n_), "say right"}; }
  bool verify(const std::string&, const std::string& answer) override { return answer == "right"; }

 private:
  int n_ = 0;
};

Fixture with_fixed_challenge() { return Fixture(nullptr, std::make_unique<FixedChallenge>()); }

}  // namespace

TEST_CASE("password digests are salted Argon2id") {
  PasswordHasher h(crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN);
  const auto d1 = h.hash("Secret123");
  const auto d2 = h.hash("Secret123");
  CHECK(d1 != d2);
  CHECK(d1.size() == 45);
  CHECK(d1.find("Secret123") == std::string::npos);
  CHECK(h.verify("Secret123", d1));
  CHECK_FALSE(h.verify("secret123", d1));
  CHECK_FALSE(h.verify("Secret123", "garbage"));
}

TEST_CASE("password policy") {
  CHECK(password_meets_policy("abcdefg1"));
  CHECK(password_meets_policy("Np9!xxxx"));
  CHECK_FALSE(password_meets_policy("abcdefgh"));
  CHECK_FALSE(password_meets_policy("Ab1!"));
  CHECK_FALSE(password_meets_policy(""));
}

TEST_CASE("login issues a session and logs the event") {
  Fixture f;
  f.user("alice", PermissionLevel::L0, university_id());
  const auto s = f.sys->auth.login("alice", kPassword);
  CHECK(s.token.size() == 32);
  CHECK(s.level == PermissionLevel::L0);
  CHECK(s.effective_mask == default_mask(PermissionLevel::L0));
  const auto logs = f.store().snapshot().logs();
  CHECK(logs.back().event_type == "LOGIN");
  CHECK(logs.back().item_id == s.user_id);
}

TEST_CASE("unknown users and wrong passwords are indistinguishable") {
  Fixture f;
  f.user("alice", PermissionLevel::L0, university_id());
  CHECK(error_of([&] { f.sys->auth.login("nobody", "x"); }) == ErrorCode::InvalidCredentials);
  CHECK(error_of([&] { f.sys->auth.login("alice", "wrong"); }) == ErrorCode::InvalidCredentials);
}

TEST_CASE("the third failure locks the account until an admin unlocks it") {
  auto f = with_fixed_challenge();
  f.user("bob", PermissionLevel::L0, university_id());
  auto& auth = f.sys->auth;
  CHECK(error_of([&] { auth.login("bob", "bad"); }) == ErrorCode::InvalidCredentials);
  CHECK(error_of([&] { auth.login("bob", "bad"); }) == ErrorCode::ChallengeRequired);
  CHECK(auth.lockout_state("bob").failed_attempts == 1);
  CHECK(error_of([&] { auth.login("bob", "bad", ChallengeAnswer{"c1", "right"}); }) == ErrorCode::InvalidCredentials);
  CHECK(error_of([&] { auth.login("bob", "bad", ChallengeAnswer{"c2", "right"}); }) == ErrorCode::InvalidCredentials);
  CHECK(auth.lockout_state("bob").locked);
  CHECK(error_of([&] { auth.login("bob", kPassword, ChallengeAnswer{"c3", "right"}); }) == ErrorCode::AccountLocked);
  CHECK(auth.lockout_state("bob").failed_attempts == 3);

  f.clock->advance(24h);
  CHECK(auth.lockout_state("bob").locked);

  f.user("ivy", PermissionLevel::L0, university_id());
  CHECK(error_of([&] { auth.unlock_user(f.login("ivy"), "bob"); }) == ErrorCode::PermissionDenied);
  auth.unlock_user(f.relogin_admin(), "bob");
  CHECK(auth.lockout_state("bob").failed_attempts == 0);
  CHECK_NOTHROW(auth.login("bob", kPassword));
}

TEST_CASE("a wrong challenge answer counts as a failed attempt") {
  auto f = with_fixed_challenge();
  f.user("carol", PermissionLevel::L0, university_id());
  auto& auth = f.sys->auth;
  CHECK(error_of([&] { auth.login("carol", "bad"); }) == ErrorCode::InvalidCredentials);
  CHECK(error_of([&] { auth.login("carol", kPassword, ChallengeAnswer{"c1", "wrong"}); }) ==
        ErrorCode::InvalidCredentials);
  CHECK(auth.lockout_state("carol").failed_attempts == 2);
  CHECK_NOTHROW(auth.login("carol", kPassword, ChallengeAnswer{"c2", "right"}));
  CHECK(auth.lockout_state("carol").failed_attempts == 0);
}

TEST_CASE("elevated accounts are challenged on every login") {
  Fixture f([](ServiceConfig& c) { c.challenge_elevated = true; }, std::make_unique<FixedChallenge>());
  f.user("dean", PermissionLevel::L3, university_id());
  f.user("tech", PermissionLevel::L1, university_id());
  CHECK(error_of([&] { f.sys->auth.login("dean", kPassword); }) == ErrorCode::ChallengeRequired);
  CHECK_NOTHROW(f.sys->auth.login("dean", kPassword, ChallengeAnswer{"c1", "right"}));
  CHECK_NOTHROW(f.sys->auth.login("tech", kPassword));
}

TEST_CASE("arithmetic challenges are single-use") {
  ArithmeticChallenge c;
  const auto ch = c.issue();
  const auto plus = ch.question.find(" + ");
  const int a = std::stoi(ch.question.substr(8, plus - 8));
  const int b = std::stoi(ch.question.substr(plus + 3));
  CHECK(c.verify(ch.id, std::to_string(a + b)));
  CHECK_FALSE(c.verify(ch.id, std::to_string(a + b)));
}

TEST_CASE("sessions expire after thirty minutes of inactivity") {
  Fixture f;
  f.user("dave", PermissionLevel::L0, university_id());
  const auto token = f.login("dave");
  f.clock->advance(29min + 59s);
  CHECK_NOTHROW(f.sys->auth.authorize(token));
  f.clock->advance(30min);
  CHECK_NOTHROW(f.sys->auth.authorize(token));  // exactly at the limit
  f.clock->advance(30min + 1s);
  CHECK(error_of([&] { f.sys->auth.authorize(token); }) == ErrorCode::SessionExpired);
  CHECK(error_of([&] { f.sys->auth.authorize(token); }) == ErrorCode::UnknownSession);
}

TEST_CASE("logout ends the session") {
  Fixture f;
  f.user("erin", PermissionLevel::L0, university_id());
  const auto token = f.login("erin");
  f.sys->auth.logout(token);
  CHECK(error_of([&] { f.sys->auth.authorize(token); }) == ErrorCode::UnknownSession);
  CHECK(f.store().snapshot().logs().back().event_type == "LOGOUT");
}

TEST_CASE("change password checks old, match and policy") {
  Fixture f;
  f.user("fay", PermissionLevel::L0, university_id());
  const auto token = f.login("fay");
  auto& auth = f.sys->auth;
  CHECK(error_of([&] { auth.change_password(token, "nope", "NewPass1!", "NewPass1!"); }) ==
        ErrorCode::OldPasswordMismatch);
  CHECK(error_of([&] { auth.change_password(token, kPassword, "NewPass1!", "NewPass2!"); }) ==
        ErrorCode::NewPasswordsDiffer);
  CHECK(error_of([&] { auth.change_password(token, kPassword, "short", "short"); }) == ErrorCode::WeakPassword);
  auth.change_password(token, kPassword, "NewPass1!", "NewPass1!");
  CHECK_NOTHROW(auth.login("fay", "NewPass1!"));
  CHECK(error_of([&] { auth.login("fay", kPassword); }) == ErrorCode::InvalidCredentials);
}

TEST_CASE("new accounts must change the initial password first") {
  Fixture f;
  UserImportRow row{"gus", "Gus", "G", "gus@example.edu", "1990-02-03", "Staff", "UNIV", "Initial1!"};
  f.sys->directory.create_user(f.admin, row);
  const auto s = f.sys->auth.login("gus", "Initial1!");
  CHECK(s.password_change_required);
  CHECK(error_of([&] { f.sys->assets.view_assets(s.token); }) == ErrorCode::PasswordChangeRequired);
  f.sys->auth.change_password(s.token, "Initial1!", "Changed1!", "Changed1!");
  CHECK_NOTHROW(f.sys->assets.view_assets(s.token));
}

TEST_CASE("authorize reflects role changes immediately") {
  Fixture f;
  const auto uid = f.user("hal", PermissionLevel::L1, university_id());
  const auto token = f.login("hal");
  CHECK(f.sys->auth.authorize(token).level == PermissionLevel::L1);
  f.seed([&](Transaction& txn) {
    txn.table<UserRole>().for_each([&](const UserRole& r) {
      if (r.user_id == uid) {
        auto copy = r;
        copy.status = RoleStatus::Dropped;
        txn.put(copy);
      }
    });
  });
  const auto who = f.sys->auth.authorize(token);
  CHECK(who.mask.empty());
  CHECK(who.level == PermissionLevel::L0);
}

TEST_CASE("lockout property over random attempt sequences") {
  auto f = with_fixed_challenge();
  f.user("zed", PermissionLevel::L0, university_id());
  auto& auth = f.sys->auth;
  std::mt19937 rng(99);
  for (int seq = 0; seq < 300; ++seq) {
    auth.unlock_user_direct("zed");
    std::uint32_t model = 0;
    for (int step = 0; step < 8; ++step) {
      const int kind = static_cast<int>(rng() % 4);  // 0 good, 1 bad, 2 good w/o challenge, 3 unlock
      if (kind == 3) {
        auth.unlock_user_direct("zed");
        model = 0;
        continue;
      }
      const bool good = kind != 1;
      std::optional<ChallengeAnswer> ch;
      if (kind != 2) ch = ChallengeAnswer{"x", "right"};
      const auto err = error_of([&] { auth.login("zed", good ? kPassword : "bad", ch); });
      if (model >= 3) {
        CHECK(err == ErrorCode::AccountLocked);
      } else if (model >= 1 && !ch) {
        CHECK(err == ErrorCode::ChallengeRequired);
      } else if (good) {
        CHECK_FALSE(err.has_value());
        model = 0;
      } else {
        CHECK(err == ErrorCode::InvalidCredentials);
        ++model;
      }
      CHECK(auth.lockout_state("zed").failed_attempts == model);
      CHECK(auth.lockout_state("zed").locked == (model >= 3));
    }
  }
}
