#pragma once

// User accounts, salted PBKDF2 credentials and bearer sessions.

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "coregame/common.hpp"
#include "coregame/io.hpp"

namespace coregame {

enum class Role { Learner, Instructor, Admin };
std::string_view to_string(Role role);
Role role_from_string(std::string_view text);  // throws Validation

struct UserAccount {
  std::string user_id;
  std::string user_name;
  std::string user_mail;
  Role role = Role::Learner;
  std::string salt_hex;
  std::string hash_hex;
  int iterations = 0;
  Timestamp created_at;

  /// Full record including the credential hash, for storage.
  Json to_json() const;
  static UserAccount from_json(const Json& doc);
  /// Without credentials, for API responses.
  Json public_json() const;
};

struct Session {
  std::string token;
  std::string user_id;
  Role role = Role::Learner;
  Timestamp expires_at;
};

/// PBKDF2-HMAC-SHA256, hex encoded.
std::string hash_password(std::string_view password, std::string_view salt_hex, int iterations);
std::string random_hex(std::size_t bytes);

class AccountStore {
 public:
  AccountStore(std::int64_t session_ttl_s, int pbkdf2_iterations,
               std::function<void(const UserAccount&)> sink = {});

  /// Throws Validation on malformed input and Conflict on a taken name or mail.
  UserAccount register_user(const std::string& user_name, const std::string& user_mail, const std::string& password,
                            Role role, Timestamp now);
  /// Re-adds a persisted account without calling the sink.
  void restore(const UserAccount& account);

  /// Accepts the user name or mail. Throws Auth on any mismatch.
  Session login(const std::string& name_or_mail, const std::string& password, Timestamp now);
  /// Throws Auth for unknown or expired tokens.
  Session authenticate(const std::string& token, Timestamp now) const;
  void logout(const std::string& token);

  std::optional<UserAccount> find(const std::string& user_id) const;
  std::size_t size() const;

 private:
  std::int64_t ttl_;
  int iterations_;
  std::function<void(const UserAccount&)> sink_;
  mutable std::mutex mu_;
  std::map<std::string, UserAccount> by_id_;
  std::map<std::string, std::string> id_by_name_;
  std::map<std::string, std::string> id_by_mail_;
  std::map<std::string, Session> sessions_;
  int next_id_ = 1;
};

}  // namespace coregame
