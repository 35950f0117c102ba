#include "coregame/accounts.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <cctype>

namespace coregame {

namespace {

std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xf]);
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool valid_name(const std::string& name) {
  if (name.size() < 3 || name.size() > 64) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '.' || c == '-';
  });
}

bool valid_mail(const std::string& mail) {
  const auto at = mail.find('@');
  if (at == std::string::npos || at == 0 || mail.find('@', at + 1) != std::string::npos) return false;
  const auto dot = mail.find('.', at);
  if (dot == std::string::npos || dot == at + 1 || dot + 1 >= mail.size()) return false;
  return std::none_of(mail.begin(), mail.end(), [](unsigned char c) { return std::isspace(c) || std::iscntrl(c); });
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Learner: return "learner";
    case Role::Instructor: return "instructor";
    case Role::Admin: return "admin";
  }
  return "?";
}

Role role_from_string(std::string_view text) {
  if (text == "learner") return Role::Learner;
  if (text == "instructor") return Role::Instructor;
  if (text == "admin") return Role::Admin;
  throw Error(ErrorCode::Validation, "unknown role '" + std::string(text) + "'", "role");
}

Json UserAccount::to_json() const {
  return Json{{"user_id", user_id},   {"user_name", user_name},     {"user_mail", user_mail},
              {"role", to_string(role)}, {"salt", salt_hex},        {"hash", hash_hex},
              {"iterations", iterations}, {"created_at", created_at.seconds}};
}

UserAccount UserAccount::from_json(const Json& doc) {
  return UserAccount{doc.at("user_id").get<std::string>(),
                     doc.at("user_name").get<std::string>(),
                     doc.at("user_mail").get<std::string>(),
                     role_from_string(doc.at("role").get<std::string>()),
                     doc.at("salt").get<std::string>(),
                     doc.at("hash").get<std::string>(),
                     doc.at("iterations").get<int>(),
                     Timestamp{doc.at("created_at").get<std::int64_t>()}};
}

Json UserAccount::public_json() const {
  return Json{{"user_id", user_id}, {"user_name", user_name}, {"user_mail", user_mail}, {"role", to_string(role)}};
}

std::string random_hex(std::size_t bytes) {
  std::string buf(bytes, '\0');
  auto* p = reinterpret_cast<unsigned char*>(buf.data());
  if (RAND_bytes(p, static_cast<int>(bytes)) != 1) {
    throw Error(ErrorCode::Configuration, "random generator unavailable", "rand");
  }
  return to_hex(p, bytes);
}

std::string hash_password(std::string_view password, std::string_view salt_hex, int iterations) {
  unsigned char out[32];
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()),
                        reinterpret_cast<const unsigned char*>(salt_hex.data()), static_cast<int>(salt_hex.size()),
                        iterations, EVP_sha256(), sizeof out, out) != 1) {
    throw Error(ErrorCode::Configuration, "PBKDF2 failed", "password");
  }
  return to_hex(out, sizeof out);
}

AccountStore::AccountStore(std::int64_t session_ttl_s, int pbkdf2_iterations,
                           std::function<void(const UserAccount&)> sink)
    : ttl_(session_ttl_s), iterations_(pbkdf2_iterations), sink_(std::move(sink)) {
  if (ttl_ <= 0) throw Error(ErrorCode::Configuration, "session TTL must be positive", "session_ttl");
  if (iterations_ < 1) throw Error(ErrorCode::Configuration, "PBKDF2 iterations must be positive", "iterations");
}

UserAccount AccountStore::register_user(const std::string& user_name, const std::string& user_mail,
                                        const std::string& password, Role role, Timestamp now) {
  if (!valid_name(user_name)) {
    throw Error(ErrorCode::Validation, "user_name must be 3-64 characters of letters, digits, '_', '.', '-'",
                "user_name");
  }
  if (!valid_mail(user_mail)) throw Error(ErrorCode::Validation, "malformed user_mail", "user_mail");
  if (password.size() < 8) throw Error(ErrorCode::Validation, "password must have at least 8 characters", "password");

  UserAccount account;
  account.user_name = user_name;
  account.user_mail = user_mail;
  account.role = role;
  account.salt_hex = random_hex(16);
  account.iterations = iterations_;
  account.hash_hex = hash_password(password, account.salt_hex, iterations_);
  account.created_at = now;

  std::lock_guard lk(mu_);
  if (id_by_name_.contains(lower(user_name))) throw Error(ErrorCode::Conflict, "user_name already taken", "user_name");
  if (id_by_mail_.contains(lower(user_mail))) throw Error(ErrorCode::Conflict, "user_mail already registered", "user_mail");
  account.user_id = std::to_string(next_id_);
  if (sink_) sink_(account);
  ++next_id_;
  id_by_name_[lower(user_name)] = account.user_id;
  id_by_mail_[lower(user_mail)] = account.user_id;
  by_id_[account.user_id] = account;
  return account;
}

void AccountStore::restore(const UserAccount& account) {
  std::lock_guard lk(mu_);
  if (by_id_.contains(account.user_id) || id_by_name_.contains(lower(account.user_name)) ||
      id_by_mail_.contains(lower(account.user_mail))) {
    throw Error(ErrorCode::Conflict, "duplicate stored account " + account.user_id, "user_id");
  }
  id_by_name_[lower(account.user_name)] = account.user_id;
  id_by_mail_[lower(account.user_mail)] = account.user_id;
  by_id_[account.user_id] = account;
  next_id_ = std::max(next_id_, std::stoi(account.user_id) + 1);
}

Session AccountStore::login(const std::string& name_or_mail, const std::string& password, Timestamp now) {
  UserAccount account;
  {
    std::lock_guard lk(mu_);
    const auto key = lower(name_or_mail);
    auto it = id_by_name_.find(key);
    if (it == id_by_name_.end()) it = id_by_mail_.find(key);
    if (it == id_by_mail_.end()) throw Error(ErrorCode::Auth, "invalid credentials", "credential");
    account = by_id_.at(it->second);
  }
  const auto hash = hash_password(password, account.salt_hex, account.iterations);
  if (hash.size() != account.hash_hex.size() ||
      CRYPTO_memcmp(hash.data(), account.hash_hex.data(), hash.size()) != 0) {
    throw Error(ErrorCode::Auth, "invalid credentials", "credential");
  }
  Session s{random_hex(32), account.user_id, account.role, Timestamp{now.seconds + ttl_}};
  std::lock_guard lk(mu_);
  sessions_[s.token] = s;
  return s;
}

Session AccountStore::authenticate(const std::string& token, Timestamp now) const {
  std::lock_guard lk(mu_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) throw Error(ErrorCode::Auth, "unknown session token", "authorization");
  if (now >= it->second.expires_at) throw Error(ErrorCode::Auth, "session expired", "authorization");
  return it->second;
}

void AccountStore::logout(const std::string& token) {
  std::lock_guard lk(mu_);
  sessions_.erase(token);
}

std::optional<UserAccount> AccountStore::find(const std::string& user_id) const {
  std::lock_guard lk(mu_);
  auto it = by_id_.find(user_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t AccountStore::size() const {
  std::lock_guard lk(mu_);
  return by_id_.size();
}

}  // namespace coregame
