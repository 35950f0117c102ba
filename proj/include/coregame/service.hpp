#pragma once

// HTTP-facing service: routing, auth and durable storage over the engine.

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "coregame/accounts.hpp"
#include "coregame/engine.hpp"

namespace coregame {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Directory holding journal.jsonl and accounts.jsonl; empty keeps
  /// everything in memory.
  std::filesystem::path storage;
  std::int64_t session_ttl_s = 3600;
  std::optional<int> pass_threshold;
  /// Courses are loaded from course_*.json here.
  std::filesystem::path data_dir;
  int pbkdf2_iterations = 100000;
  std::function<Timestamp()> clock;

  /// COREGAME_BIND (host:port), COREGAME_STORAGE, COREGAME_SESSION_TTL,
  /// COREGAME_PASS_THRESHOLD, COREGAME_DATA, COREGAME_PBKDF2_ITERATIONS.
  static ServiceConfig from_env();
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  /// Raw Authorization header value ("Bearer <token>").
  std::string authorization;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

int http_status(ErrorCode code);

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  /// Transport-independent entry point; never throws.
  HttpResponse handle(const HttpRequest& request);

  Engine& engine() { return *engine_; }
  AccountStore& accounts() { return *accounts_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Route;
  HttpResponse dispatch(const HttpRequest& request);
  Timestamp now() const;

  ServiceConfig config_;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<AccountStore> accounts_;
  std::mutex storage_mu_;
  std::ofstream journal_out_;
  std::ofstream accounts_out_;
};

/// Blocking HTTP server over cpp-httplib.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  bool listen_after_bind();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace coregame
