#include "coregame/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <sstream>

#include "coregame/simulator.hpp"

namespace coregame {

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

int env_int(const char* name, int fallback) {
  auto v = env(name);
  if (!v) return fallback;
  try {
    return std::stoi(*v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Configuration, std::string(name) + " must be an integer", name);
  }
}

// Reads a JSONL file, dropping a torn final line left by a crash mid-write.
std::vector<std::string> read_lines_repairing(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  std::string text = read_text_file(path);
  if (!text.empty() && text.back() != '\n') {
    const auto cut = text.rfind('\n');
    text = cut == std::string::npos ? std::string{} : text.substr(0, cut + 1);
    write_text_file(path, text);
  }
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

HttpResponse json_response(int status, const Json& body) { return HttpResponse{status, "application/json", body.dump()}; }

HttpResponse error_response(int status, std::string_view code, const std::string& message, const std::string& field) {
  Json err{{"code", code}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  return json_response(status, Json{{"error", err}});
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(path);
  while (std::getline(in, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  if (!parts.empty() && parts.front() == "v1") parts.erase(parts.begin());
  return parts;
}

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    auto doc = Json::parse(body);
    if (!doc.is_object()) throw Error(ErrorCode::Validation, "request body must be a JSON object", "body");
    return doc;
  } catch (const Json::exception&) {
    throw Error(ErrorCode::Validation, "request body is not valid JSON", "body");
  }
}

std::string require_string(const Json& body, const char* field) {
  if (!body.contains(field) || !body[field].is_string()) {
    throw Error(ErrorCode::Validation, std::string(field) + " is required", field);
  }
  return body[field].get<std::string>();
}

Json result_json(const AttemptResult& r) {
  return Json{{"score", r.score},       {"total", r.total},   {"percentage", r.percentage},
              {"points", r.points},     {"passed", r.passed}};
}

Json surfaced_json(const std::vector<ElementEffect>& effects) {
  Json out = Json::array();
  for (const auto& e : effects) {
    if (e.surfaced) out.push_back(e.to_json());
  }
  return out;
}

Json feedback_json(const std::vector<FeedbackRecord>& records) {
  Json out = Json::array();
  for (const auto& f : records) out.push_back(f.to_json());
  return out;
}

std::vector<std::optional<std::string>> parse_answers(const Json& body) {
  if (!body.contains("answers") || !body["answers"].is_array()) {
    throw Error(ErrorCode::Validation, "answers must be an array", "answers");
  }
  std::vector<std::optional<std::string>> out;
  for (const auto& a : body["answers"]) {
    if (a.is_null()) {
      out.emplace_back();
    } else if (a.is_string()) {
      out.emplace_back(a.get<std::string>());
    } else {
      throw Error(ErrorCode::Validation, "each answer must be a string or null", "answers");
    }
  }
  return out;
}

bool staff(Role r) { return r == Role::Instructor || r == Role::Admin; }

Json outline(const CourseGraph& c) {
  Json topics = Json::array();
  for (const auto& t : c.topics) {
    Json lessons = Json::array();
    for (const auto& l : t.lessons) {
      Json quizzes = Json::array();
      for (const auto& q : l.quizzes) {
        quizzes.push_back({{"quiz_id", q.quiz_id},
                           {"title", q.title},
                           {"points_total", q.points_total},
                           {"questions", q.questions.size()},
                           {"activity_kind", to_string(q.activity_kind)},
                           {"time_limit_s", q.time_limit_s ? Json(*q.time_limit_s) : Json(nullptr)},
                           {"milestone", q.milestone}});
      }
      lessons.push_back({{"lesson_id", l.lesson_id}, {"title", l.title}, {"quizzes", quizzes}});
    }
    topics.push_back({{"topic_id", t.topic_id},
                      {"title", t.title},
                      {"gate_cost", t.gate_cost ? Json(*t.gate_cost) : Json(nullptr)},
                      {"lessons", lessons}});
  }
  return Json{{"course_id", c.course_id},
              {"title", c.title},
              {"pass_threshold_pct", c.pass_threshold_pct},
              {"total_steps", c.total_steps()},
              {"topics", topics}};
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  if (auto bind = env("COREGAME_BIND")) {
    const auto colon = bind->rfind(':');
    if (colon == std::string::npos) {
      c.host = *bind;
    } else {
      c.host = bind->substr(0, colon);
      try {
        c.port = std::stoi(bind->substr(colon + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::Configuration, "COREGAME_BIND port must be numeric", "COREGAME_BIND");
      }
    }
  }
  if (auto s = env("COREGAME_STORAGE")) c.storage = *s;
  c.session_ttl_s = env_int("COREGAME_SESSION_TTL", static_cast<int>(c.session_ttl_s));
  if (env("COREGAME_PASS_THRESHOLD")) c.pass_threshold = env_int("COREGAME_PASS_THRESHOLD", 80);
  c.data_dir = coregame::data_dir();
  c.pbkdf2_iterations = env_int("COREGAME_PBKDF2_ITERATIONS", c.pbkdf2_iterations);
  return c;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return 400;
    case ErrorCode::Auth: return 401;
    case ErrorCode::Forbidden:
    case ErrorCode::Access: return 403;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict:
    case ErrorCode::Precondition: return 409;
    case ErrorCode::Derivation:
    case ErrorCode::Configuration:
    case ErrorCode::Liveness:
    case ErrorCode::Replay: return 500;
  }
  return 500;
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  if (config_.data_dir.empty()) config_.data_dir = coregame::data_dir();
  EngineOptions options;
  options.pass_threshold_override = config_.pass_threshold;
  options.journal_sink = [this](const JournalEntry& entry) {
    std::lock_guard lk(storage_mu_);
    if (!journal_out_.is_open()) return;
    journal_out_ << entry.to_json().dump() << '\n';
    journal_out_.flush();
    if (!journal_out_) throw Error(ErrorCode::Configuration, "journal write failed", "storage");
  };
  engine_ = std::make_unique<Engine>(std::move(options));

  std::vector<std::filesystem::path> course_files;
  for (const auto& entry : std::filesystem::directory_iterator(config_.data_dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("course_") && entry.path().extension() == ".json") course_files.push_back(entry.path());
  }
  std::sort(course_files.begin(), course_files.end());
  if (course_files.empty()) {
    throw Error(ErrorCode::Configuration, "no course_*.json in " + config_.data_dir.string(), "data_dir");
  }
  for (const auto& f : course_files) engine_->add_course(CourseGraph::load(f));

  accounts_ = std::make_unique<AccountStore>(config_.session_ttl_s, config_.pbkdf2_iterations,
                                             [this](const UserAccount& account) {
                                               std::lock_guard lk(storage_mu_);
                                               if (!accounts_out_.is_open()) return;
                                               accounts_out_ << account.to_json().dump() << '\n';
                                               accounts_out_.flush();
                                               if (!accounts_out_) {
                                                 throw Error(ErrorCode::Configuration, "account write failed",
                                                             "storage");
                                               }
                                             });

  if (!config_.storage.empty()) {
    std::filesystem::create_directories(config_.storage);
    const auto accounts_path = config_.storage / "accounts.jsonl";
    const auto journal_path = config_.storage / "journal.jsonl";
    for (const auto& line : read_lines_repairing(accounts_path)) {
      accounts_->restore(UserAccount::from_json(Json::parse(line)));
    }
    std::vector<JournalEntry> entries;
    for (const auto& line : read_lines_repairing(journal_path)) entries.push_back(JournalEntry::from_json(Json::parse(line)));
    engine_->replay(entries);
    accounts_out_.open(accounts_path, std::ios::app);
    journal_out_.open(journal_path, std::ios::app);
    if (!accounts_out_ || !journal_out_) {
      throw Error(ErrorCode::Configuration, "cannot open storage in " + config_.storage.string(), "storage");
    }
  }
}

Service::~Service() = default;

Timestamp Service::now() const {
  if (config_.clock) return config_.clock();
  return Timestamp{std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count()};
}

HttpResponse Service::handle(const HttpRequest& request) {
  try {
    return dispatch(request);
  } catch (const Error& e) {
    return error_response(http_status(e.code()), to_string(e.code()), e.what(), e.field());
  } catch (const Json::exception& e) {
    return error_response(400, to_string(ErrorCode::Validation), std::string("malformed request: ") + e.what(), {});
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what(), {});
  }
}

HttpResponse Service::dispatch(const HttpRequest& req) {
  const auto parts = split_path(req.path);
  const auto& m = req.method;
  const Timestamp at = now();
  auto session = [&]() -> Session {
    constexpr std::string_view kBearer = "Bearer ";
    if (!req.authorization.starts_with(kBearer)) {
      throw Error(ErrorCode::Auth, "missing bearer token", "authorization");
    }
    return accounts_->authenticate(req.authorization.substr(kBearer.size()), at);
  };
  auto matches = [&](std::string_view method, std::initializer_list<std::string_view> pattern) {
    if (m != method || parts.size() != pattern.size()) return false;
    std::size_t i = 0;
    for (auto p : pattern) {
      if (p != "*" && parts[i] != p) return false;
      ++i;
    }
    return true;
  };

  if (matches("GET", {"health"})) return json_response(200, Json{{"status", "ok"}});

  if (matches("POST", {"register"})) {
    auto body = parse_body(req.body);
    Role role = role_from_string(body.value("role", "learner"));
    // The first account may claim any role; afterwards only admins create staff.
    if (role != Role::Learner && accounts_->size() > 0 && session().role != Role::Admin) {
      throw Error(ErrorCode::Forbidden, "only an admin may create staff accounts", "role");
    }
    auto account = accounts_->register_user(require_string(body, "user_name"), require_string(body, "user_mail"),
                                            require_string(body, "password"), role, at);
    return json_response(201, account.public_json());
  }

  if (matches("POST", {"login"})) {
    auto body = parse_body(req.body);
    std::string who = body.contains("user_name") ? require_string(body, "user_name") : require_string(body, "user_mail");
    auto s = accounts_->login(who, require_string(body, "password"), at);
    return json_response(200, Json{{"token", s.token},
                                   {"user_id", s.user_id},
                                   {"role", to_string(s.role)},
                                   {"expires_at", s.expires_at.seconds}});
  }

  if (matches("GET", {"courses"})) {
    session();
    Json out = Json::array();
    for (const auto& id : engine_->course_ids()) out.push_back({{"course_id", id}, {"title", engine_->course(id).title}});
    return json_response(200, out);
  }

  if (matches("GET", {"courses", "*"})) {
    session();
    return json_response(200, outline(engine_->course(parts[1])));
  }

  if (matches("POST", {"courses", "*", "enroll"})) {
    auto s = session();
    auto body = parse_body(req.body);
    const Instrument& instrument = Instrument::standard();
    std::map<int, Option> answers;
    if (body.contains("answers") && body["answers"].is_array()) {
      const auto& list = body["answers"];
      if (list.size() != instrument.items().size()) {
        throw Error(ErrorCode::Validation, "expected " + std::to_string(instrument.items().size()) + " answers",
                    "answers");
      }
      for (std::size_t i = 0; i < list.size(); ++i) {
        answers[instrument.items()[i].item_id] = option_from_string(list[i].get<std::string>());
      }
    } else if (body.contains("answers") && body["answers"].is_object()) {
      for (const auto& [id, v] : body["answers"].items()) {
        int item = 0;
        try {
          item = std::stoi(id);
        } catch (const std::exception&) {
          throw Error(ErrorCode::Validation, "answer keys must be item ids", "answers");
        }
        answers[item] = option_from_string(v.get<std::string>());
      }
    } else {
      throw Error(ErrorCode::Validation, "answers are required", "answers");
    }
    auto outcome = engine_->enroll(s.user_id, parts[1], answers, at);
    return json_response(201, Json{{"core", to_string(outcome.core)},
                                   {"active_elements", outcome.active},
                                   {"state", engine_->state_json(s.user_id, parts[1])}});
  }

  if (matches("GET", {"courses", "*", "state"})) {
    auto s = session();
    std::string learner = s.user_id;
    if (auto it = req.query.find("learner_id"); it != req.query.end() && it->second != s.user_id) {
      if (!staff(s.role)) throw Error(ErrorCode::Forbidden, "learners may read only their own state", "learner_id");
      learner = it->second;
    }
    return json_response(200, engine_->state_json(learner, parts[1]));
  }

  if (matches("GET", {"courses", "*", "nodes", "*"})) {
    auto s = session();
    auto v = engine_->view(s.user_id, parts[1], parts[3], at);
    Json body{{"node_id", v.content.node_id},
              {"title", v.content.title},
              {"content", v.content.content},
              {"alternate_paths", v.content.alternate_paths},
              {"variant", v.content.variant_tag ? Json(*v.content.variant_tag) : Json(nullptr)},
              {"effects", surfaced_json(v.effects)}};
    if (v.content.kind == NodeKind::Quiz) body["activity_kind"] = to_string(v.content.activity_kind);
    if (v.timer) body["timer"] = {{"started_at", v.timer->started_at.seconds}, {"deadline", v.timer->deadline.seconds}};
    return json_response(200, body);
  }

  if (matches("POST", {"quizzes", "*", "start"})) {
    auto s = session();
    const auto& course = engine_->course_of_quiz(parts[1]);
    auto v = engine_->view(s.user_id, course.course_id, parts[1], at);
    Json body{{"quiz_id", parts[1]},
              {"course_id", course.course_id},
              {"prompts", v.content.content},
              {"activity_kind", to_string(v.content.activity_kind)},
              {"effects", surfaced_json(v.effects)},
              {"timer", v.timer ? Json{{"started_at", v.timer->started_at.seconds},
                                       {"deadline", v.timer->deadline.seconds}}
                                : Json(nullptr)}};
    return json_response(200, body);
  }

  if (matches("POST", {"quizzes", "*", "attempts"})) {
    auto s = session();
    auto body = parse_body(req.body);
    const auto& quiz_id = parts[1];
    const auto& course = engine_->course_of_quiz(quiz_id);
    std::string learner = s.user_id;
    if (body.contains("learner_id")) {
      learner = require_string(body, "learner_id");
      if (learner != s.user_id && !staff(s.role)) {
        throw Error(ErrorCode::Forbidden, "learners may submit only their own attempts", "learner_id");
      }
    }
    int spent = 0;
    if (body.contains("time_spent_s")) {
      spent = body["time_spent_s"].get<int>();
    } else if (engine_->is_enrolled(learner, course.course_id)) {
      const auto state = engine_->enrollment(learner, course.course_id);
      if (auto it = state.last_accessed.find(quiz_id); it != state.last_accessed.end()) {
        spent = static_cast<int>(std::max<std::int64_t>(0, at.seconds - it->second.seconds));
      }
    }
    AttemptOutcome outcome;
    if (body.contains("scores")) {
      if (!staff(s.role)) throw Error(ErrorCode::Forbidden, "only instructors score essay items", "scores");
      outcome = engine_->score(learner, course.course_id, quiz_id, body["scores"].get<std::vector<int>>(), spent, at);
    } else if (body.value("expired", false)) {
      outcome = engine_->expire(learner, course.course_id, quiz_id, parse_answers(body), at);
    } else {
      outcome = engine_->attempt(learner, course.course_id, quiz_id, parse_answers(body), spent, at);
    }
    auto p = progress_fraction(engine_->enrollment(learner, course.course_id).steps);
    return json_response(201, Json{{"quiz_id", quiz_id},
                                   {"course_id", course.course_id},
                                   {"result", result_json(outcome.result)},
                                   {"completed", outcome.delta.completed},
                                   {"unlocked", outcome.delta.unlocked},
                                   {"gates_opened", outcome.delta.gates_opened},
                                   {"gates_closed", outcome.delta.gates_closed},
                                   {"progress", {{"completed", p.completed}, {"total", p.total}, {"percent", p.percent}}},
                                   {"effects", surfaced_json(outcome.effects)},
                                   {"feedback", feedback_json(outcome.feedback)}});
  }

  if (matches("GET", {"courses", "*", "leaderboard"})) {
    auto s = session();
    const auto& course_id = parts[1];
    if (!staff(s.role)) {
      auto active = engine_->active_elements(s.user_id, course_id);
      if (std::find(active.begin(), active.end(), elements::kCompetition) == active.end()) {
        throw Error(ErrorCode::Forbidden, "the leaderboard is not part of this learner's experience", "course_id");
      }
    }
    std::optional<Timestamp> as_of;
    if (auto it = req.query.find("as_of"); it != req.query.end()) {
      try {
        as_of = Timestamp{std::stoll(it->second)};
      } catch (const std::exception&) {
        throw Error(ErrorCode::Validation, "as_of must be epoch seconds", "as_of");
      }
    }
    Json rows = Json::array();
    for (const auto& r : engine_->leaderboard(course_id, as_of)) {
      auto account = accounts_->find(r.learner_id);
      rows.push_back({{"rank", r.rank},
                      {"learner_id", r.learner_id},
                      {"user_name", account ? Json(account->user_name) : Json(nullptr)},
                      {"points_total", r.points_total},
                      {"tie_key", r.tie_key.seconds}});
    }
    return json_response(200, Json{{"course_id", course_id}, {"rows", rows}});
  }

  if (matches("POST", {"courses", "*", "complete"})) {
    auto s = session();
    auto outcome = engine_->complete(s.user_id, parts[1], at);
    return json_response(200, Json{{"badge_id", outcome.award.badge_id},
                                   {"certificate_id", outcome.award.certificate_id},
                                   {"issued_at", outcome.award.issued_at.seconds},
                                   {"newly_issued", outcome.award.newly_issued},
                                   {"effects", surfaced_json(outcome.effects)}});
  }

  if (matches("POST", {"courses", "*", "evaluation"})) {
    auto s = session();
    auto body = parse_body(req.body);
    if (!body.contains("answers") || !body["answers"].is_object()) {
      throw Error(ErrorCode::Validation, "answers must map statement ids to ratings", "answers");
    }
    std::map<int, int> answers;
    for (const auto& [id, v] : body["answers"].items()) {
      int statement = 0;
      try {
        statement = std::stoi(id);
      } catch (const std::exception&) {
        throw Error(ErrorCode::Validation, "answer keys must be statement ids", "answers");
      }
      if (!v.is_number_integer()) throw Error(ErrorCode::Validation, "ratings must be integers", "answers");
      answers[statement] = v.get<int>();
    }
    engine_->evaluate(s.user_id, parts[1], answers, at);
    return json_response(201, Json{{"status", "recorded"}});
  }

  if (matches("GET", {"admin", "courses", "*", "logs.csv"})) {
    auto s = session();
    if (!staff(s.role)) throw Error(ErrorCode::Forbidden, "instructor or admin role required", "role");
    return HttpResponse{200, "text/csv", export_logs_csv(*engine_, parts[2])};
  }

  if (matches("GET", {"admin", "courses", "*", "report"})) {
    auto s = session();
    if (!staff(s.role)) throw Error(ErrorCode::Forbidden, "instructor or admin role required", "role");
    const auto& course_id = parts[2];
    std::vector<Participant> participants;
    for (const auto& learner : engine_->learners(course_id)) {
      auto e = engine_->enrollment(learner, course_id);
      participants.push_back(Participant{learner, e.core, std::nullopt, e.award_issued_at.has_value()});
    }
    auto responses = engine_->evaluations(course_id);
    return json_response(200, Json{{"course_id", course_id},
                                   {"cohort", cohort_summary(participants, responses).to_json()},
                                   {"evaluation", stats_report(responses)},
                                   {"attempts", engine_->attempt_log(course_id).size()}});
  }

  // Known path with the wrong method, or nothing at all.
  return error_response(404, to_string(ErrorCode::NotFound), "no route for " + m + " " + req.path, "path");
}

}  // namespace coregame
