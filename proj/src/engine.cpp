#include "coregame/engine.hpp"

#include <algorithm>

namespace coregame {

namespace {

Json answers_to_json(const std::vector<std::optional<std::string>>& answers) {
  Json out = Json::array();
  for (const auto& a : answers) out.push_back(a ? Json(*a) : Json(nullptr));
  return out;
}

std::vector<std::optional<std::string>> answers_from_json(const Json& doc) {
  std::vector<std::optional<std::string>> out;
  for (const auto& a : doc) out.push_back(a.is_null() ? std::nullopt : std::optional<std::string>(a.get<std::string>()));
  return out;
}

EventPayload step_payload(const std::string& node_id, StepCounter steps) {
  EventPayload p;
  p.node_id = node_id;
  p.steps = steps;
  return p;
}

bool has(const std::vector<ElementId>& active, const ElementId& id) {
  return std::find(active.begin(), active.end(), id) != active.end();
}

}  // namespace

Json JournalEntry::to_json() const {
  return Json{{"seq", seq},         {"enrollment", enrollment}, {"enrollment_seq", enrollment_seq},
              {"at", at.seconds},   {"command", command},       {"args", args}};
}

JournalEntry JournalEntry::from_json(const Json& doc) {
  try {
    return JournalEntry{doc.at("seq").get<std::uint64_t>(),
                        doc.at("enrollment").get<std::string>(),
                        doc.at("enrollment_seq").get<std::uint64_t>(),
                        Timestamp{doc.at("at").get<std::int64_t>()},
                        doc.at("command").get<std::string>(),
                        doc.value("args", Json::object())};
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Replay, std::string("malformed journal entry: ") + e.what(), "journal");
  }
}

std::string enrollment_key(const std::string& learner_id, const std::string& course_id) {
  return learner_id + "@" + course_id;
}

struct Engine::CourseData {
  CourseGraph graph;
  // Guarded by commit_mu_.
  AttemptLog log;
  Leaderboard board;
  std::vector<EvaluationResponse> evaluations;
  std::vector<std::string> learners;
};

struct Engine::Enrollment {
  std::mutex mu;
  std::string key;
  CourseData* course = nullptr;
  LearnerEnrollment state;
  GamificationState game;
  TimerService timers;
  std::vector<ElementId> active;
  std::uint64_t seq = 0;
  Timestamp last_at;
  int events = 0;
  bool evaluated = false;
  std::vector<ElementEffect> effects;
  std::vector<FeedbackRecord> feedback;
};

namespace {

// Mutable copy of one enrollment's state. Commands work on it and the
// engine swaps it in only after the journal accepted the command.
struct Work {
  LearnerEnrollment state;
  GamificationState game;
  TimerService timers;
  int events = 0;
  std::vector<ElementEffect> effects;
  std::vector<FeedbackRecord> feedback;
  std::vector<std::pair<int, Timestamp>> board;
};

}  // namespace

Engine::Engine(EngineOptions options) : options_(std::move(options)) {
  if (!options_.email) options_.email = std::make_shared<NullEmailTransport>();
}

Engine::~Engine() = default;

const Instrument& Engine::instrument() const {
  return options_.instrument ? *options_.instrument : Instrument::standard();
}
const BadgeCatalog& Engine::badges() const { return options_.badges ? *options_.badges : BadgeCatalog::standard(); }
const ChannelRouting& Engine::routing() const {
  return options_.routing ? *options_.routing : ChannelRouting::standard();
}
const Questionnaire& Engine::questionnaire() const {
  return options_.questionnaire ? *options_.questionnaire : Questionnaire::standard();
}

void Engine::add_course(CourseGraph course) {
  if (options_.pass_threshold_override) course.pass_threshold_pct = *options_.pass_threshold_override;
  course.validate();
  std::unique_lock lk(registry_mu_);
  if (courses_.contains(course.course_id)) {
    throw Error(ErrorCode::Conflict, "course " + course.course_id + " already loaded", "course_id");
  }
  for (const auto& [id, other] : courses_) {
    for (const auto& node : course.node_ids()) {
      if (other->graph.find(node)) {
        throw Error(ErrorCode::Conflict, "node id '" + node + "' already used by course " + id, "node_id");
      }
    }
  }
  auto data = std::make_unique<CourseData>();
  data->log = AttemptLog(course.pass_threshold_pct);
  data->graph = std::move(course);
  auto id = data->graph.course_id;
  courses_.emplace(std::move(id), std::move(data));
}

Engine::CourseData& Engine::course_data(const std::string& course_id) const {
  std::shared_lock lk(registry_mu_);
  auto it = courses_.find(course_id);
  if (it == courses_.end()) throw Error(ErrorCode::NotFound, "unknown course " + course_id, "course_id");
  return *it->second;
}

const CourseGraph& Engine::course(const std::string& course_id) const { return course_data(course_id).graph; }

std::vector<std::string> Engine::course_ids() const {
  std::shared_lock lk(registry_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : courses_) ids.push_back(id);
  return ids;
}

const CourseGraph& Engine::course_of_quiz(const std::string& quiz_id) const {
  std::shared_lock lk(registry_mu_);
  for (const auto& [_, data] : courses_) {
    auto ref = data->graph.find(quiz_id);
    if (ref && ref->kind == NodeKind::Quiz) return data->graph;
  }
  throw Error(ErrorCode::NotFound, "unknown quiz " + quiz_id, "quiz_id");
}

Engine::Enrollment& Engine::find(const std::string& learner_id, const std::string& course_id) const {
  std::shared_lock lk(registry_mu_);
  if (!courses_.contains(course_id)) throw Error(ErrorCode::NotFound, "unknown course " + course_id, "course_id");
  auto it = enrollments_.find(enrollment_key(learner_id, course_id));
  if (it == enrollments_.end()) {
    throw Error(ErrorCode::NotFound, "learner " + learner_id + " is not enrolled in course " + course_id, "course_id");
  }
  return *it->second;
}

namespace {

Work begin(const LearnerEnrollment& state, const GamificationState& game, const TimerService& timers, int events,
           Timestamp last_at, Timestamp at) {
  if (at < last_at) throw Error(ErrorCode::Validation, "timestamp precedes the enrollment's previous command", "at");
  return Work{state, game, timers, events, {}, {}, {}};
}

void emit(Work& w, const std::string& key, const std::vector<ElementId>& active, const BadgeCatalog& badges,
          const ChannelRouting& routing, EventKind kind, EventPayload payload, Timestamp at) {
  ActivityEvent event{key + "#" + std::to_string(++w.events), w.state.learner_id, w.state.course_id, kind,
                      std::move(payload), at};
  const int before = w.game.points_total;
  auto out = reduce(event, active, w.game, badges);
  w.game = std::move(out.state);
  for (auto& effect : out.effects) {
    auto records = queue_feedback(effect, routing);
    w.feedback.insert(w.feedback.end(), records.begin(), records.end());
    w.effects.push_back(std::move(effect));
  }
  if (kind == EventKind::Enrolled || w.game.points_total != before) w.board.emplace_back(w.game.points_total, at);
}

}  // namespace

void Engine::commit(Enrollment& e, JournalEntry entry, const std::function<void()>& publish) {
  std::lock_guard lk(commit_mu_);
  entry.seq = next_seq_;
  entry.enrollment = e.key;
  entry.enrollment_seq = e.seq + 1;
  if (options_.journal_sink) options_.journal_sink(entry);
  ++next_seq_;
  ++e.seq;
  e.last_at = entry.at;
  journal_.push_back(std::move(entry));
  publish();
}

EnrollOutcome Engine::enroll(const std::string& learner_id, const std::string& course_id,
                             const std::map<int, Option>& assessment, Timestamp at) {
  if (learner_id.empty() || learner_id.find('@') != std::string::npos) {
    throw Error(ErrorCode::Validation, "learner_id must be non-empty and free of '@'", "learner_id");
  }
  AssessmentResponse response{learner_id, assessment, at};
  const CognitiveCore core = determine_cognitive_core(response, instrument());

  std::unique_lock lk(registry_mu_);
  auto cit = courses_.find(course_id);
  if (cit == courses_.end()) throw Error(ErrorCode::NotFound, "unknown course " + course_id, "course_id");
  const auto key = enrollment_key(learner_id, course_id);
  if (enrollments_.contains(key)) {
    throw Error(ErrorCode::Conflict, "learner " + learner_id + " already enrolled in course " + course_id, "course_id");
  }
  CourseData& data = *cit->second;

  auto e = std::make_unique<Enrollment>();
  e->key = key;
  e->course = &data;
  e->active = options_.mapping.at(core);
  Work w{start_enrollment(data.graph, learner_id, core, has(e->active, elements::kEconomy), at), {}, {}, 0, {}, {}, {}};
  emit(w, key, e->active, badges(), routing(), EventKind::Enrolled, step_payload({}, w.state.steps), at);

  Json answers = Json::object();
  for (const auto& [id, opt] : assessment) answers[std::to_string(id)] = opt == Option::A ? "A" : "B";
  JournalEntry entry{0, key, 0, at, "enroll", Json{{"learner_id", learner_id}, {"course_id", course_id},
                                                   {"answers", answers}}};
  EnrollOutcome outcome;
  outcome.core = core;
  outcome.active = e->active;
  outcome.effects = w.effects;
  outcome.feedback = w.feedback;
  Enrollment* raw = e.get();
  commit(*raw, std::move(entry), [&] {
    raw->state = std::move(w.state);
    raw->game = std::move(w.game);
    raw->events = w.events;
    for (auto& [points, when] : w.board) data.board.record(learner_id, points, when);
    data.learners.push_back(learner_id);
    raw->effects = std::move(w.effects);
    raw->feedback = std::move(w.feedback);
  });
  enrollments_.emplace(key, std::move(e));
  return outcome;
}

ViewOutcome Engine::view(const std::string& learner_id, const std::string& course_id, const std::string& node_id,
                         Timestamp at) {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  const CourseGraph& graph = e.course->graph;
  Work w = begin(e.state, e.game, e.timers, e.events, e.last_at, at);

  ViewOutcome outcome;
  outcome.content = revisit(graph, w.state, node_id, at);
  EventPayload payload;
  payload.node_id = node_id;
  payload.variant_tag = outcome.content.variant_tag;
  payload.alternate_paths = outcome.content.alternate_paths;
  if (outcome.content.kind == NodeKind::Quiz) {
    const Quiz& quiz = graph.quiz(node_id);
    payload.activity_kind = outcome.content.activity_kind;
    if (quiz.time_limit_s && has(e.active, elements::kTimePressure) && w.state.state(node_id) == NodeState::Unlocked) {
      if (auto running = w.timers.running(learner_id, node_id)) {
        outcome.timer = running;
      } else {
        outcome.timer = w.timers.start(learner_id, quiz, e.active, at);
        payload.timer_limit_s = quiz.time_limit_s;
      }
    }
  }
  emit(w, e.key, e.active, badges(), routing(), EventKind::ContentViewed, std::move(payload), at);

  outcome.effects = w.effects;
  outcome.feedback = w.feedback;
  commit(e, JournalEntry{0, {}, 0, at, "view", Json{{"node_id", node_id}}}, [&] {
    e.state = std::move(w.state);
    e.game = std::move(w.game);
    e.timers = std::move(w.timers);
    e.events = w.events;
    e.effects.insert(e.effects.end(), w.effects.begin(), w.effects.end());
    e.feedback.insert(e.feedback.end(), w.feedback.begin(), w.feedback.end());
  });
  return outcome;
}

AttemptOutcome Engine::apply_attempt(Enrollment& e, const std::string& quiz_id, const AttemptResult& result,
                                     int time_spent_s, Timestamp at, const std::string& command, Json args) {
  const CourseGraph& graph = e.course->graph;
  const Quiz& quiz = graph.quiz(quiz_id);
  if (time_spent_s < 0) throw Error(ErrorCode::Validation, "time_spent must be non-negative", "time_spent_s");
  Work w = begin(e.state, e.game, e.timers, e.events, e.last_at, at);

  AttemptOutcome outcome;
  outcome.result = result;
  w.timers.cancel(w.state.learner_id, quiz_id);
  outcome.delta = record_attempt_and_unlock(graph, w.state, quiz_id, result);

  EventPayload payload;
  payload.node_id = quiz_id;
  payload.result = result;
  payload.milestone = quiz.milestone;
  payload.quiz_newly_completed = outcome.delta.quiz_newly_completed;
  payload.steps = w.state.steps;
  payload.gates_opened = outcome.delta.gates_opened;
  emit(w, e.key, e.active, badges(), routing(), EventKind::QuizAttempted, std::move(payload), at);
  for (const auto& id : outcome.delta.completed) {
    auto ref = graph.require(id);
    if (ref.kind == NodeKind::Lesson) {
      emit(w, e.key, e.active, badges(), routing(), EventKind::LessonCompleted,
           step_payload(id, w.state.steps), at);
    } else if (ref.kind == NodeKind::Topic) {
      emit(w, e.key, e.active, badges(), routing(), EventKind::TopicCompleted,
           step_payload(id, w.state.steps), at);
    }
  }

  QuizAttemptRecord& r = outcome.record;
  r.user_id = w.state.learner_id;
  r.quiz_id = quiz_id;
  r.score = result.score;
  r.total = result.total;
  r.date = to_date(at);
  r.points = result.points;
  r.points_total = quiz.points_total;
  r.percentage = result.percentage;
  r.time_spent_s = time_spent_s;
  r.passed = result.passed;
  r.course_id = graph.course_id;
  validate_record(r, graph.pass_threshold_pct);

  outcome.effects = w.effects;
  outcome.feedback = w.feedback;
  commit(e, JournalEntry{0, {}, 0, at, command, std::move(args)}, [&] {
    e.state = std::move(w.state);
    e.game = std::move(w.game);
    e.timers = std::move(w.timers);
    e.events = w.events;
    e.course->log.append(r);
    for (auto& [points, when] : w.board) e.course->board.record(e.state.learner_id, points, when);
    e.effects.insert(e.effects.end(), w.effects.begin(), w.effects.end());
    e.feedback.insert(e.feedback.end(), w.feedback.begin(), w.feedback.end());
  });
  for (const auto& f : outcome.feedback) {
    if (f.channel == Channel::Email) options_.email->deliver(e.state.learner_id, f);
  }
  return outcome;
}

AttemptOutcome Engine::attempt(const std::string& learner_id, const std::string& course_id,
                               const std::string& quiz_id, const std::vector<std::optional<std::string>>& answers,
                               int time_spent_s, Timestamp at) {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  const CourseGraph& graph = e.course->graph;
  const Quiz& quiz = graph.quiz(quiz_id);
  require_accessible(e.state, quiz_id);
  auto result = grade_quiz(quiz, answers, graph.pass_threshold_pct);
  return apply_attempt(e, quiz_id, result, time_spent_s, at, "attempt",
                       Json{{"quiz_id", quiz_id}, {"answers", answers_to_json(answers)}, {"time_spent_s", time_spent_s}});
}

AttemptOutcome Engine::score(const std::string& learner_id, const std::string& course_id, const std::string& quiz_id,
                             const std::vector<int>& awarded, int time_spent_s, Timestamp at) {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  const CourseGraph& graph = e.course->graph;
  const Quiz& quiz = graph.quiz(quiz_id);
  require_accessible(e.state, quiz_id);
  if (quiz.activity_kind != ActivityKind::Essay) {
    throw Error(ErrorCode::Validation, "quiz " + quiz_id + " is graded from answers, not scores", "scores");
  }
  auto result = grade_scored(quiz, awarded, graph.pass_threshold_pct);
  return apply_attempt(e, quiz_id, result, time_spent_s, at, "score",
                       Json{{"quiz_id", quiz_id}, {"scores", awarded}, {"time_spent_s", time_spent_s}});
}

AttemptOutcome Engine::expire(const std::string& learner_id, const std::string& course_id,
                              const std::string& quiz_id, const std::vector<std::optional<std::string>>& current_answers,
                              Timestamp at) {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  const CourseGraph& graph = e.course->graph;
  const Quiz& quiz = graph.quiz(quiz_id);
  require_accessible(e.state, quiz_id);
  TimerService probe = e.timers;
  auto handle = probe.running(learner_id, quiz_id);
  auto result = probe.expire(learner_id, quiz, current_answers, at, graph.pass_threshold_pct);
  const int spent = static_cast<int>(handle->deadline.seconds - handle->started_at.seconds);
  return apply_attempt(e, quiz_id, result, spent, at, "expire",
                       Json{{"quiz_id", quiz_id}, {"answers", answers_to_json(current_answers)}});
}

CompleteOutcome Engine::complete(const std::string& learner_id, const std::string& course_id, Timestamp at) {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  Work w = begin(e.state, e.game, e.timers, e.events, e.last_at, at);
  CompleteOutcome outcome;
  outcome.award = complete_course(e.course->graph, w.state, at);
  if (outcome.award.newly_issued) {
    emit(w, e.key, e.active, badges(), routing(), EventKind::CourseCompleted, step_payload(course_id, w.state.steps),
         at);
  }
  outcome.effects = w.effects;
  outcome.feedback = w.feedback;
  commit(e, JournalEntry{0, {}, 0, at, "complete", Json::object()}, [&] {
    e.state = std::move(w.state);
    e.game = std::move(w.game);
    e.events = w.events;
    e.effects.insert(e.effects.end(), w.effects.begin(), w.effects.end());
    e.feedback.insert(e.feedback.end(), w.feedback.begin(), w.feedback.end());
  });
  for (const auto& f : outcome.feedback) {
    if (f.channel == Channel::Email) options_.email->deliver(learner_id, f);
  }
  return outcome;
}

void Engine::evaluate(const std::string& learner_id, const std::string& course_id, const std::map<int, int>& answers,
                      Timestamp at) {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  if (at < e.last_at) throw Error(ErrorCode::Validation, "timestamp precedes the enrollment's previous command", "at");
  if (!e.state.survey_unlocked) {
    throw Error(ErrorCode::Precondition, "the evaluation opens after course completion", "course_id");
  }
  if (e.evaluated) throw Error(ErrorCode::Conflict, "evaluation already submitted", "learner_id");
  EvaluationResponse response{learner_id, e.state.core, answers, at};
  validate_evaluation(response, questionnaire());
  Json args = Json::object();
  for (const auto& [id, v] : answers) args[std::to_string(id)] = v;
  commit(e, JournalEntry{0, {}, 0, at, "evaluate", Json{{"answers", args}}}, [&] {
    e.evaluated = true;
    e.course->evaluations.push_back(std::move(response));
  });
}

void Engine::replay(std::span<const JournalEntry> entries) {
  for (const auto& entry : entries) {
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::Replay, "journal entry " + std::to_string(entry.seq) + ": " + why, "journal");
    };
    {
      std::lock_guard lk(commit_mu_);
      if (entry.seq != next_seq_) fail("expected seq " + std::to_string(next_seq_));
    }
    const auto at_pos = entry.enrollment.rfind('@');
    if (at_pos == std::string::npos) fail("malformed enrollment id '" + entry.enrollment + "'");
    const auto learner = entry.enrollment.substr(0, at_pos);
    const auto course_id = entry.enrollment.substr(at_pos + 1);
    bool known = false;
    std::uint64_t seq = 0;
    {
      std::shared_lock lk(registry_mu_);
      if (!courses_.contains(course_id)) fail("foreign enrollment '" + entry.enrollment + "': unknown course");
      auto it = enrollments_.find(entry.enrollment);
      if (it != enrollments_.end()) {
        known = true;
        seq = it->second->seq;
      }
    }
    if (entry.command == "enroll") {
      if (known) fail("enrollment '" + entry.enrollment + "' opened twice");
      if (entry.args.value("learner_id", "") != learner || entry.args.value("course_id", "") != course_id) {
        fail("enroll arguments do not match '" + entry.enrollment + "'");
      }
    } else if (!known) {
      fail("foreign enrollment '" + entry.enrollment + "'");
    }
    if (entry.enrollment_seq != seq + 1) {
      fail("out of order for '" + entry.enrollment + "': expected position " + std::to_string(seq + 1) + ", got " +
           std::to_string(entry.enrollment_seq));
    }
    try {
      const auto& a = entry.args;
      if (entry.command == "enroll") {
        std::map<int, Option> answers;
        for (const auto& [id, v] : a.at("answers").items()) answers[std::stoi(id)] = option_from_string(v.get<std::string>());
        enroll(learner, course_id, answers, entry.at);
      } else if (entry.command == "view") {
        view(learner, course_id, a.at("node_id").get<std::string>(), entry.at);
      } else if (entry.command == "attempt") {
        attempt(learner, course_id, a.at("quiz_id").get<std::string>(), answers_from_json(a.at("answers")),
                a.at("time_spent_s").get<int>(), entry.at);
      } else if (entry.command == "score") {
        score(learner, course_id, a.at("quiz_id").get<std::string>(), a.at("scores").get<std::vector<int>>(),
              a.at("time_spent_s").get<int>(), entry.at);
      } else if (entry.command == "expire") {
        expire(learner, course_id, a.at("quiz_id").get<std::string>(), answers_from_json(a.at("answers")), entry.at);
      } else if (entry.command == "complete") {
        complete(learner, course_id, entry.at);
      } else if (entry.command == "evaluate") {
        std::map<int, int> answers;
        for (const auto& [id, v] : a.at("answers").items()) answers[std::stoi(id)] = v.get<int>();
        evaluate(learner, course_id, answers, entry.at);
      } else {
        fail("unknown command '" + entry.command + "'");
      }
    } catch (const Error& err) {
      if (err.code() == ErrorCode::Replay) throw;
      fail(std::string(to_string(err.code())) + ": " + err.what());
    } catch (const Json::exception& err) {
      fail(std::string("malformed arguments: ") + err.what());
    } catch (const std::invalid_argument&) {
      fail("malformed arguments");
    }
  }
}

bool Engine::is_enrolled(const std::string& learner_id, const std::string& course_id) const {
  std::shared_lock lk(registry_mu_);
  return enrollments_.contains(enrollment_key(learner_id, course_id));
}

LearnerEnrollment Engine::enrollment(const std::string& learner_id, const std::string& course_id) const {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  return e.state;
}

GamificationState Engine::game_state(const std::string& learner_id, const std::string& course_id) const {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  return e.game;
}

std::vector<ElementId> Engine::active_elements(const std::string& learner_id, const std::string& course_id) const {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  return e.active;
}

std::vector<ElementEffect> Engine::effects(const std::string& learner_id, const std::string& course_id) const {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  return e.effects;
}

std::vector<FeedbackRecord> Engine::feedback(const std::string& learner_id, const std::string& course_id) const {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  return e.feedback;
}

Json Engine::state_json(const std::string& learner_id, const std::string& course_id) const {
  Enrollment& e = find(learner_id, course_id);
  std::lock_guard lk(e.mu);
  const auto& s = e.state;
  auto p = progress_fraction(s.steps);
  Json nodes = Json::object();
  for (const auto& [id, st] : s.unlock_state) nodes[id] = to_string(st);
  Json timers = Json::array();
  for (const auto& t : e.timers.handles()) {
    timers.push_back({{"quiz_id", t.quiz_id}, {"started_at", t.started_at.seconds}, {"deadline", t.deadline.seconds}});
  }
  Json widgets = Json::object();
  for (const auto& [widget, element] :
       std::initializer_list<std::pair<const char*, const ElementId*>>{{"leaderboard", &elements::kCompetition},
                                                                       {"timer", &elements::kTimePressure},
                                                                       {"progress_bar", &elements::kProgression},
                                                                       {"badges", &elements::kAcknowledgement},
                                                                       {"stats", &elements::kStats},
                                                                       {"economy", &elements::kEconomy},
                                                                       {"points", &elements::kPoints}}) {
    widgets[widget] = has(e.active, *element);
  }
  return Json{{"learner_id", s.learner_id},
              {"course_id", s.course_id},
              {"core", to_string(s.core)},
              {"active_elements", e.active},
              {"variant_tags", s.variant_tags},
              {"progress", {{"completed", p.completed}, {"total", p.total}, {"percent", p.percent}}},
              {"points_total", e.game.points_total},
              {"nodes", nodes},
              {"pending_gates", s.pending_gates},
              {"badges", e.game.badges},
              {"timers", timers},
              {"survey_unlocked", s.survey_unlocked},
              {"evaluated", e.evaluated},
              {"award_issued_at", s.award_issued_at ? Json(s.award_issued_at->seconds) : Json(nullptr)},
              {"widgets", widgets}};
}

std::vector<LeaderboardRow> Engine::leaderboard(const std::string& course_id, std::optional<Timestamp> as_of) const {
  CourseData& data = course_data(course_id);
  std::lock_guard lk(commit_mu_);
  return data.board.rows(as_of);
}

AttemptLog Engine::attempt_log(const std::string& course_id) const {
  CourseData& data = course_data(course_id);
  std::lock_guard lk(commit_mu_);
  return data.log;
}

std::vector<EvaluationResponse> Engine::evaluations(const std::string& course_id) const {
  CourseData& data = course_data(course_id);
  std::lock_guard lk(commit_mu_);
  return data.evaluations;
}

std::vector<std::string> Engine::learners(const std::string& course_id) const {
  CourseData& data = course_data(course_id);
  std::lock_guard lk(commit_mu_);
  return data.learners;
}

std::vector<JournalEntry> Engine::journal() const {
  std::lock_guard lk(commit_mu_);
  return journal_;
}

std::string Engine::fingerprint() const {
  std::shared_lock reg(registry_mu_);
  Json doc = Json::object();
  Json enrollments = Json::object();
  for (const auto& [key, e] : enrollments_) {
    std::lock_guard lk(e->mu);
    Json effects = Json::array();
    for (const auto& f : e->effects) effects.push_back(f.to_json());
    Json feedback = Json::array();
    for (const auto& f : e->feedback) feedback.push_back(f.to_json());
    Json timers = Json::array();
    for (const auto& t : e->timers.handles()) {
      timers.push_back({t.quiz_id, t.started_at.seconds, t.deadline.seconds});
    }
    enrollments[key] = {{"state", e->state.to_json()}, {"game", e->game.to_json()},   {"active", e->active},
                        {"seq", e->seq},               {"last_at", e->last_at.seconds}, {"evaluated", e->evaluated},
                        {"effects", effects},          {"feedback", feedback},         {"timers", timers}};
  }
  doc["enrollments"] = enrollments;
  std::lock_guard lk(commit_mu_);
  Json courses = Json::object();
  for (const auto& [id, data] : courses_) {
    Json board = Json::array();
    for (const auto& row : data->board.rows()) {
      board.push_back({row.rank, row.learner_id, row.points_total, row.tie_key.seconds});
    }
    courses[id] = {{"log", data->log.to_csv()},
                   {"evaluations", evaluations_to_csv(data->evaluations, questionnaire())},
                   {"leaderboard", board},
                   {"learners", data->learners}};
  }
  doc["courses"] = courses;
  doc["journal_length"] = journal_.size();
  return doc.dump();
}

}  // namespace coregame
