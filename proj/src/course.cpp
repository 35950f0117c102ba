#include "coregame/course.hpp"

#include <algorithm>
#include <numeric>

#include "coregame/economy.hpp"

namespace coregame {

std::string_view to_string(ActivityKind kind) {
  switch (kind) {
    case ActivityKind::Standard: return "standard";
    case ActivityKind::Puzzle: return "puzzle";
    case ActivityKind::Matching: return "matching";
    case ActivityKind::Essay: return "essay";
  }
  return "?";
}

ActivityKind activity_kind_from_string(std::string_view text) {
  for (auto k : {ActivityKind::Standard, ActivityKind::Puzzle, ActivityKind::Matching, ActivityKind::Essay}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::Configuration, "unknown activity kind '" + std::string(text) + "'", "activity_kind");
}

std::string_view to_string(NodeState state) {
  switch (state) {
    case NodeState::Locked: return "locked";
    case NodeState::Unlocked: return "unlocked";
    case NodeState::Completed: return "completed";
  }
  return "?";
}

int Quiz::total_score() const {
  return std::accumulate(questions.begin(), questions.end(), 0,
                         [](int acc, const Question& q) { return acc + q.max_score; });
}

void CourseGraph::validate() const {
  auto fail = [](const std::string& msg, const char* field) { throw Error(ErrorCode::Configuration, msg, field); };
  if (course_id.empty()) fail("course_id is empty", "course_id");
  if (topics.empty()) fail("course " + course_id + " has no topics", "topics");
  if (pass_threshold_pct <= 50 || pass_threshold_pct > 100) {
    fail("pass_threshold_pct must lie in (50, 100], got " + std::to_string(pass_threshold_pct), "pass_threshold_pct");
  }
  std::set<std::string> ids;
  auto unique = [&](const std::string& id) {
    if (id.empty()) fail("empty node id", "node_id");
    if (!ids.insert(id).second) fail("duplicate node id '" + id + "'", "node_id");
  };
  for (const auto& t : topics) {
    unique(t.topic_id);
    if (t.lessons.empty()) fail("topic " + t.topic_id + " has no lessons", "lessons");
    if (t.gate_cost && *t.gate_cost < 0) fail("topic " + t.topic_id + " has a negative gate_cost", "gate_cost");
    for (const auto& l : t.lessons) {
      unique(l.lesson_id);
      if (l.quizzes.empty()) fail("lesson " + l.lesson_id + " has no quizzes", "quizzes");
      for (const auto& q : l.quizzes) {
        unique(q.quiz_id);
        if (q.points_total <= 0) fail("quiz " + q.quiz_id + " must award positive points_total", "points_total");
        if (q.questions.empty()) fail("quiz " + q.quiz_id + " has no questions", "questions");
        if (q.time_limit_s && *q.time_limit_s <= 0) fail("quiz " + q.quiz_id + " has a non-positive time limit", "time_limit_s");
        for (const auto& question : q.questions) {
          if (question.max_score <= 0) fail("quiz " + q.quiz_id + " has a question with max_score <= 0", "max");
          if (q.activity_kind != ActivityKind::Essay && !question.answer) {
            fail("objective quiz " + q.quiz_id + " has a question without an answer key", "answer");
          }
        }
      }
    }
  }
}

CourseGraph CourseGraph::from_json(const Json& doc) {
  CourseGraph c;
  c.course_id = doc.at("course_id").get<std::string>();
  c.title = doc.value("title", "");
  c.pass_threshold_pct = doc.value("pass_threshold_pct", 80);
  if (doc.contains("variant_bindings")) {
    for (const auto& [core, tags] : doc["variant_bindings"].items()) {
      c.variant_bindings[core_from_string(core)] = tags.get<std::vector<std::string>>();
    }
  }
  for (const auto& tj : doc.at("topics")) {
    Topic t;
    t.topic_id = tj.at("topic_id").get<std::string>();
    t.title = tj.value("title", "");
    if (tj.contains("gate_cost")) t.gate_cost = tj["gate_cost"].get<int>();
    for (const auto& lj : tj.at("lessons")) {
      Lesson l;
      l.lesson_id = lj.at("lesson_id").get<std::string>();
      l.title = lj.value("title", "");
      l.content = lj.value("content", std::vector<std::string>{});
      if (lj.contains("variants")) {
        l.variants = lj["variants"].get<std::map<std::string, std::vector<std::string>>>();
      }
      for (const auto& qj : lj.at("quizzes")) {
        Quiz q;
        q.quiz_id = qj.at("quiz_id").get<std::string>();
        q.title = qj.value("title", "");
        q.points_total = qj.at("points_total").get<int>();
        if (qj.contains("time_limit_s")) q.time_limit_s = qj["time_limit_s"].get<int>();
        q.activity_kind = activity_kind_from_string(qj.value("activity_kind", "standard"));
        q.milestone = qj.value("milestone", false);
        for (const auto& question : qj.at("questions")) {
          Question item;
          item.question_id = question.at("id").get<std::string>();
          item.prompt = question.value("prompt", "");
          if (question.contains("answer")) item.answer = question["answer"].get<std::string>();
          item.max_score = question.value("max", 1);
          q.questions.push_back(std::move(item));
        }
        l.quizzes.push_back(std::move(q));
      }
      t.lessons.push_back(std::move(l));
    }
    c.topics.push_back(std::move(t));
  }
  c.validate();
  return c;
}

CourseGraph CourseGraph::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

std::optional<NodeRef> CourseGraph::find(std::string_view node_id) const {
  for (std::size_t t = 0; t < topics.size(); ++t) {
    if (topics[t].topic_id == node_id) return NodeRef{NodeKind::Topic, t, 0, 0};
    for (std::size_t l = 0; l < topics[t].lessons.size(); ++l) {
      const auto& lesson = topics[t].lessons[l];
      if (lesson.lesson_id == node_id) return NodeRef{NodeKind::Lesson, t, l, 0};
      for (std::size_t q = 0; q < lesson.quizzes.size(); ++q) {
        if (lesson.quizzes[q].quiz_id == node_id) return NodeRef{NodeKind::Quiz, t, l, q};
      }
    }
  }
  return std::nullopt;
}

NodeRef CourseGraph::require(std::string_view node_id) const {
  if (auto ref = find(node_id)) return *ref;
  throw Error(ErrorCode::NotFound, "course " + course_id + " has no node '" + std::string(node_id) + "'", "node_id");
}

const Quiz& CourseGraph::quiz(std::string_view quiz_id) const {
  auto ref = require(quiz_id);
  if (ref.kind != NodeKind::Quiz) {
    throw Error(ErrorCode::NotFound, "node '" + std::string(quiz_id) + "' is not a quiz", "quiz_id");
  }
  return topics[ref.topic].lessons[ref.lesson].quizzes[ref.quiz];
}

const Lesson& CourseGraph::lesson_of(const NodeRef& ref) const { return topics.at(ref.topic).lessons.at(ref.lesson); }

int CourseGraph::total_steps() const {
  int n = 0;
  for (const auto& t : topics) {
    for (const auto& l : t.lessons) n += 1 + static_cast<int>(l.quizzes.size());
  }
  return n;
}

std::vector<std::string> CourseGraph::node_ids() const {
  std::vector<std::string> ids;
  for (const auto& t : topics) {
    ids.push_back(t.topic_id);
    for (const auto& l : t.lessons) {
      ids.push_back(l.lesson_id);
      for (const auto& q : l.quizzes) ids.push_back(q.quiz_id);
    }
  }
  return ids;
}

std::vector<std::string> CourseGraph::quiz_ids() const {
  std::vector<std::string> ids;
  for (const auto& t : topics) {
    for (const auto& l : t.lessons) {
      for (const auto& q : l.quizzes) ids.push_back(q.quiz_id);
    }
  }
  return ids;
}

const std::vector<std::string>& CourseGraph::variant_tags(CognitiveCore core) const {
  static const std::vector<std::string> none;
  auto it = variant_bindings.find(core);
  return it == variant_bindings.end() ? none : it->second;
}

AttemptResult make_result(int score, int total, int points_total, int pass_threshold_pct) {
  if (total <= 0) throw Error(ErrorCode::Validation, "total must be positive", "total");
  if (score < 0 || score > total) {
    throw Error(ErrorCode::Validation, "score " + std::to_string(score) + " outside [0, " + std::to_string(total) + "]",
                "score");
  }
  if (points_total < 0) throw Error(ErrorCode::Validation, "points_total must be non-negative", "points_total");
  AttemptResult r;
  r.score = score;
  r.total = total;
  r.percentage = static_cast<int>(round_half_up_div(100LL * score, total));
  r.points = static_cast<int>(round_half_up_div(static_cast<std::int64_t>(score) * points_total, total));
  r.passed = r.percentage >= pass_threshold_pct;
  return r;
}

AttemptResult grade_quiz(const Quiz& quiz, std::span<const std::optional<std::string>> answers,
                         int pass_threshold_pct) {
  if (quiz.activity_kind == ActivityKind::Essay) {
    throw Error(ErrorCode::Validation, "quiz " + quiz.quiz_id + " is instructor-scored", "answers");
  }
  if (answers.size() != quiz.questions.size()) {
    throw Error(ErrorCode::Validation,
                "quiz " + quiz.quiz_id + " expects " + std::to_string(quiz.questions.size()) + " answers, got " +
                    std::to_string(answers.size()),
                "answers");
  }
  int score = 0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (answers[i] && answers[i] == quiz.questions[i].answer) score += quiz.questions[i].max_score;
  }
  return make_result(score, quiz.total_score(), quiz.points_total, pass_threshold_pct);
}

AttemptResult grade_scored(const Quiz& quiz, std::span<const int> awarded, int pass_threshold_pct) {
  if (awarded.size() != quiz.questions.size()) {
    throw Error(ErrorCode::Validation,
                "quiz " + quiz.quiz_id + " expects " + std::to_string(quiz.questions.size()) + " scores, got " +
                    std::to_string(awarded.size()),
                "awarded");
  }
  int score = 0;
  for (std::size_t i = 0; i < awarded.size(); ++i) {
    if (awarded[i] < 0 || awarded[i] > quiz.questions[i].max_score) {
      throw Error(ErrorCode::Validation, "awarded score out of range for item " + quiz.questions[i].question_id,
                  "awarded");
    }
    score += awarded[i];
  }
  return make_result(score, quiz.total_score(), quiz.points_total, pass_threshold_pct);
}

NodeState LearnerEnrollment::state(const std::string& node_id) const {
  auto it = unlock_state.find(node_id);
  return it == unlock_state.end() ? NodeState::Locked : it->second;
}

int LearnerEnrollment::points_total() const {
  int sum = 0;
  for (const auto& [_, p] : best_points) sum += p;
  return sum;
}

Json LearnerEnrollment::to_json() const {
  Json states = Json::object();
  for (const auto& [id, s] : unlock_state) states[id] = to_string(s);
  Json access = Json::object();
  for (const auto& [id, ts] : last_accessed) access[id] = ts.seconds;
  return Json{{"learner_id", learner_id},
              {"course_id", course_id},
              {"core", to_string(core)},
              {"enrolled_at", enrolled_at.seconds},
              {"variant_tags", variant_tags},
              {"economy_gated", economy_gated},
              {"unlock_state", states},
              {"steps", {{"completed", steps.completed}, {"total", steps.total}}},
              {"best_points", best_points},
              {"points_total", points_total()},
              {"last_accessed", access},
              {"pending_gates", pending_gates},
              {"award_issued_at", award_issued_at ? Json(award_issued_at->seconds) : Json(nullptr)},
              {"survey_unlocked", survey_unlocked}};
}

namespace {

void set_state(LearnerEnrollment& e, const std::string& id, NodeState s) { e.unlock_state[id] = s; }

void unlock_lesson(LearnerEnrollment& e, const Lesson& lesson, UnlockDelta* delta) {
  if (e.state(lesson.lesson_id) == NodeState::Locked) {
    set_state(e, lesson.lesson_id, NodeState::Unlocked);
    if (delta) delta->unlocked.push_back(lesson.lesson_id);
  }
  for (const auto& q : lesson.quizzes) {
    if (e.state(q.quiz_id) == NodeState::Locked) {
      set_state(e, q.quiz_id, NodeState::Unlocked);
      if (delta) delta->unlocked.push_back(q.quiz_id);
    }
  }
}

void unlock_topic(LearnerEnrollment& e, const Topic& topic, UnlockDelta* delta) {
  if (e.state(topic.topic_id) == NodeState::Locked) {
    set_state(e, topic.topic_id, NodeState::Unlocked);
    if (delta) delta->unlocked.push_back(topic.topic_id);
  }
  unlock_lesson(e, topic.lessons.front(), delta);
}

// Topic becomes eligible once its predecessor completes; Economy learners
// also need enough points.
void offer_topic(LearnerEnrollment& e, const Topic& topic, UnlockDelta& delta) {
  if (e.economy_gated && topic.gate_cost) {
    auto decision = economy_gate_check(e.points_total(), *topic.gate_cost);
    if (!decision.open) {
      e.pending_gates.insert(topic.topic_id);
      delta.gates_closed.push_back(topic.topic_id);
      return;
    }
    delta.gates_opened.push_back(topic.topic_id);
  }
  e.pending_gates.erase(topic.topic_id);
  unlock_topic(e, topic, &delta);
}

void recheck_gates(const CourseGraph& course, LearnerEnrollment& e, UnlockDelta& delta) {
  if (e.pending_gates.empty()) return;
  for (const auto& topic : course.topics) {
    if (!e.pending_gates.contains(topic.topic_id)) continue;
    if (economy_gate_check(e.points_total(), topic.gate_cost.value_or(0)).open) {
      e.pending_gates.erase(topic.topic_id);
      delta.gates_opened.push_back(topic.topic_id);
      unlock_topic(e, topic, &delta);
    }
  }
}

}  // namespace

LearnerEnrollment start_enrollment(const CourseGraph& course, const std::string& learner_id, CognitiveCore core,
                                   bool economy_gated, Timestamp at) {
  course.validate();
  LearnerEnrollment e;
  e.learner_id = learner_id;
  e.course_id = course.course_id;
  e.core = core;
  e.enrolled_at = at;
  e.variant_tags = course.variant_tags(core);
  e.economy_gated = economy_gated;
  for (const auto& id : course.node_ids()) e.unlock_state[id] = NodeState::Locked;
  e.steps = StepCounter{0, course.total_steps()};
  unlock_topic(e, course.topics.front(), nullptr);
  return e;
}

void require_accessible(const LearnerEnrollment& enrollment, const std::string& node_id) {
  if (enrollment.state(node_id) == NodeState::Locked) {
    throw Error(ErrorCode::Access, "node '" + node_id + "' is locked", "node_id");
  }
}

UnlockDelta record_attempt_and_unlock(const CourseGraph& course, LearnerEnrollment& enrollment,
                                      const std::string& quiz_id, const AttemptResult& result) {
  const auto ref = course.require(quiz_id);
  if (ref.kind != NodeKind::Quiz) {
    throw Error(ErrorCode::NotFound, "node '" + quiz_id + "' is not a quiz", "quiz_id");
  }
  require_accessible(enrollment, quiz_id);

  UnlockDelta delta;
  auto& best = enrollment.best_points[quiz_id];
  const bool points_rose = result.points > best;
  best = std::max(best, result.points);

  if (result.passed && enrollment.state(quiz_id) == NodeState::Unlocked) {
    delta.quiz_newly_completed = true;
    set_state(enrollment, quiz_id, NodeState::Completed);
    delta.completed.push_back(quiz_id);
    ++enrollment.steps.completed;

    const auto& topic = course.topics[ref.topic];
    const auto& lesson = topic.lessons[ref.lesson];
    const bool lesson_done = std::all_of(lesson.quizzes.begin(), lesson.quizzes.end(), [&](const Quiz& q) {
      return enrollment.state(q.quiz_id) == NodeState::Completed;
    });
    if (lesson_done && enrollment.state(lesson.lesson_id) == NodeState::Unlocked) {
      set_state(enrollment, lesson.lesson_id, NodeState::Completed);
      delta.completed.push_back(lesson.lesson_id);
      ++enrollment.steps.completed;
      if (ref.lesson + 1 < topic.lessons.size()) {
        unlock_lesson(enrollment, topic.lessons[ref.lesson + 1], &delta);
      } else {
        set_state(enrollment, topic.topic_id, NodeState::Completed);
        delta.completed.push_back(topic.topic_id);
        if (ref.topic + 1 < course.topics.size()) offer_topic(enrollment, course.topics[ref.topic + 1], delta);
      }
    }
  }
  if (points_rose) recheck_gates(course, enrollment, delta);
  return delta;
}

ActivityKind served_activity_kind(const Quiz& quiz, const LearnerEnrollment& enrollment) {
  const bool puzzle_kind = quiz.activity_kind == ActivityKind::Puzzle || quiz.activity_kind == ActivityKind::Matching;
  if (!puzzle_kind) return quiz.activity_kind;
  const bool wants = std::find(enrollment.variant_tags.begin(), enrollment.variant_tags.end(), kPuzzleActivityTag) !=
                     enrollment.variant_tags.end();
  return wants ? quiz.activity_kind : ActivityKind::Standard;
}

ContentHandle revisit(const CourseGraph& course, LearnerEnrollment& enrollment, const std::string& node_id,
                      Timestamp at) {
  const auto ref = course.require(node_id);
  require_accessible(enrollment, node_id);
  enrollment.last_accessed[node_id] = at;

  ContentHandle handle;
  handle.node_id = node_id;
  handle.kind = ref.kind;
  const auto& topic = course.topics[ref.topic];
  switch (ref.kind) {
    case NodeKind::Topic:
      handle.title = topic.title;
      for (const auto& l : topic.lessons) handle.content.push_back(l.lesson_id);
      break;
    case NodeKind::Lesson: {
      const auto& lesson = topic.lessons[ref.lesson];
      handle.title = lesson.title;
      handle.content = lesson.content;
      for (const auto& tag : enrollment.variant_tags) {
        auto it = lesson.variants.find(tag);
        if (it == lesson.variants.end()) continue;
        if (tag == kAlternatePathTag) {
          handle.alternate_paths = it->second;
        } else if (!handle.variant_tag) {
          handle.variant_tag = tag;
          handle.content = it->second;
        }
      }
      break;
    }
    case NodeKind::Quiz: {
      const auto& quiz = topic.lessons[ref.lesson].quizzes[ref.quiz];
      handle.title = quiz.title;
      for (const auto& q : quiz.questions) handle.content.push_back(q.prompt);
      handle.activity_kind = served_activity_kind(quiz, enrollment);
      break;
    }
  }
  return handle;
}

bool all_topics_completed(const CourseGraph& course, const LearnerEnrollment& enrollment) {
  return std::all_of(course.topics.begin(), course.topics.end(),
                     [&](const Topic& t) { return enrollment.state(t.topic_id) == NodeState::Completed; });
}

CompletionAward complete_course(const CourseGraph& course, LearnerEnrollment& enrollment, Timestamp at) {
  if (!all_topics_completed(course, enrollment)) {
    throw Error(ErrorCode::Precondition,
                "course " + course.course_id + " incomplete: " + std::to_string(enrollment.steps.completed) + " of " +
                    std::to_string(enrollment.steps.total) + " steps",
                "course_id");
  }
  CompletionAward award;
  award.badge_id = "course_complete";
  award.certificate_id = "cert-" + course.course_id + "-" + enrollment.learner_id;
  if (enrollment.award_issued_at) {
    award.issued_at = *enrollment.award_issued_at;
    award.newly_issued = false;
    return award;
  }
  enrollment.award_issued_at = at;
  enrollment.survey_unlocked = true;
  award.issued_at = at;
  award.newly_issued = true;
  return award;
}

}  // namespace coregame
