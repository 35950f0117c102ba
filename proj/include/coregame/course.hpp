#pragma once

// Course structure (course -> topic -> lesson -> quiz), grading, and the
// per-learner drip-unlock state machine.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "coregame/common.hpp"
#include "coregame/io.hpp"

namespace coregame {

enum class ActivityKind { Standard, Puzzle, Matching, Essay };

std::string_view to_string(ActivityKind kind);
ActivityKind activity_kind_from_string(std::string_view text);

struct Question {
  std::string question_id;
  std::string prompt;
  /// Expected answer key for objective questions; absent for essay items.
  std::optional<std::string> answer;
  int max_score = 1;
};

struct Quiz {
  std::string quiz_id;
  std::string title;
  std::vector<Question> questions;
  int points_total = 0;
  std::optional<int> time_limit_s;
  ActivityKind activity_kind = ActivityKind::Standard;
  bool milestone = false;

  int total_score() const;
};

/// Variant tag whose content is offered as an alternate path instead of
/// replacing the base content.
inline constexpr std::string_view kAlternatePathTag = "alternate_path";
/// Variant tag that turns puzzle/matching activities on for a learner.
inline constexpr std::string_view kPuzzleActivityTag = "puzzle_activity";

struct Lesson {
  std::string lesson_id;
  std::string title;
  std::vector<std::string> content;
  std::map<std::string, std::vector<std::string>> variants;
  std::vector<Quiz> quizzes;
};

struct Topic {
  std::string topic_id;
  std::string title;
  std::vector<Lesson> lessons;
  /// Points needed to open this topic for Economy-active learners.
  std::optional<int> gate_cost;
};

enum class NodeKind { Topic, Lesson, Quiz };

struct NodeRef {
  NodeKind kind = NodeKind::Topic;
  std::size_t topic = 0;
  std::size_t lesson = 0;
  std::size_t quiz = 0;
};

class CourseGraph {
 public:
  std::string course_id;
  std::string title;
  std::vector<Topic> topics;
  int pass_threshold_pct = 80;
  std::map<CognitiveCore, std::vector<std::string>> variant_bindings;

  /// Throws Error(Configuration) on structural violations.
  void validate() const;

  static CourseGraph from_json(const Json& doc);
  static CourseGraph load(const std::filesystem::path& path);

  std::optional<NodeRef> find(std::string_view node_id) const;
  NodeRef require(std::string_view node_id) const;  // throws NotFound
  const Quiz& quiz(std::string_view quiz_id) const;
  const Lesson& lesson_of(const NodeRef& ref) const;

  /// Lessons + quizzes.
  int total_steps() const;
  std::vector<std::string> node_ids() const;
  std::vector<std::string> quiz_ids() const;
  const std::vector<std::string>& variant_tags(CognitiveCore core) const;
};

struct AttemptResult {
  int score = 0;
  int total = 0;
  int percentage = 0;
  int points = 0;
  bool passed = false;
  bool operator==(const AttemptResult&) const = default;
};

/// percentage = round-half-up(100 * score / total); points =
/// round-half-up(score * points_total / total); passed = percentage >= threshold.
AttemptResult make_result(int score, int total, int points_total, int pass_threshold_pct);

/// Objective grading. `answers` has one slot per question; an empty slot
/// (unanswered) scores 0.
AttemptResult grade_quiz(const Quiz& quiz, std::span<const std::optional<std::string>> answers,
                         int pass_threshold_pct);

/// Instructor-scored grading (essays, projects): one awarded score per item,
/// each within [0, max_score].
AttemptResult grade_scored(const Quiz& quiz, std::span<const int> awarded, int pass_threshold_pct);

enum class NodeState { Locked, Unlocked, Completed };
std::string_view to_string(NodeState state);

struct StepCounter {
  int completed = 0;
  int total = 0;
  bool operator==(const StepCounter&) const = default;
};

struct LearnerEnrollment {
  std::string learner_id;
  std::string course_id;
  CognitiveCore core = CognitiveCore::NT;
  Timestamp enrolled_at;
  std::vector<std::string> variant_tags;
  /// Economy gates apply to this learner.
  bool economy_gated = false;
  std::map<std::string, NodeState> unlock_state;
  StepCounter steps;
  std::map<std::string, int> best_points;
  std::map<std::string, Timestamp> last_accessed;
  std::set<std::string> pending_gates;
  std::optional<Timestamp> award_issued_at;
  bool survey_unlocked = false;

  NodeState state(const std::string& node_id) const;
  int points_total() const;
  bool operator==(const LearnerEnrollment&) const = default;

  Json to_json() const;
};

struct UnlockDelta {
  std::vector<std::string> completed;
  std::vector<std::string> unlocked;
  std::vector<std::string> gates_opened;
  std::vector<std::string> gates_closed;
  bool quiz_newly_completed = false;
};

struct ContentHandle {
  std::string node_id;
  NodeKind kind = NodeKind::Lesson;
  std::string title;
  std::vector<std::string> content;
  std::vector<std::string> alternate_paths;
  std::optional<std::string> variant_tag;
  ActivityKind activity_kind = ActivityKind::Standard;
};

struct CompletionAward {
  std::string badge_id;
  std::string certificate_id;
  Timestamp issued_at;
  bool newly_issued = false;
};

/// First topic, its first lesson, and that lesson's quizzes start Unlocked.
LearnerEnrollment start_enrollment(const CourseGraph& course, const std::string& learner_id, CognitiveCore core,
                                   bool economy_gated, Timestamp at);

/// Throws Error(Access) unless `node_id` is Unlocked or Completed.
void require_accessible(const LearnerEnrollment& enrollment, const std::string& node_id);

/// Applies a graded attempt. Failing attempts change only best_points;
/// passing one completes the quiz and cascades lesson/topic completion and
/// unlocks. Also re-checks pending economy gates when points rose.
UnlockDelta record_attempt_and_unlock(const CourseGraph& course, LearnerEnrollment& enrollment,
                                      const std::string& quiz_id, const AttemptResult& result);

ContentHandle revisit(const CourseGraph& course, LearnerEnrollment& enrollment, const std::string& node_id,
                      Timestamp at);

/// Activity kind served to this learner; puzzle/matching activities fall
/// back to standard without the puzzle variant.
ActivityKind served_activity_kind(const Quiz& quiz, const LearnerEnrollment& enrollment);

bool all_topics_completed(const CourseGraph& course, const LearnerEnrollment& enrollment);

/// Issues the award once and unlocks the evaluation survey; later calls
/// return the same award with newly_issued = false.
CompletionAward complete_course(const CourseGraph& course, LearnerEnrollment& enrollment, Timestamp at);

}  // namespace coregame
