#pragma once

// Engine facade: owns courses and enrollments, runs commands under
// per-enrollment serialization, and records every accepted command in a
// journal that can rebuild the whole state.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "coregame/catalog.hpp"
#include "coregame/course.hpp"
#include "coregame/gamification.hpp"
#include "coregame/personality.hpp"
#include "coregame/telemetry.hpp"

namespace coregame {

struct JournalEntry {
  std::uint64_t seq = 0;
  /// "<learner>@<course>"
  std::string enrollment;
  /// 1-based position within the enrollment's own command stream.
  std::uint64_t enrollment_seq = 0;
  Timestamp at;
  /// enroll, view, attempt, score, expire, complete, evaluate
  std::string command;
  Json args;

  bool operator==(const JournalEntry&) const = default;
  Json to_json() const;
  static JournalEntry from_json(const Json& doc);
};

std::string enrollment_key(const std::string& learner_id, const std::string& course_id);

struct EngineOptions {
  ElementMapping mapping = deployed_mapping();
  /// Replaces every course's own pass threshold when set.
  std::optional<int> pass_threshold_override;
  const Instrument* instrument = nullptr;  // standard() when null
  const BadgeCatalog* badges = nullptr;
  const ChannelRouting* routing = nullptr;
  const Questionnaire* questionnaire = nullptr;
  std::shared_ptr<EmailTransport> email;
  /// Called under the commit lock before a command's effects become
  /// visible; throwing aborts the command.
  std::function<void(const JournalEntry&)> journal_sink;
};

struct CommandOutcome {
  std::vector<ElementEffect> effects;
  std::vector<FeedbackRecord> feedback;
};

struct EnrollOutcome : CommandOutcome {
  CognitiveCore core = CognitiveCore::NT;
  std::vector<ElementId> active;
};

struct ViewOutcome : CommandOutcome {
  ContentHandle content;
  std::optional<TimerHandle> timer;
};

struct AttemptOutcome : CommandOutcome {
  AttemptResult result;
  UnlockDelta delta;
  QuizAttemptRecord record;
};

struct CompleteOutcome : CommandOutcome {
  CompletionAward award;
};

class Engine {
 public:
  explicit Engine(EngineOptions options = {});
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;
  ~Engine();

  void add_course(CourseGraph course);
  const CourseGraph& course(const std::string& course_id) const;  // throws NotFound
  std::vector<std::string> course_ids() const;
  /// Course containing `quiz_id`; throws NotFound.
  const CourseGraph& course_of_quiz(const std::string& quiz_id) const;
  const ElementMapping& mapping() const { return options_.mapping; }

  // Commands. Each one is journaled only when it succeeds.
  EnrollOutcome enroll(const std::string& learner_id, const std::string& course_id,
                       const std::map<int, Option>& assessment, Timestamp at);
  ViewOutcome view(const std::string& learner_id, const std::string& course_id, const std::string& node_id,
                   Timestamp at);
  AttemptOutcome attempt(const std::string& learner_id, const std::string& course_id, const std::string& quiz_id,
                         const std::vector<std::optional<std::string>>& answers, int time_spent_s, Timestamp at);
  /// Instructor-scored items (essays, projects).
  AttemptOutcome score(const std::string& learner_id, const std::string& course_id, const std::string& quiz_id,
                       const std::vector<int>& awarded, int time_spent_s, Timestamp at);
  /// Timer expiry: auto-submits the answers given so far.
  AttemptOutcome expire(const std::string& learner_id, const std::string& course_id, const std::string& quiz_id,
                        const std::vector<std::optional<std::string>>& current_answers, Timestamp at);
  CompleteOutcome complete(const std::string& learner_id, const std::string& course_id, Timestamp at);
  void evaluate(const std::string& learner_id, const std::string& course_id, const std::map<int, int>& answers,
                Timestamp at);

  /// Re-executes journal entries in order. Throws Error(Replay) on gaps,
  /// reordering, entries for enrollments that were never opened, or any
  /// entry the engine now rejects.
  void replay(std::span<const JournalEntry> entries);

  // Reads.
  bool is_enrolled(const std::string& learner_id, const std::string& course_id) const;
  LearnerEnrollment enrollment(const std::string& learner_id, const std::string& course_id) const;
  GamificationState game_state(const std::string& learner_id, const std::string& course_id) const;
  std::vector<ElementId> active_elements(const std::string& learner_id, const std::string& course_id) const;
  std::vector<ElementEffect> effects(const std::string& learner_id, const std::string& course_id) const;
  std::vector<FeedbackRecord> feedback(const std::string& learner_id, const std::string& course_id) const;
  /// Learner-facing state document.
  Json state_json(const std::string& learner_id, const std::string& course_id) const;

  std::vector<LeaderboardRow> leaderboard(const std::string& course_id,
                                          std::optional<Timestamp> as_of = std::nullopt) const;
  AttemptLog attempt_log(const std::string& course_id) const;
  std::vector<EvaluationResponse> evaluations(const std::string& course_id) const;
  std::vector<std::string> learners(const std::string& course_id) const;
  std::vector<JournalEntry> journal() const;

  /// Canonical dump of all engine state; equal fingerprints mean equal state.
  std::string fingerprint() const;

 private:
  struct Enrollment;
  struct CourseData;

  EngineOptions options_;
  const Instrument& instrument() const;
  const BadgeCatalog& badges() const;
  const ChannelRouting& routing() const;
  const Questionnaire& questionnaire() const;

  Enrollment& find(const std::string& learner_id, const std::string& course_id) const;
  CourseData& course_data(const std::string& course_id) const;

  AttemptOutcome apply_attempt(Enrollment& e, const std::string& quiz_id, const AttemptResult& result,
                               int time_spent_s, Timestamp at, const std::string& command, Json args);
  void commit(Enrollment& e, JournalEntry entry, const std::function<void()>& publish);

  mutable std::shared_mutex registry_mu_;
  std::map<std::string, std::unique_ptr<CourseData>> courses_;
  std::map<std::string, std::unique_ptr<Enrollment>> enrollments_;

  mutable std::mutex commit_mu_;
  std::vector<JournalEntry> journal_;
  std::uint64_t next_seq_ = 1;
};

}  // namespace coregame
