#pragma once

// Event reducer that turns course activity into game-element effects, plus
// the leaderboard read model, quiz timers and feedback routing.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "coregame/catalog.hpp"
#include "coregame/common.hpp"
#include "coregame/course.hpp"
#include "coregame/io.hpp"

namespace coregame {

// Element ids the runtime reacts to.
namespace elements {
inline const ElementId kPoints = "points";
inline const ElementId kProgression = "progression";
inline const ElementId kCompetition = "competition";
inline const ElementId kEconomy = "economy";
inline const ElementId kAcknowledgement = "acknowledgement";
inline const ElementId kTimePressure = "time_pressure";
inline const ElementId kPuzzle = "puzzle";
inline const ElementId kStats = "stats";
inline const ElementId kSensation = "sensation";
inline const ElementId kChoice = "choice";
}  // namespace elements

enum class EventKind { Enrolled, LessonCompleted, QuizAttempted, TopicCompleted, CourseCompleted, ContentViewed };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view text);  // throws Validation

struct EventPayload {
  /// Quiz, lesson, topic or course the event concerns.
  std::string node_id;
  std::optional<AttemptResult> result;
  bool milestone = false;
  bool quiz_newly_completed = false;
  /// Step counter after the event was applied by the course engine.
  StepCounter steps;
  std::vector<std::string> gates_opened;
  // ContentViewed only.
  std::optional<std::string> variant_tag;
  std::vector<std::string> alternate_paths;
  std::optional<ActivityKind> activity_kind;
  std::optional<int> timer_limit_s;
};

struct ActivityEvent {
  std::string event_id;
  std::string learner_id;
  std::string course_id;
  EventKind kind = EventKind::Enrolled;
  EventPayload payload;
  Timestamp occurred_at;
};

enum class EffectKind {
  PointsAwarded,
  BadgeGranted,
  ProgressUpdated,
  LeaderboardUpdated,
  GateOpened,
  TimerStarted,
  NotificationQueued,
  VariantApplied,
};

std::string_view to_string(EffectKind kind);
EffectKind effect_kind_from_string(std::string_view text);

struct ElementEffect {
  EffectKind kind = EffectKind::PointsAwarded;
  Json details;
  std::string caused_by;
  /// Element behind the effect; empty for plain notices (retake reminders,
  /// pass notices) that belong to no element.
  std::optional<ElementId> element;
  /// Shown to the learner. Computed effects whose element is inactive are
  /// kept for telemetry but never surfaced.
  bool surfaced = false;

  bool operator==(const ElementEffect&) const = default;
  Json to_json() const;
};

struct Badge {
  std::string badge_id;
  std::string name;
  /// topic_completed, milestone_quiz or course_completed.
  std::string trigger;
  std::string icon;
};

class BadgeCatalog {
 public:
  explicit BadgeCatalog(std::vector<Badge> badges);
  static BadgeCatalog from_json(const Json& doc);
  static BadgeCatalog load(const std::filesystem::path& path);
  static const BadgeCatalog& standard();

  const Badge* for_trigger(std::string_view trigger) const;
  const std::vector<Badge>& badges() const { return badges_; }

 private:
  std::vector<Badge> badges_;
};

struct GamificationState {
  std::string learner_id;
  std::string course_id;
  std::map<std::string, int> best_points;
  std::map<std::string, int> attempts;
  int points_total = 0;
  /// When points_total was first reached; the leaderboard tie key.
  std::optional<Timestamp> points_reached_at;
  StepCounter steps;
  /// "<badge_id>:<node_id>"
  std::set<std::string> badges;
  std::set<std::string> gates_opened;
  std::optional<Timestamp> last_event_at;
  int events_applied = 0;

  bool operator==(const GamificationState&) const = default;
  Json to_json() const;
};

struct ReduceOutput {
  std::vector<ElementEffect> effects;
  GamificationState state;
};

/// Pure reducer. Effect order follows the element dependencies: points
/// before the scoreboard, gates and badges; step completion before the
/// progress bar; notices last. Throws Validation for malformed or unknown
/// events, leaving the caller's state untouched.
ReduceOutput reduce(const ActivityEvent& event, std::span<const ElementId> active, const GamificationState& state,
                    const BadgeCatalog& badges = BadgeCatalog::standard());

struct ProgressFraction {
  int completed = 0;
  int total = 0;
  int percent = 0;
  bool operator==(const ProgressFraction&) const = default;
};

ProgressFraction progress_fraction(const StepCounter& steps);
inline ProgressFraction progress_fraction(const LearnerEnrollment& e) { return progress_fraction(e.steps); }

struct LeaderboardRow {
  std::string learner_id;
  int points_total = 0;
  int rank = 0;
  Timestamp tie_key;
  bool operator==(const LeaderboardRow&) const = default;
};

/// Per-course read model built from point updates. Keeps the full history
/// so boards can be read as of any instant.
class Leaderboard {
 public:
  void record(const std::string& learner_id, int points_total, Timestamp at);
  std::vector<LeaderboardRow> rows(std::optional<Timestamp> as_of = std::nullopt) const;
  bool empty() const { return history_.empty(); }

 private:
  struct Update {
    std::string learner_id;
    int points_total;
    Timestamp at;
  };
  std::vector<Update> history_;
};

struct TimerHandle {
  std::string learner_id;
  std::string quiz_id;
  Timestamp started_at;
  Timestamp deadline;
  bool operator==(const TimerHandle&) const = default;
};

/// Running quiz timers keyed by (learner, quiz).
class TimerService {
 public:
  /// Throws Configuration for an untimed quiz and Precondition when Time
  /// Pressure is not active (such learners are served the quiz untimed).
  TimerHandle start(const std::string& learner_id, const Quiz& quiz, std::span<const ElementId> active,
                    Timestamp at);
  std::optional<TimerHandle> running(const std::string& learner_id, const std::string& quiz_id) const;
  bool cancel(const std::string& learner_id, const std::string& quiz_id);
  std::vector<TimerHandle> handles() const;
  /// Auto-submit on expiry: grades the current answers (unanswered slots
  /// score 0) and clears the timer. Throws Precondition if no timer is
  /// running or the deadline has not passed.
  AttemptResult expire(const std::string& learner_id, const Quiz& quiz,
                       std::span<const std::optional<std::string>> current_answers, Timestamp at,
                       int pass_threshold_pct);

  bool operator==(const TimerService&) const = default;

 private:
  std::map<std::pair<std::string, std::string>, TimerHandle> timers_;
};

enum class Channel { Popup, Dashboard, Email, Reminder };
std::string_view to_string(Channel c);
Channel channel_from_string(std::string_view text);

class ChannelRouting {
 public:
  explicit ChannelRouting(std::map<EffectKind, std::vector<Channel>> routes);
  static ChannelRouting from_json(const Json& doc);
  static ChannelRouting load(const std::filesystem::path& path);
  static const ChannelRouting& standard();

  const std::vector<Channel>& channels(EffectKind kind) const;

 private:
  std::map<EffectKind, std::vector<Channel>> routes_;
};

struct FeedbackRecord {
  Channel channel = Channel::Dashboard;
  EffectKind effect_kind = EffectKind::PointsAwarded;
  std::string caused_by;
  std::string body;
  bool operator==(const FeedbackRecord&) const = default;
  Json to_json() const;
};

/// One record per configured channel for surfaced effects; nothing for
/// computed-only effects.
std::vector<FeedbackRecord> queue_feedback(const ElementEffect& effect,
                                           const ChannelRouting& routing = ChannelRouting::standard());

class EmailTransport {
 public:
  virtual ~EmailTransport() = default;
  virtual void deliver(const std::string& learner_id, const FeedbackRecord& record) = 0;
};

/// Default transport: records are persisted by the engine, nothing is sent.
class NullEmailTransport final : public EmailTransport {
 public:
  void deliver(const std::string&, const FeedbackRecord&) override {}
};

}  // namespace coregame
