#include "coregame/gamification.hpp"

#include <algorithm>

namespace coregame {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 6> kEventNames{{
    {EventKind::Enrolled, "Enrolled"},
    {EventKind::LessonCompleted, "LessonCompleted"},
    {EventKind::QuizAttempted, "QuizAttempted"},
    {EventKind::TopicCompleted, "TopicCompleted"},
    {EventKind::CourseCompleted, "CourseCompleted"},
    {EventKind::ContentViewed, "ContentViewed"},
}};

constexpr std::array<std::pair<EffectKind, std::string_view>, 8> kEffectNames{{
    {EffectKind::PointsAwarded, "PointsAwarded"},
    {EffectKind::BadgeGranted, "BadgeGranted"},
    {EffectKind::ProgressUpdated, "ProgressUpdated"},
    {EffectKind::LeaderboardUpdated, "LeaderboardUpdated"},
    {EffectKind::GateOpened, "GateOpened"},
    {EffectKind::TimerStarted, "TimerStarted"},
    {EffectKind::NotificationQueued, "NotificationQueued"},
    {EffectKind::VariantApplied, "VariantApplied"},
}};

constexpr std::array<std::pair<Channel, std::string_view>, 4> kChannelNames{{
    {Channel::Popup, "popup"},
    {Channel::Dashboard, "dashboard"},
    {Channel::Email, "email"},
    {Channel::Reminder, "reminder"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return {};
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view name) {
  for (const auto& [v, n] : table) {
    if (n == name) return v;
  }
  return std::nullopt;
}

bool has(std::span<const ElementId> active, const ElementId& id) {
  return std::find(active.begin(), active.end(), id) != active.end();
}

class EffectBuilder {
 public:
  EffectBuilder(const ActivityEvent& event, std::span<const ElementId> active) : event_(event), active_(active) {}

  void add(EffectKind kind, Json details, std::optional<ElementId> element) {
    ElementEffect e;
    e.kind = kind;
    e.details = std::move(details);
    e.caused_by = event_.event_id;
    e.surfaced = !element || has(active_, *element);
    e.element = std::move(element);
    effects_.push_back(std::move(e));
  }

  std::vector<ElementEffect> take() { return std::move(effects_); }

 private:
  const ActivityEvent& event_;
  std::span<const ElementId> active_;
  std::vector<ElementEffect> effects_;
};

void grant_badge(EffectBuilder& out, GamificationState& state, const BadgeCatalog& badges, std::string_view trigger,
                 const std::string& node_id) {
  const Badge* badge = badges.for_trigger(trigger);
  if (!badge) return;
  auto key = badge->badge_id + ":" + node_id;
  if (!state.badges.insert(key).second) return;
  out.add(EffectKind::BadgeGranted, Json{{"badge_id", badge->badge_id}, {"name", badge->name}, {"node_id", node_id}},
          elements::kAcknowledgement);
}

void update_progress(EffectBuilder& out, GamificationState& state, const StepCounter& steps) {
  if (steps == state.steps) return;
  state.steps = steps;
  auto p = progress_fraction(steps);
  out.add(EffectKind::ProgressUpdated, Json{{"completed", p.completed}, {"total", p.total}, {"percent", p.percent}},
          elements::kProgression);
}

void validate_event(const ActivityEvent& event, const GamificationState& state) {
  if (event.event_id.empty()) throw Error(ErrorCode::Validation, "event_id is empty", "event_id");
  if (event.learner_id.empty()) throw Error(ErrorCode::Validation, "learner_id is empty", "learner_id");
  if (event.course_id.empty()) throw Error(ErrorCode::Validation, "course_id is empty", "course_id");
  if (name_of(kEventNames, event.kind).empty()) throw Error(ErrorCode::Validation, "unknown event kind", "kind");
  const bool fresh = state.events_applied == 0;
  if (event.kind == EventKind::Enrolled) {
    if (!fresh) throw Error(ErrorCode::Validation, "learner already enrolled", "kind");
  } else {
    if (fresh) throw Error(ErrorCode::Validation, "event before enrollment", "kind");
    if (state.learner_id != event.learner_id || state.course_id != event.course_id) {
      throw Error(ErrorCode::Validation, "event belongs to another enrollment", "learner_id");
    }
  }
  if (state.last_event_at && event.occurred_at < *state.last_event_at) {
    throw Error(ErrorCode::Validation, "occurred_at precedes the previous event", "occurred_at");
  }
  if (event.kind == EventKind::QuizAttempted && (!event.payload.result || event.payload.node_id.empty())) {
    throw Error(ErrorCode::Validation, "QuizAttempted needs a quiz id and a result", "payload");
  }
}

}  // namespace

std::string_view to_string(EventKind kind) { return name_of(kEventNames, kind); }

EventKind event_kind_from_string(std::string_view text) {
  if (auto k = value_of(kEventNames, text)) return *k;
  throw Error(ErrorCode::Validation, "unknown event kind '" + std::string(text) + "'", "kind");
}

std::string_view to_string(EffectKind kind) { return name_of(kEffectNames, kind); }

EffectKind effect_kind_from_string(std::string_view text) {
  if (auto k = value_of(kEffectNames, text)) return *k;
  throw Error(ErrorCode::Configuration, "unknown effect kind '" + std::string(text) + "'", "effect_kind");
}

std::string_view to_string(Channel c) { return name_of(kChannelNames, c); }

Channel channel_from_string(std::string_view text) {
  if (auto c = value_of(kChannelNames, text)) return *c;
  throw Error(ErrorCode::Configuration, "unknown channel '" + std::string(text) + "'", "channel");
}

Json ElementEffect::to_json() const {
  return Json{{"kind", to_string(kind)},
              {"details", details},
              {"caused_by", caused_by},
              {"element", element ? Json(*element) : Json(nullptr)},
              {"surfaced", surfaced}};
}

Json GamificationState::to_json() const {
  return Json{{"learner_id", learner_id},
              {"course_id", course_id},
              {"best_points", best_points},
              {"attempts", attempts},
              {"points_total", points_total},
              {"points_reached_at", points_reached_at ? Json(points_reached_at->seconds) : Json(nullptr)},
              {"steps", {{"completed", steps.completed}, {"total", steps.total}}},
              {"badges", badges},
              {"gates_opened", gates_opened},
              {"last_event_at", last_event_at ? Json(last_event_at->seconds) : Json(nullptr)},
              {"events_applied", events_applied}};
}

BadgeCatalog::BadgeCatalog(std::vector<Badge> badges) : badges_(std::move(badges)) {
  std::set<std::string> ids;
  std::set<std::string> triggers;
  for (const auto& b : badges_) {
    if (!ids.insert(b.badge_id).second) {
      throw Error(ErrorCode::Configuration, "duplicate badge id '" + b.badge_id + "'", "badge_id");
    }
    if (b.trigger != "topic_completed" && b.trigger != "milestone_quiz" && b.trigger != "course_completed") {
      throw Error(ErrorCode::Configuration, "unknown badge trigger '" + b.trigger + "'", "trigger");
    }
    if (!triggers.insert(b.trigger).second) {
      throw Error(ErrorCode::Configuration, "two badges share trigger '" + b.trigger + "'", "trigger");
    }
  }
}

BadgeCatalog BadgeCatalog::from_json(const Json& doc) {
  std::vector<Badge> badges;
  for (const auto& b : doc.at("badges")) {
    badges.push_back(Badge{b.at("badge_id").get<std::string>(), b.value("name", ""), b.at("trigger").get<std::string>(),
                           b.value("icon", "")});
  }
  return BadgeCatalog(std::move(badges));
}

BadgeCatalog BadgeCatalog::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

const BadgeCatalog& BadgeCatalog::standard() {
  static const BadgeCatalog catalog = load(data_file("badges.json"));
  return catalog;
}

const Badge* BadgeCatalog::for_trigger(std::string_view trigger) const {
  for (const auto& b : badges_) {
    if (b.trigger == trigger) return &b;
  }
  return nullptr;
}

ReduceOutput reduce(const ActivityEvent& event, std::span<const ElementId> active, const GamificationState& state,
                    const BadgeCatalog& badges) {
  validate_event(event, state);
  ReduceOutput out{{}, state};
  GamificationState& next = out.state;
  EffectBuilder fx(event, active);
  const auto& p = event.payload;

  switch (event.kind) {
    case EventKind::Enrolled:
      next.learner_id = event.learner_id;
      next.course_id = event.course_id;
      update_progress(fx, next, p.steps);
      break;

    case EventKind::QuizAttempted: {
      const auto& result = *p.result;
      ++next.attempts[p.node_id];
      int& best = next.best_points[p.node_id];
      const int delta = std::max(0, result.points - best);
      if (delta > 0) {
        best = result.points;
        next.points_total += delta;
        next.points_reached_at = event.occurred_at;
        fx.add(EffectKind::PointsAwarded,
               Json{{"points", delta}, {"quiz_id", p.node_id}, {"points_total", next.points_total}}, elements::kPoints);
        if (has(active, elements::kCompetition)) {
          fx.add(EffectKind::LeaderboardUpdated, Json{{"points_total", next.points_total}}, elements::kCompetition);
        }
      }
      for (const auto& gate : p.gates_opened) {
        if (next.gates_opened.insert(gate).second) {
          fx.add(EffectKind::GateOpened, Json{{"topic_id", gate}, {"points_total", next.points_total}},
                 elements::kEconomy);
        }
      }
      if (p.milestone && p.quiz_newly_completed && has(active, elements::kAcknowledgement)) {
        grant_badge(fx, next, badges, "milestone_quiz", p.node_id);
      }
      if (has(active, elements::kStats)) {
        fx.add(EffectKind::VariantApplied,
               Json{{"variant", "stats_feed"},
                    {"quiz_id", p.node_id},
                    {"attempts", next.attempts[p.node_id]},
                    {"percentage", result.percentage},
                    {"best_points", best},
                    {"points_total", next.points_total}},
               elements::kStats);
      }
      update_progress(fx, next, p.steps);
      if (!result.passed) {
        fx.add(EffectKind::NotificationQueued,
               Json{{"type", "retake_reminder"}, {"quiz_id", p.node_id}, {"percentage", result.percentage}},
               std::nullopt);
      } else if (p.quiz_newly_completed) {
        fx.add(EffectKind::NotificationQueued,
               Json{{"type", "quiz_passed"}, {"quiz_id", p.node_id}, {"percentage", result.percentage}}, std::nullopt);
      }
      break;
    }

    case EventKind::LessonCompleted:
      update_progress(fx, next, p.steps);
      break;

    case EventKind::TopicCompleted:
      if (has(active, elements::kAcknowledgement)) grant_badge(fx, next, badges, "topic_completed", p.node_id);
      break;

    case EventKind::CourseCompleted:
      if (has(active, elements::kAcknowledgement)) grant_badge(fx, next, badges, "course_completed", p.node_id);
      fx.add(EffectKind::NotificationQueued, Json{{"type", "course_completed"}, {"course_id", event.course_id}},
             std::nullopt);
      break;

    case EventKind::ContentViewed:
      if (p.variant_tag && has(active, elements::kSensation)) {
        fx.add(EffectKind::VariantApplied, Json{{"variant", *p.variant_tag}, {"node_id", p.node_id}},
               elements::kSensation);
      }
      if (!p.alternate_paths.empty() && has(active, elements::kChoice)) {
        fx.add(EffectKind::VariantApplied,
               Json{{"variant", kAlternatePathTag}, {"node_id", p.node_id}, {"paths", p.alternate_paths}},
               elements::kChoice);
      }
      if (p.activity_kind && (*p.activity_kind == ActivityKind::Puzzle || *p.activity_kind == ActivityKind::Matching) &&
          has(active, elements::kPuzzle)) {
        fx.add(EffectKind::VariantApplied, Json{{"variant", to_string(*p.activity_kind)}, {"node_id", p.node_id}},
               elements::kPuzzle);
      }
      if (p.timer_limit_s && has(active, elements::kTimePressure)) {
        fx.add(EffectKind::TimerStarted, Json{{"quiz_id", p.node_id}, {"time_limit_s", *p.timer_limit_s}},
               elements::kTimePressure);
      }
      break;
  }

  next.last_event_at = event.occurred_at;
  ++next.events_applied;
  out.effects = fx.take();
  return out;
}

ProgressFraction progress_fraction(const StepCounter& steps) {
  if (steps.total <= 0) return ProgressFraction{steps.completed, steps.total, 0};
  return ProgressFraction{steps.completed, steps.total,
                          static_cast<int>(round_half_up_div(100LL * steps.completed, steps.total))};
}

void Leaderboard::record(const std::string& learner_id, int points_total, Timestamp at) {
  history_.push_back(Update{learner_id, points_total, at});
}

std::vector<LeaderboardRow> Leaderboard::rows(std::optional<Timestamp> as_of) const {
  std::map<std::string, LeaderboardRow> latest;
  for (const auto& u : history_) {
    if (as_of && u.at > *as_of) continue;
    auto& row = latest[u.learner_id];
    if (row.learner_id.empty() || row.points_total != u.points_total) {
      row = LeaderboardRow{u.learner_id, u.points_total, 0, u.at};
    }
  }
  std::vector<LeaderboardRow> out;
  out.reserve(latest.size());
  for (auto& [_, row] : latest) out.push_back(row);
  std::sort(out.begin(), out.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
    if (a.points_total != b.points_total) return a.points_total > b.points_total;
    if (a.tie_key != b.tie_key) return a.tie_key < b.tie_key;
    return a.learner_id < b.learner_id;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

TimerHandle TimerService::start(const std::string& learner_id, const Quiz& quiz, std::span<const ElementId> active,
                                Timestamp at) {
  if (!quiz.time_limit_s) {
    throw Error(ErrorCode::Configuration, "quiz " + quiz.quiz_id + " has no time limit", "time_limit_s");
  }
  if (!has(active, elements::kTimePressure)) {
    throw Error(ErrorCode::Precondition, "time pressure is not active for this learner", "quiz_id");
  }
  TimerHandle handle{learner_id, quiz.quiz_id, at, Timestamp{at.seconds + *quiz.time_limit_s}};
  timers_[{learner_id, quiz.quiz_id}] = handle;
  return handle;
}

std::optional<TimerHandle> TimerService::running(const std::string& learner_id, const std::string& quiz_id) const {
  auto it = timers_.find({learner_id, quiz_id});
  if (it == timers_.end()) return std::nullopt;
  return it->second;
}

bool TimerService::cancel(const std::string& learner_id, const std::string& quiz_id) {
  return timers_.erase({learner_id, quiz_id}) > 0;
}

std::vector<TimerHandle> TimerService::handles() const {
  std::vector<TimerHandle> out;
  for (const auto& [_, h] : timers_) out.push_back(h);
  return out;
}

AttemptResult TimerService::expire(const std::string& learner_id, const Quiz& quiz,
                                   std::span<const std::optional<std::string>> current_answers, Timestamp at,
                                   int pass_threshold_pct) {
  auto handle = running(learner_id, quiz.quiz_id);
  if (!handle) throw Error(ErrorCode::Precondition, "no timer running for quiz " + quiz.quiz_id, "quiz_id");
  if (at < handle->deadline) {
    throw Error(ErrorCode::Precondition, "timer for quiz " + quiz.quiz_id + " has not expired", "at");
  }
  auto result = grade_quiz(quiz, current_answers, pass_threshold_pct);
  cancel(learner_id, quiz.quiz_id);
  return result;
}

ChannelRouting::ChannelRouting(std::map<EffectKind, std::vector<Channel>> routes) : routes_(std::move(routes)) {}

ChannelRouting ChannelRouting::from_json(const Json& doc) {
  std::map<EffectKind, std::vector<Channel>> routes;
  for (const auto& [kind, channels] : doc.at("routes").items()) {
    auto& list = routes[effect_kind_from_string(kind)];
    for (const auto& c : channels) list.push_back(channel_from_string(c.get<std::string>()));
  }
  return ChannelRouting(std::move(routes));
}

ChannelRouting ChannelRouting::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

const ChannelRouting& ChannelRouting::standard() {
  static const ChannelRouting routing = load(data_file("channels.json"));
  return routing;
}

const std::vector<Channel>& ChannelRouting::channels(EffectKind kind) const {
  static const std::vector<Channel> none;
  auto it = routes_.find(kind);
  return it == routes_.end() ? none : it->second;
}

Json FeedbackRecord::to_json() const {
  return Json{{"channel", to_string(channel)}, {"effect", to_string(effect_kind)}, {"caused_by", caused_by}, {"body", body}};
}

namespace {

std::string feedback_body(const ElementEffect& e) {
  const auto& d = e.details;
  switch (e.kind) {
    case EffectKind::PointsAwarded:
      return "You earned " + std::to_string(d.value("points", 0)) + " points (total " +
             std::to_string(d.value("points_total", 0)) + ")";
    case EffectKind::BadgeGranted:
      return "Badge earned: " + d.value("name", d.value("badge_id", std::string{}));
    case EffectKind::ProgressUpdated:
      return std::to_string(d.value("percent", 0)) + "% COMPLETE " + std::to_string(d.value("completed", 0)) + "/" +
             std::to_string(d.value("total", 0)) + " Steps";
    case EffectKind::LeaderboardUpdated:
      return "Leaderboard updated: " + std::to_string(d.value("points_total", 0)) + " points";
    case EffectKind::GateOpened:
      return "New topic unlocked: " + d.value("topic_id", std::string{});
    case EffectKind::TimerStarted:
      return "Timer started: " + std::to_string(d.value("time_limit_s", 0)) + "s";
    case EffectKind::NotificationQueued: {
      auto type = d.value("type", std::string{});
      if (type == "retake_reminder") return "Quiz " + d.value("quiz_id", std::string{}) + " not passed yet: retake it";
      if (type == "quiz_passed") return "Quiz " + d.value("quiz_id", std::string{}) + " passed";
      if (type == "course_completed") return "Course completed: your certificate is ready";
      return type;
    }
    case EffectKind::VariantApplied:
      return "Variant applied: " + d.value("variant", std::string{});
  }
  return {};
}

}  // namespace

std::vector<FeedbackRecord> queue_feedback(const ElementEffect& effect, const ChannelRouting& routing) {
  std::vector<FeedbackRecord> out;
  if (!effect.surfaced) return out;
  if (effect.kind == EffectKind::PointsAwarded && effect.details.value("points", 0) == 0) return out;
  const auto body = feedback_body(effect);
  for (auto channel : routing.channels(effect.kind)) {
    out.push_back(FeedbackRecord{channel, effect.kind, effect.caused_by, body});
  }
  return out;
}

}  // namespace coregame
