#include "coregame/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace coregame {

namespace {

// Distribution helpers built directly on mt19937_64 output: its sequence is
// fixed by the standard, whereas std::*_distribution is not, so these keep
// cohorts byte-identical across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    gen_.seed(seq);
  }

  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(gen_() % span);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(between(0, static_cast<std::int64_t>(i) - 1))]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

constexpr std::uint64_t kAssignmentStream = ~std::uint64_t{0};

struct Agent {
  std::string learner_id;
  CognitiveCore core;
  std::optional<std::string> gender;
  const AgentProfile* profile;
};

std::map<int, Option> assessment_for(CognitiveCore core, const Instrument& instrument, Rng& rng) {
  const bool sensing = core == CognitiveCore::ST || core == CognitiveCore::SF;
  const bool feeling = core == CognitiveCore::SF || core == CognitiveCore::NF;
  std::map<int, Option> answers;
  for (auto d : {Dichotomy::Perception, Dichotomy::Judgement}) {
    const Pole target = d == Dichotomy::Perception ? (sensing ? Pole::S : Pole::N) : (feeling ? Pole::F : Pole::T);
    std::vector<int> ids;
    for (const auto& item : instrument.items()) {
      if (item.dichotomy == d) ids.push_back(item.item_id);
    }
    rng.shuffle(ids);
    // Up to a minority of dissenting answers keeps the majority intact.
    const auto dissent = rng.between(0, static_cast<std::int64_t>((ids.size() - 1) / 2));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& item = instrument.item(ids[i]);
      const Option agree = item.pole_a == target ? Option::A : Option::B;
      const Option other = agree == Option::A ? Option::B : Option::A;
      answers[ids[i]] = static_cast<std::int64_t>(i) < dissent ? other : agree;
    }
  }
  return answers;
}

int think_time(const AgentProfile& p, Rng& rng) {
  return static_cast<int>(std::max<std::int64_t>(5, p.pacing_mean_s + rng.between(-p.pacing_jitter_s, p.pacing_jitter_s)));
}

class AgentRun {
 public:
  AgentRun(Engine& engine, const CourseGraph& course, const Agent& agent, Rng& rng, Timestamp start)
      : engine_(engine), course_(course), agent_(agent), rng_(rng), now_(start) {}

  /// Returns a liveness failure description, if any.
  std::optional<std::string> run(bool& completed, std::optional<EvaluationResponse>& evaluation,
                                 const Instrument& instrument, double response_rate) {
    completed = false;
    engine_.enroll(agent_.learner_id, course_.course_id, assessment_for(agent_.core, instrument, rng_), tick(60));
    std::set<std::string> lessons_seen;
    while (true) {
      const auto state = engine_.enrollment(agent_.learner_id, course_.course_id);
      auto next = next_quiz(state);
      if (!next) {
        if (all_topics_completed(course_, state)) break;
        if (state.pending_gates.empty()) return "no reachable quiz and no pending gate";
        if (!raise_points(state)) {
          return "gate " + *state.pending_gates.begin() + " cannot be opened with " +
                 std::to_string(state.points_total()) + " points";
        }
        continue;
      }
      const auto ref = course_.require(*next);
      const auto& lesson = course_.lesson_of(ref);
      if (lessons_seen.insert(lesson.lesson_id).second) {
        engine_.view(agent_.learner_id, course_.course_id, lesson.lesson_id, tick(think_time(*agent_.profile, rng_)));
      }
      if (!pass_quiz(course_.quiz(*next))) return std::nullopt;  // persistence exhausted: the agent stalls
    }
    engine_.complete(agent_.learner_id, course_.course_id, tick(30));
    completed = true;
    if (!agent_.profile->evaluation_means.empty() && rng_.chance(response_rate)) {
      EvaluationResponse r{agent_.learner_id, agent_.core, {}, tick(300)};
      for (const auto& [id, mean] : agent_.profile->evaluation_means) {
        const double base = std::floor(mean);
        int v = static_cast<int>(base) + (rng_.chance(mean - base) ? 1 : 0);
        r.answers[id] = std::clamp(v, 1, 5);
      }
      engine_.evaluate(agent_.learner_id, course_.course_id, r.answers, r.submitted_at);
      evaluation = std::move(r);
    }
    return std::nullopt;
  }

 private:
  Timestamp tick(int seconds) {
    now_.seconds += seconds;
    return now_;
  }

  std::optional<std::string> next_quiz(const LearnerEnrollment& state) const {
    for (const auto& id : course_.quiz_ids()) {
      if (state.state(id) == NodeState::Unlocked) return id;
    }
    return std::nullopt;
  }

  // Retakes completed quizzes whose best score is below the maximum.
  bool raise_points(const LearnerEnrollment& state) {
    for (const auto& id : course_.quiz_ids()) {
      const auto& quiz = course_.quiz(id);
      auto it = state.best_points.find(id);
      const int best = it == state.best_points.end() ? 0 : it->second;
      if (state.state(id) != NodeState::Completed || best >= quiz.points_total) continue;
      if (retakes_[id] >= agent_.profile->persistence) continue;
      ++retakes_[id];
      take(quiz);
      return true;
    }
    return false;
  }

  bool pass_quiz(const Quiz& quiz) {
    for (int attempt = 0; attempt < agent_.profile->persistence; ++attempt) {
      if (take(quiz).passed) return true;
    }
    return false;
  }

  AttemptResult take(const Quiz& quiz) {
    const auto& id = agent_.learner_id;
    auto viewed = engine_.view(id, course_.course_id, quiz.quiz_id, tick(5));
    if (quiz.activity_kind == ActivityKind::Essay) {
      std::vector<int> scores;
      int spent = 0;
      for (const auto& q : quiz.questions) {
        scores.push_back(rng_.chance(agent_.profile->accuracy) ? q.max_score
                                                              : static_cast<int>(rng_.between(0, q.max_score - 1)));
        spent += think_time(*agent_.profile, rng_) * 4;
      }
      return engine_.score(id, course_.course_id, quiz.quiz_id, scores, spent, tick(spent)).result;
    }
    std::vector<std::optional<std::string>> answers;
    std::vector<int> times;
    int spent = 0;
    for (const auto& q : quiz.questions) {
      answers.push_back(rng_.chance(agent_.profile->accuracy) ? q.answer : std::optional<std::string>("?"));
      times.push_back(think_time(*agent_.profile, rng_));
      spent += times.back();
    }
    if (viewed.timer && viewed.timer->started_at.seconds + spent > viewed.timer->deadline.seconds) {
      // The clock runs out: whatever was answered by then is submitted.
      int elapsed = 0;
      for (std::size_t i = 0; i < answers.size(); ++i) {
        elapsed += times[i];
        if (viewed.timer->started_at.seconds + elapsed > viewed.timer->deadline.seconds) answers[i].reset();
      }
      now_ = std::max(now_, viewed.timer->deadline);
      return engine_.expire(id, course_.course_id, quiz.quiz_id, answers, now_).result;
    }
    return engine_.attempt(id, course_.course_id, quiz.quiz_id, answers, spent, tick(spent)).result;
  }

  Engine& engine_;
  const CourseGraph& course_;
  const Agent& agent_;
  Rng& rng_;
  Timestamp now_;
  std::map<std::string, int> retakes_;
};

std::set<ElementId> deployed_elements(const ElementMapping& mapping, const std::map<CognitiveCore, int>& counts) {
  std::set<ElementId> out;
  for (const auto& [core, n] : counts) {
    if (n == 0) continue;
    for (const auto& e : mapping.at(core)) out.insert(e);
  }
  return out;
}

}  // namespace

void AgentProfile::validate() const {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw Error(ErrorCode::Configuration, "accuracy must lie in [0, 1]", "accuracy");
  if (persistence < 1) throw Error(ErrorCode::Configuration, "persistence must be at least 1", "persistence");
  if (pacing_mean_s < 0 || pacing_jitter_s < 0) throw Error(ErrorCode::Configuration, "pacing must be non-negative", "pacing");
  for (const auto& [id, m] : evaluation_means) {
    if (!(m >= 1.0 && m <= 5.0)) {
      throw Error(ErrorCode::Configuration, "evaluation mean for statement " + std::to_string(id) + " outside [1, 5]",
                  "evaluation_means");
    }
  }
}

AgentProfile AgentProfile::from_json(const Json& doc, const AgentProfile& base) {
  AgentProfile p = base;
  p.accuracy = doc.value("accuracy", p.accuracy);
  p.persistence = doc.value("persistence", p.persistence);
  if (doc.contains("pacing")) {
    p.pacing_mean_s = doc["pacing"].value("mean_s", p.pacing_mean_s);
    p.pacing_jitter_s = doc["pacing"].value("jitter_s", p.pacing_jitter_s);
  }
  if (doc.contains("evaluation_means")) {
    p.evaluation_means.clear();
    for (const auto& [id, m] : doc["evaluation_means"].items()) p.evaluation_means[std::stoi(id)] = m.get<double>();
  }
  p.validate();
  return p;
}

const AgentProfile& CohortConfig::profile(CognitiveCore core) const {
  auto it = profiles.find(core);
  return it == profiles.end() ? default_profile : it->second;
}

void CohortConfig::validate() const {
  int n = 0;
  for (const auto& [core, c] : counts) {
    if (c < 0) throw Error(ErrorCode::Configuration, "negative count for " + std::string(to_string(core)), "counts");
    n += c;
  }
  int g = 0;
  for (const auto& [name, c] : gender_counts) {
    if (c < 0) throw Error(ErrorCode::Configuration, "negative gender count for " + name, "gender_counts");
    g += c;
  }
  if (!gender_counts.empty() && g != n) {
    throw Error(ErrorCode::Configuration, "gender counts must sum to the cohort size", "gender_counts");
  }
  if (!(response_rate >= 0.0 && response_rate <= 1.0)) {
    throw Error(ErrorCode::Configuration, "response_rate must lie in [0, 1]", "response_rate");
  }
  default_profile.validate();
  for (const auto& [_, p] : profiles) p.validate();
}

CohortConfig CohortConfig::from_json(const Json& doc, const std::filesystem::path& base_dir) {
  CohortConfig c;
  c.seed = doc.at("seed").get<std::uint64_t>();
  std::filesystem::path course = doc.value("course", "course_instructional_innovation.json");
  if (course.is_relative()) {
    if (!base_dir.empty() && std::filesystem::exists(base_dir / course)) {
      course = base_dir / course;
    } else {
      course = data_dir() / course;
    }
  }
  c.course_path = course;
  if (doc.contains("start_date")) c.start_date = parse_iso_date(doc["start_date"].get<std::string>());
  c.first_user_id = doc.value("first_user_id", 1);
  for (const auto& [core, n] : doc.at("counts").items()) c.counts[core_from_string(core)] = n.get<int>();
  if (doc.contains("default_profile")) c.default_profile = AgentProfile::from_json(doc["default_profile"], AgentProfile{});
  if (doc.contains("profiles")) {
    for (const auto& [core, p] : doc["profiles"].items()) {
      c.profiles[core_from_string(core)] = AgentProfile::from_json(p, c.default_profile);
    }
  }
  if (doc.contains("gender_counts")) c.gender_counts = doc["gender_counts"].get<std::map<std::string, int>>();
  c.response_rate = doc.value("response_rate", 1.0);
  c.validate();
  return c;
}

CohortConfig CohortConfig::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

std::string journal_to_jsonl(std::span<const JournalEntry> journal) {
  std::string out;
  for (const auto& e : journal) out += e.to_json().dump() + "\n";
  return out;
}

std::vector<JournalEntry> journal_from_jsonl(std::string_view text) {
  std::vector<JournalEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    Json doc;
    try {
      doc = Json::parse(line);
    } catch (const Json::exception&) {
      throw Error(ErrorCode::Replay, "journal line " + std::to_string(n) + " is not JSON", "journal");
    }
    out.push_back(JournalEntry::from_json(doc));
  }
  return out;
}

std::unique_ptr<Engine> replay(std::span<const JournalEntry> journal, std::span<const CourseGraph> courses,
                               EngineOptions options) {
  auto engine = std::make_unique<Engine>(std::move(options));
  for (const auto& c : courses) engine->add_course(c);
  engine->replay(journal);
  return engine;
}

std::string export_logs_csv(const Engine& engine, const std::string& course_id) {
  auto records = export_order(engine.attempt_log(course_id).records());
  return attempts_to_csv(records);
}

CohortResult run_cohort(const CohortConfig& config, const RunOptions& options) {
  config.validate();
  const CourseGraph course = CourseGraph::load(config.course_path);
  const Instrument& instrument = options.engine.instrument ? *options.engine.instrument : Instrument::standard();
  const std::vector<CourseGraph> courses{course};

  auto engine = std::make_unique<Engine>(options.engine);
  engine->add_course(course);

  // Core and gender labels are dealt to user ids by a seeded shuffle.
  std::vector<CognitiveCore> cores;
  for (auto core : kAllCores) {
    auto it = config.counts.find(core);
    if (it != config.counts.end()) cores.insert(cores.end(), static_cast<std::size_t>(it->second), core);
  }
  std::vector<std::optional<std::string>> genders(cores.size());
  {
    Rng assign(config.seed, kAssignmentStream);
    assign.shuffle(cores);
    std::size_t i = 0;
    for (const auto& [name, c] : config.gender_counts) {
      for (int k = 0; k < c; ++k) genders[i++] = name;
    }
    assign.shuffle(genders);
  }

  CohortResult result;
  std::vector<EvaluationResponse> responses;
  const Timestamp day0 = from_date(config.start_date);
  for (std::size_t i = 0; i < cores.size(); ++i) {
    if (options.restart_after && i == *options.restart_after) {
      auto journal = engine->journal();
      engine = replay(journal, courses, options.engine);
    }
    Agent agent{std::to_string(config.first_user_id + static_cast<int>(i)), cores[i], genders[i],
                &config.profile(cores[i])};
    Rng rng(config.seed, i);
    const Timestamp start{day0.seconds + rng.between(0, 27) * 86400 + 8 * 3600 + rng.between(0, 36000)};
    AgentRun run(*engine, course, agent, rng, start);
    bool completed = false;
    std::optional<EvaluationResponse> evaluation;
    if (auto failure = run.run(completed, evaluation, instrument, config.response_rate)) {
      result.liveness_failures.push_back("learner " + agent.learner_id + ": " + *failure);
    }
    if (evaluation) responses.push_back(std::move(*evaluation));
    result.participants.push_back(Participant{agent.learner_id, agent.core, agent.gender, completed});
    for (const auto& effect : engine->effects(agent.learner_id, course.course_id)) {
      if (effect.surfaced && effect.element) result.surfaced_elements.insert(*effect.element);
    }
  }

  result.logs_csv = export_logs_csv(*engine, course.course_id);
  const auto stored = engine->evaluations(course.course_id);
  result.evaluations_csv = evaluations_to_csv(stored);
  result.summary = cohort_summary(result.participants, stored);
  result.journal = engine->journal();
  result.fingerprint = engine->fingerprint();
  for (const auto& e : deployed_elements(engine->mapping(), config.counts)) {
    if (!result.surfaced_elements.contains(e)) result.uncovered_elements.push_back(e);
  }
  result.replay_consistent = replay(result.journal, courses, options.engine)->fingerprint() == result.fingerprint;

  result.report = Json{{"seed", config.seed},
                       {"course_id", course.course_id},
                       {"cohort", result.summary.to_json()},
                       {"attempts", engine->attempt_log(course.course_id).size()},
                       {"evaluation", stats_report(stored)},
                       {"liveness_failures", result.liveness_failures},
                       {"surfaced_elements", result.surfaced_elements},
                       {"uncovered_elements", result.uncovered_elements},
                       {"replay_consistent", result.replay_consistent}};
  return result;
}

}  // namespace coregame
