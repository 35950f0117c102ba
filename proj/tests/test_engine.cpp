#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "coregame/engine.hpp"

using namespace coregame;

namespace {

const CourseGraph& course() {
  static const CourseGraph c = CourseGraph::load(data_file("course_instructional_innovation.json"));
  return c;
}

std::map<int, Option> assessment_for(CognitiveCore core) {
  const bool s = core == CognitiveCore::ST || core == CognitiveCore::SF;
  const bool f = core == CognitiveCore::SF || core == CognitiveCore::NF;
  std::map<int, Option> out;
  for (const auto& item : Instrument::standard().items()) {
    const Pole want = item.dichotomy == Dichotomy::Perception ? (s ? Pole::S : Pole::N) : (f ? Pole::F : Pole::T);
    out[item.item_id] = item.pole_a == want ? Option::A : Option::B;
  }
  return out;
}

std::vector<std::optional<std::string>> correct(const Quiz& q, int right) {
  std::vector<std::optional<std::string>> out;
  for (std::size_t i = 0; i < q.questions.size(); ++i) {
    out.emplace_back(static_cast<int>(i) < right ? *q.questions[i].answer : std::string("zz"));
  }
  return out;
}

std::map<int, int> all_fours() {
  std::map<int, int> out;
  for (int s = 1; s <= 17; ++s) out[s] = 4;
  return out;
}

std::unique_ptr<Engine> make_engine(EngineOptions options = {}) {
  auto e = std::make_unique<Engine>(std::move(options));
  e->add_course(course());
  return e;
}

// Passes every quiz in order; economy learners always have the points
// because each pass is worth at least the next gate's share.
std::int64_t finish(Engine& engine, const std::string& learner, std::int64_t t) {
  for (const auto& id : course().quiz_ids()) {
    const auto& q = course().quiz(id);
    const auto lesson = course().lesson_of(course().require(id)).lesson_id;
    engine.view(learner, "31285", lesson, Timestamp{++t});
    engine.view(learner, "31285", id, Timestamp{++t});
    if (q.activity_kind == ActivityKind::Essay) {
      std::vector<int> full;
      for (const auto& item : q.questions) full.push_back(item.max_score);
      engine.score(learner, "31285", id, full, 60, Timestamp{++t});
    } else {
      engine.attempt(learner, "31285", id, correct(q, static_cast<int>(q.questions.size())), 30, Timestamp{++t});
    }
  }
  engine.complete(learner, "31285", Timestamp{++t});
  return t;
}

bool contains(const std::vector<ElementId>& v, const ElementId& x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace

TEST(Enroll, CoreAndActiveTuple) {
  auto engine = make_engine();
  std::map<int, Option> all_b;
  for (const auto& item : Instrument::standard().items()) all_b[item.item_id] = Option::B;
  auto out = engine->enroll("7", "31285", all_b, Timestamp{1});
  EXPECT_EQ(out.core, CognitiveCore::NT);
  EXPECT_EQ(out.active, deployed_mapping().at(CognitiveCore::NT));
  EXPECT_EQ(engine->enrollment("7", "31285").variant_tags, course().variant_tags(CognitiveCore::NT));
  try {
    engine->enroll("7", "31285", all_b, Timestamp{2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Conflict);
  }
  EXPECT_THROW(engine->enroll("8", "nope", all_b, Timestamp{2}), Error);
  EXPECT_THROW(engine->enroll("a@b", "31285", all_b, Timestamp{2}), Error);
  EXPECT_EQ(engine->journal().size(), 1U);
}

TEST(Enroll, AssessmentHelperHitsEveryCore) {
  for (auto c : kAllCores) {
    AssessmentResponse r{"x", assessment_for(c), {}};
    EXPECT_EQ(determine_cognitive_core(r), c);
  }
}

TEST(Attempt, TwoOfFourteenInState) {
  auto engine = make_engine();
  engine->enroll("1", "31285", assessment_for(CognitiveCore::NF), Timestamp{1});
  auto out = engine->attempt("1", "31285", "30381", correct(course().quiz("30381"), 1), 20, Timestamp{2});
  EXPECT_TRUE(out.result.passed);
  auto state = engine->state_json("1", "31285");
  EXPECT_EQ(state["progress"]["completed"], 2);
  EXPECT_EQ(state["progress"]["total"], 14);
  EXPECT_EQ(state["progress"]["percent"], 14);
  bool dashboard = false;
  for (const auto& f : out.feedback) dashboard |= f.body == "14% COMPLETE 2/14 Steps";
  EXPECT_TRUE(dashboard);
}

TEST(Attempt, LockedQuizIsAccessError) {
  auto engine = make_engine();
  engine->enroll("1", "31285", assessment_for(CognitiveCore::NF), Timestamp{1});
  try {
    engine->attempt("1", "31285", "30386", correct(course().quiz("30386"), 2), 20, Timestamp{2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Access);
  }
  EXPECT_EQ(engine->journal().size(), 1U);
  EXPECT_EQ(engine->attempt_log("31285").size(), 0U);
}

TEST(Attempt, LogRowMatchesGrade) {
  auto engine = make_engine();
  engine->enroll("141", "31285", assessment_for(CognitiveCore::ST), Timestamp{1});
  engine->attempt("141", "31285", "30381", correct(course().quiz("30381"), 0), 45, Timestamp{86400 * 19000});
  const auto log = engine->attempt_log("31285");
  const auto& row = log.records().at(0);
  EXPECT_EQ(row.user_id, "141");
  EXPECT_EQ(row.percentage, 0);
  EXPECT_FALSE(row.passed);
  EXPECT_EQ(row.time_spent_s, 45);
  EXPECT_EQ(row.course_id, "31285");
}

TEST(Attempt, TimeMustNotGoBackwards) {
  auto engine = make_engine();
  engine->enroll("1", "31285", assessment_for(CognitiveCore::NF), Timestamp{10});
  EXPECT_THROW(engine->view("1", "31285", "l1", Timestamp{5}), Error);
}

TEST(Timer, OnlyTimePressureLearnersGetTimers) {
  auto engine = make_engine();
  engine->enroll("nt", "31285", assessment_for(CognitiveCore::NT), Timestamp{1});
  engine->enroll("sf", "31285", assessment_for(CognitiveCore::SF), Timestamp{1});
  for (const char* who : {"nt", "sf"}) {
    engine->attempt(who, "31285", "30381", correct(course().quiz("30381"), 1), 20, Timestamp{2});
  }
  auto nt = engine->view("nt", "31285", "30386", Timestamp{100});
  auto sf = engine->view("sf", "31285", "30386", Timestamp{100});
  ASSERT_TRUE(nt.timer.has_value());
  EXPECT_EQ(nt.timer->deadline, Timestamp{220});
  EXPECT_FALSE(sf.timer.has_value());
  EXPECT_EQ(engine->state_json("nt", "31285")["widgets"]["timer"], true);
  EXPECT_EQ(engine->state_json("sf", "31285")["widgets"]["timer"], false);
}

TEST(Timer, ExpiryAutoSubmitsPartialAnswers) {
  auto engine = make_engine();
  engine->enroll("nt", "31285", assessment_for(CognitiveCore::NT), Timestamp{1});
  engine->attempt("nt", "31285", "30381", correct(course().quiz("30381"), 1), 20, Timestamp{2});
  engine->view("nt", "31285", "30386", Timestamp{100});
  const auto& q = course().quiz("30386");
  std::vector<std::optional<std::string>> partial{q.questions[0].answer, std::nullopt};
  try {
    engine->expire("nt", "31285", "30386", partial, Timestamp{150});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Precondition);
  }
  auto out = engine->expire("nt", "31285", "30386", partial, Timestamp{220});
  EXPECT_EQ(out.result, grade_quiz(q, partial, 80));
  EXPECT_EQ(out.result.score, 1);
  EXPECT_EQ(engine->attempt_log("31285").records().back().time_spent_s, 120);
  EXPECT_THROW(engine->expire("nt", "31285", "30386", partial, Timestamp{400}), Error);
}

TEST(Timer, SubmitBeforeExpiryGradesOnce) {
  auto engine = make_engine();
  engine->enroll("nt", "31285", assessment_for(CognitiveCore::NT), Timestamp{1});
  engine->attempt("nt", "31285", "30381", correct(course().quiz("30381"), 1), 20, Timestamp{2});
  engine->view("nt", "31285", "30386", Timestamp{100});
  engine->attempt("nt", "31285", "30386", correct(course().quiz("30386"), 2), 20, Timestamp{120});
  EXPECT_THROW(engine->expire("nt", "31285", "30386", {}, Timestamp{300}), Error);
  EXPECT_EQ(engine->attempt_log("31285").size(), 2U);
}

TEST(Complete, AwardSurveyAndEvaluation) {
  auto engine = make_engine();
  engine->enroll("1", "31285", assessment_for(CognitiveCore::SF), Timestamp{1});
  try {
    engine->evaluate("1", "31285", all_fours(), Timestamp{2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Precondition);
  }
  auto t = finish(*engine, "1", 10);
  auto again = engine->complete("1", "31285", Timestamp{++t});
  EXPECT_FALSE(again.award.newly_issued);
  engine->evaluate("1", "31285", all_fours(), Timestamp{++t});
  EXPECT_THROW(engine->evaluate("1", "31285", all_fours(), Timestamp{++t}), Error);
  ASSERT_EQ(engine->evaluations("31285").size(), 1U);
  EXPECT_EQ(engine->evaluations("31285")[0].core, CognitiveCore::SF);
  auto bad = all_fours();
  bad[3] = 9;
  engine->enroll("2", "31285", assessment_for(CognitiveCore::SF), Timestamp{1});
  t = finish(*engine, "2", 10);
  EXPECT_THROW(engine->evaluate("2", "31285", bad, Timestamp{++t}), Error);
}

TEST(Economy, GateOpensForStLearner) {
  auto engine = make_engine();
  engine->enroll("st", "31285", assessment_for(CognitiveCore::ST), Timestamp{1});
  finish(*engine, "st", 10);
  const auto effects = engine->effects("st", "31285");
  int gates = 0;
  for (const auto& e : effects) gates += e.kind == EffectKind::GateOpened && e.surfaced;
  EXPECT_EQ(gates, 3);
}

TEST(Soundness, EveryCoreSurfacesOnlyItsTuple) {
  auto engine = make_engine();
  std::set<ElementId> surfaced;
  int i = 0;
  for (auto c : kAllCores) {
    const auto id = "u" + std::to_string(++i);
    engine->enroll(id, "31285", assessment_for(c), Timestamp{1});
    finish(*engine, id, 10);
    const auto active = engine->active_elements(id, "31285");
    for (const auto& e : engine->effects(id, "31285")) {
      if (!e.surfaced || !e.element) continue;
      EXPECT_TRUE(contains(active, *e.element)) << to_string(c) << " " << *e.element;
      surfaced.insert(*e.element);
    }
  }
  for (const auto& [core, tuple] : deployed_mapping().entries()) {
    for (const auto& el : tuple) EXPECT_TRUE(surfaced.contains(el)) << el;
  }
}

TEST(Leaderboard, RanksLearnersByPoints) {
  auto engine = make_engine();
  engine->enroll("a", "31285", assessment_for(CognitiveCore::NT), Timestamp{1});
  engine->enroll("b", "31285", assessment_for(CognitiveCore::NF), Timestamp{1});
  engine->attempt("a", "31285", "30381", correct(course().quiz("30381"), 1), 20, Timestamp{5});
  auto rows = engine->leaderboard("31285");
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[0].learner_id, "a");
  EXPECT_EQ(rows[0].points_total, 10);
  EXPECT_EQ(rows[1].points_total, 0);
  engine->attempt("b", "31285", "30381", correct(course().quiz("30381"), 1), 20, Timestamp{6});
  rows = engine->leaderboard("31285");
  EXPECT_EQ(rows[0].learner_id, "a");  // reached 10 first
  EXPECT_EQ(engine->leaderboard("31285", Timestamp{5})[1].points_total, 0);
}

TEST(Journal, ReplayRebuildsIdenticalState) {
  auto engine = make_engine();
  engine->enroll("1", "31285", assessment_for(CognitiveCore::NT), Timestamp{1});
  engine->enroll("2", "31285", assessment_for(CognitiveCore::ST), Timestamp{1});
  finish(*engine, "1", 10);
  engine->attempt("2", "31285", "30381", correct(course().quiz("30381"), 0), 20, Timestamp{50});
  engine->evaluate("1", "31285", all_fours(), Timestamp{500});

  auto journal = engine->journal();
  for (std::size_t i = 0; i < journal.size(); ++i) EXPECT_EQ(journal[i].seq, i + 1);
  auto copy = make_engine();
  copy->replay(journal);
  EXPECT_EQ(copy->fingerprint(), engine->fingerprint());
  EXPECT_EQ(copy->attempt_log("31285").to_csv(), engine->attempt_log("31285").to_csv());

  // JSON round trip of the journal itself.
  std::vector<JournalEntry> parsed;
  for (const auto& j : journal) parsed.push_back(JournalEntry::from_json(Json::parse(j.to_json().dump())));
  EXPECT_EQ(parsed, journal);
}

TEST(Journal, EmptyReplayIsInitialState) {
  auto a = make_engine();
  auto b = make_engine();
  b->replay({});
  EXPECT_EQ(a->fingerprint(), b->fingerprint());
}

TEST(Journal, RejectsGapsReorderingAndForeignEntries) {
  auto engine = make_engine();
  engine->enroll("1", "31285", assessment_for(CognitiveCore::NT), Timestamp{1});
  engine->attempt("1", "31285", "30381", correct(course().quiz("30381"), 1), 20, Timestamp{2});
  engine->view("1", "31285", "l1", Timestamp{3});
  const auto journal = engine->journal();
  auto expect_replay_error = [](std::vector<JournalEntry> entries) {
    auto fresh = make_engine();
    try {
      fresh->replay(entries);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Replay);
    }
  };
  expect_replay_error({journal[0], journal[2]});
  expect_replay_error({journal[1], journal[0]});
  auto foreign = journal;
  foreign[1].enrollment = "9@31285";
  expect_replay_error(foreign);
  auto other_course = journal;
  other_course[0].enrollment = "1@404";
  other_course[0].args["course_id"] = "404";
  expect_replay_error(other_course);
  auto unknown = journal;
  unknown[2].command = "teleport";
  expect_replay_error(unknown);
  EXPECT_THROW(JournalEntry::from_json(Json{{"seq", "x"}}), Error);
}

TEST(Journal, SinkFailureAbortsCommand) {
  EngineOptions options;
  bool fail = false;
  options.journal_sink = [&](const JournalEntry&) {
    if (fail) throw Error(ErrorCode::Configuration, "disk full", "storage");
  };
  auto engine = make_engine(std::move(options));
  engine->enroll("1", "31285", assessment_for(CognitiveCore::NT), Timestamp{1});
  const auto before = engine->fingerprint();
  fail = true;
  EXPECT_THROW(engine->attempt("1", "31285", "30381", correct(course().quiz("30381"), 1), 20, Timestamp{2}), Error);
  EXPECT_EQ(engine->fingerprint(), before);
}

TEST(Email, BadgesAreDelivered) {
  struct Capture : EmailTransport {
    std::atomic<int> sent{0};
    void deliver(const std::string&, const FeedbackRecord&) override { ++sent; }
  };
  auto capture = std::make_shared<Capture>();
  EngineOptions options;
  options.email = capture;
  auto engine = make_engine(std::move(options));
  engine->enroll("1", "31285", assessment_for(CognitiveCore::SF), Timestamp{1});
  finish(*engine, "1", 10);
  EXPECT_GT(capture->sent.load(), 0);
}

TEST(Concurrency, FiftyLearnersInParallel) {
  auto engine = make_engine();
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int i = 0; i < 50; ++i) {
    threads.emplace_back([&, i] {
      try {
        const auto id = std::to_string(1000 + i);
        engine->enroll(id, "31285", assessment_for(kAllCores[static_cast<std::size_t>(i % 4)]), Timestamp{1});
        finish(*engine, id, 10);
      } catch (const std::exception&) {
        ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(failures.load(), 0);
  EXPECT_EQ(engine->learners("31285").size(), 50U);
  EXPECT_EQ(engine->leaderboard("31285").size(), 50U);
  auto copy = make_engine();
  copy->replay(engine->journal());
  EXPECT_EQ(copy->fingerprint(), engine->fingerprint());
}

TEST(Property, RandomCommandStreamsStaySound) {
  std::mt19937_64 rng(99);
  auto engine = make_engine();
  const auto quizzes = course().quiz_ids();
  const auto nodes = course().node_ids();
  for (int learner = 0; learner < 40; ++learner) {
    const auto id = "p" + std::to_string(learner);
    const auto core = kAllCores[static_cast<std::size_t>(learner % 4)];
    std::int64_t t = 1;
    engine->enroll(id, "31285", assessment_for(core), Timestamp{t});
    for (int step = 0; step < 60; ++step) {
      t += static_cast<std::int64_t>(rng() % 200);
      try {
        if (rng() % 3 == 0) {
          engine->view(id, "31285", nodes[rng() % nodes.size()], Timestamp{t});
        } else {
          const auto& q = course().quiz(quizzes[rng() % quizzes.size()]);
          if (q.activity_kind == ActivityKind::Essay) {
            engine->score(id, "31285", q.quiz_id, std::vector<int>(q.questions.size(), static_cast<int>(rng() % 3)),
                          10, Timestamp{t});
          } else {
            engine->attempt(id, "31285", q.quiz_id,
                            correct(q, static_cast<int>(rng() % (q.questions.size() + 1))), 10, Timestamp{t});
          }
        }
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), ErrorCode::Access);
      }
    }
    const auto active = engine->active_elements(id, "31285");
    for (const auto& e : engine->effects(id, "31285")) {
      if (e.surfaced && e.element) ASSERT_TRUE(contains(active, *e.element));
    }
    for (const auto& f : engine->feedback(id, "31285")) EXPECT_FALSE(f.body.empty());
  }
  auto copy = make_engine();
  copy->replay(engine->journal());
  EXPECT_EQ(copy->fingerprint(), engine->fingerprint());
}
