#include <gtest/gtest.h>

#include <chrono>

#include "coregame/simulator.hpp"

using namespace coregame;

namespace {

Json default_doc() { return read_json_file(data_file("cohort_default.json")); }
CohortConfig config_from(const Json& doc) { return CohortConfig::from_json(doc, data_dir()); }

std::vector<CourseGraph> courses() { return {CourseGraph::load(data_file("course_instructional_innovation.json"))}; }

}  // namespace

TEST(Cohort, DefaultConfigSummary) {
  auto result = run_cohort(CohortConfig::load(data_file("cohort_default.json")));
  EXPECT_EQ(result.summary.n, 37);
  EXPECT_EQ(result.summary.core_counts.at(CognitiveCore::ST), 15);
  EXPECT_EQ(result.summary.core_pct.at(CognitiveCore::ST), Tenths{406});
  EXPECT_EQ(result.summary.core_pct.at(CognitiveCore::NF), Tenths{162});
  EXPECT_EQ(result.summary.core_pct.at(CognitiveCore::NT), Tenths{216});
  EXPECT_EQ(result.summary.core_pct.at(CognitiveCore::SF), Tenths{216});
  EXPECT_EQ(result.summary.gender_counts.at("female"), 17);
  EXPECT_TRUE(result.invariants_hold());
  EXPECT_TRUE(result.uncovered_elements.empty());
  EXPECT_TRUE(result.liveness_failures.empty());
  EXPECT_TRUE(result.replay_consistent);
}

TEST(Cohort, RunTwiceIsByteIdentical) {
  const auto config = CohortConfig::load(data_file("cohort_default.json"));
  const auto start = std::chrono::steady_clock::now();
  auto a = run_cohort(config);
  auto b = run_cohort(config);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(60));
  EXPECT_EQ(a.logs_csv, b.logs_csv);
  EXPECT_EQ(a.evaluations_csv, b.evaluations_csv);
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(a.fingerprint, b.fingerprint);
  EXPECT_EQ(journal_to_jsonl(a.journal), journal_to_jsonl(b.journal));
}

TEST(Cohort, FrozenDigest) {
  // Row count and first row of the seeded default cohort; a change here means
  // the simulator's random stream or the engine's behaviour changed.
  auto r = run_cohort(CohortConfig::load(data_file("cohort_default.json")));
  EXPECT_EQ(r.journal.size(), 1151U);
  EXPECT_EQ(std::count(r.logs_csv.begin(), r.logs_csv.end(), '\n'), 411);
  EXPECT_EQ(r.logs_csv.substr(0, r.logs_csv.find('\n', r.logs_csv.find('\n') + 1)),
            std::string(kAttemptLogHeader) + "\n116,30381,1,1,05-03-22,10,10,100,52s,YES,31285");
  EXPECT_EQ(r.summary.response_count, 35);
}

TEST(Cohort, DifferentSeedDifferentRun) {
  auto doc = default_doc();
  auto a = run_cohort(config_from(doc));
  doc["seed"] = 7;
  auto b = run_cohort(config_from(doc));
  EXPECT_NE(a.logs_csv, b.logs_csv);
  EXPECT_EQ(b.summary.core_counts, a.summary.core_counts);
}

TEST(Cohort, RestartMidRunMatchesUninterrupted) {
  const auto config = CohortConfig::load(data_file("cohort_default.json"));
  auto straight = run_cohort(config);
  for (std::size_t k : {0U, 1U, 17U, 36U}) {
    RunOptions options;
    options.restart_after = k;
    auto restarted = run_cohort(config, options);
    EXPECT_EQ(restarted.fingerprint, straight.fingerprint) << k;
    EXPECT_EQ(restarted.logs_csv, straight.logs_csv) << k;
    EXPECT_EQ(restarted.evaluations_csv, straight.evaluations_csv) << k;
  }
}

TEST(Replay, RunOutputReplaysToSameExport) {
  auto result = run_cohort(CohortConfig::load(data_file("cohort_default.json")));
  auto journal = journal_from_jsonl(journal_to_jsonl(result.journal));
  EXPECT_EQ(journal, result.journal);
  const auto cs = courses();
  auto engine = replay(journal, cs);
  EXPECT_EQ(export_logs_csv(*engine, "31285"), result.logs_csv);
  EXPECT_EQ(engine->fingerprint(), result.fingerprint);
}

TEST(Replay, EmptyAndForeign) {
  const auto cs = courses();
  auto empty = replay({}, cs);
  EXPECT_TRUE(empty->learners("31285").empty());
  auto result = run_cohort(CohortConfig::load(data_file("cohort_default.json")));
  auto journal = result.journal;
  journal[3].enrollment = "ghost@31285";
  try {
    replay(journal, cs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Replay);
  }
  EXPECT_THROW(journal_from_jsonl("{\"seq\": 1}\n"), Error);
}

TEST(Agents, PerfectAccuracyNeverFails) {
  // Fast pacing so no timed quiz runs out of clock.
  auto doc = default_doc();
  doc["default_profile"]["accuracy"] = 1.0;
  doc["default_profile"]["persistence"] = 1;
  doc["default_profile"]["pacing"] = {{"mean_s", 10}, {"jitter_s", 5}};
  auto r = run_cohort(config_from(doc));
  EXPECT_EQ(r.summary.completion_count, 37);
  const auto log = AttemptLog::from_csv(r.logs_csv);
  for (const auto& row : log.records()) EXPECT_TRUE(row.passed);
  EXPECT_TRUE(r.liveness_failures.empty());
}

TEST(Agents, SlowPacingExpiresTimedQuizzes) {
  auto doc = default_doc();
  doc["default_profile"]["accuracy"] = 1.0;
  doc["default_profile"]["persistence"] = 1;
  doc["default_profile"]["pacing"] = {{"mean_s", 200}, {"jitter_s", 10}};
  auto r = run_cohort(config_from(doc));
  std::set<std::string> nt;
  for (const auto& p : r.participants) {
    if (p.core == CognitiveCore::NT) {
      nt.insert(p.learner_id);
      EXPECT_FALSE(p.completed);
    }
  }
  // Only the time-pressure core sees a clock; everyone else may take as long as they like.
  int nt_rows = 0, other_slow = 0;
  for (const auto& row : AttemptLog::from_csv(r.logs_csv).records()) {
    if (row.quiz_id != "30386") continue;
    if (nt.count(row.user_id)) {
      ++nt_rows;
      EXPECT_FALSE(row.passed);
      EXPECT_EQ(row.time_spent_s, 120);
    } else if (row.passed && row.time_spent_s > 120) {
      ++other_slow;
    }
  }
  EXPECT_EQ(nt_rows, 8);
  EXPECT_GT(other_slow, 0);
}

TEST(Agents, ZeroAccuracyStallsAtFirstQuiz) {
  auto doc = default_doc();
  doc["default_profile"]["accuracy"] = 0.0;
  doc["default_profile"]["persistence"] = 3;
  auto r = run_cohort(config_from(doc));
  EXPECT_EQ(r.summary.completion_count, 0);
  const auto log = AttemptLog::from_csv(r.logs_csv);
  EXPECT_EQ(log.size(), 37U * 3U);
  std::map<std::string, int> per_user;
  for (const auto& row : log.records()) {
    EXPECT_EQ(row.quiz_id, "30381");
    EXPECT_FALSE(row.passed);
    ++per_user[row.user_id];
  }
  for (const auto& [_, n] : per_user) EXPECT_EQ(n, 3);
  EXPECT_TRUE(r.liveness_failures.empty());
  EXPECT_TRUE(r.evaluations_csv.find('\n') == r.evaluations_csv.size() - 1);
}

TEST(Agents, HighAccuracyUnboundedPersistenceCompletes) {
  auto doc = default_doc();
  doc["default_profile"]["accuracy"] = 0.8;
  doc["default_profile"]["persistence"] = 1000;
  auto r = run_cohort(config_from(doc));
  EXPECT_EQ(r.summary.completion_count, 37);
  EXPECT_TRUE(r.invariants_hold());
}

TEST(Config, Validation) {
  auto doc = default_doc();
  doc["default_profile"]["accuracy"] = 1.5;
  EXPECT_THROW(config_from(doc), Error);
  doc = default_doc();
  doc["default_profile"]["persistence"] = 0;
  EXPECT_THROW(config_from(doc), Error);
  doc = default_doc();
  doc["counts"]["NT"] = -1;
  EXPECT_THROW(config_from(doc), Error);
  doc = default_doc();
  doc["gender_counts"]["female"] = 3;
  EXPECT_THROW(config_from(doc), Error);
}

TEST(Config, PerCoreProfileOverrides) {
  auto doc = default_doc();
  doc["profiles"]["ST"] = {{"accuracy", 0.0}, {"persistence", 1}};
  auto r = run_cohort(config_from(doc));
  for (const auto& p : r.participants) {
    if (p.core == CognitiveCore::ST) EXPECT_FALSE(p.completed);
  }
  EXPECT_EQ(r.summary.core_counts.at(CognitiveCore::ST), 15);
}
