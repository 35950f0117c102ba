#pragma once

// Scripted learner agents that drive the engine to produce reproducible
// logs, evaluations and summaries.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "coregame/engine.hpp"

namespace coregame {

struct AgentProfile {
  /// Probability of answering any one question correctly.
  double accuracy = 0.85;
  /// Attempts allowed per quiz before the agent gives up.
  int persistence = 4;
  int pacing_mean_s = 45;
  int pacing_jitter_s = 30;
  /// Target mean rating per statement id.
  std::map<int, double> evaluation_means;

  void validate() const;
  static AgentProfile from_json(const Json& doc, const AgentProfile& base);
};

struct CohortConfig {
  std::uint64_t seed = 0;
  std::filesystem::path course_path;
  CalendarDate start_date{2022, 3, 1};
  int first_user_id = 1;
  std::map<CognitiveCore, int> counts;
  AgentProfile default_profile;
  std::map<CognitiveCore, AgentProfile> profiles;
  std::map<std::string, int> gender_counts;
  /// Share of finishing agents that submit the evaluation.
  double response_rate = 1.0;

  const AgentProfile& profile(CognitiveCore core) const;
  void validate() const;
  /// Relative course paths resolve against `base_dir`, then the data dir.
  static CohortConfig from_json(const Json& doc, const std::filesystem::path& base_dir = {});
  static CohortConfig load(const std::filesystem::path& path);
};

struct RunOptions {
  /// Simulate a process restart after this many agents: the journal is
  /// replayed into a fresh engine which then continues the run.
  std::optional<std::size_t> restart_after;
  EngineOptions engine;
};

struct CohortResult {
  std::string logs_csv;
  std::string evaluations_csv;
  CohortSummary summary;
  Json report;
  std::vector<Participant> participants;
  std::vector<JournalEntry> journal;
  std::string fingerprint;
  std::vector<std::string> liveness_failures;
  std::set<ElementId> surfaced_elements;
  std::vector<ElementId> uncovered_elements;
  bool replay_consistent = false;

  bool invariants_hold() const { return liveness_failures.empty() && uncovered_elements.empty() && replay_consistent; }
};

CohortResult run_cohort(const CohortConfig& config, const RunOptions& options = {});

/// Rebuilds an engine from a journal over the given courses. Throws
/// Error(Replay) on out-of-order or foreign entries.
std::unique_ptr<Engine> replay(std::span<const JournalEntry> journal, std::span<const CourseGraph> courses,
                               EngineOptions options = {});

std::string journal_to_jsonl(std::span<const JournalEntry> journal);
std::vector<JournalEntry> journal_from_jsonl(std::string_view text);

/// Attempt-log CSV in the deterministic export order.
std::string export_logs_csv(const Engine& engine, const std::string& course_id);

}  // namespace coregame
