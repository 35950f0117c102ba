#pragma once

// Attempt log, evaluation questionnaire and the statistics computed over it.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coregame/common.hpp"
#include "coregame/io.hpp"

namespace coregame {

struct QuizAttemptRecord {
  std::string user_id;
  std::string quiz_id;
  int score = 0;
  int total = 0;
  CalendarDate date;
  int points = 0;
  int points_total = 0;
  int percentage = 0;
  int time_spent_s = 0;
  bool passed = false;
  std::string course_id;

  bool operator==(const QuizAttemptRecord&) const = default;
};

/// "1m 45s", or "41s" under a minute.
std::string format_time_spent(int seconds);
int parse_time_spent(std::string_view text);
/// DD-MM-YY, years taken as 20YY.
std::string format_log_date(CalendarDate date);
CalendarDate parse_log_date(std::string_view text);

/// Throws Error(Validation) naming the first inconsistent field.
void validate_record(const QuizAttemptRecord& record, int pass_threshold_pct);

inline constexpr std::string_view kAttemptLogHeader =
    "user_id,quiz_id,score,total,date,points,points_total,percentage,time_spent,passed,course_id";

/// Append-only log of graded attempts for one pass threshold.
class AttemptLog {
 public:
  explicit AttemptLog(int pass_threshold_pct = 80) : threshold_(pass_threshold_pct) {}

  void append(const QuizAttemptRecord& record);
  const std::vector<QuizAttemptRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  int pass_threshold_pct() const { return threshold_; }

  std::string to_csv() const;
  /// Validates every row; rejects the whole import on the first bad row.
  static AttemptLog from_csv(std::string_view text, int pass_threshold_pct = 80);

  bool operator==(const AttemptLog&) const = default;

 private:
  int threshold_;
  std::vector<QuizAttemptRecord> records_;
};

std::string attempts_to_csv(std::span<const QuizAttemptRecord> records);

/// Deterministic merge order for exports: quiz_id, then date, then user_id
/// (numerically when both ids are numbers). Stable for equal keys.
std::vector<QuizAttemptRecord> export_order(std::vector<QuizAttemptRecord> records);

enum class Criterion { UserCentricity, Emotion, Appeal, Satisfaction, Clarity, ErrorRecognition, Feedback };
enum class CriterionGroup { Engagement, EducationalUsability };

inline constexpr std::array<Criterion, 7> kAllCriteria{Criterion::UserCentricity, Criterion::Emotion,
                                                       Criterion::Appeal,         Criterion::Satisfaction,
                                                       Criterion::Clarity,        Criterion::ErrorRecognition,
                                                       Criterion::Feedback};

std::string_view to_string(Criterion c);
Criterion criterion_from_string(std::string_view text);
std::string_view to_string(CriterionGroup g);
CriterionGroup criterion_group_from_string(std::string_view text);

struct CriterionDef {
  Criterion criterion = Criterion::UserCentricity;
  std::string label;
  CriterionGroup group = CriterionGroup::Engagement;
  std::vector<int> statements;
};

class Questionnaire {
 public:
  Questionnaire(std::vector<CriterionDef> criteria, std::map<int, std::string> statements, int scale_min = 1,
                int scale_max = 5);

  static Questionnaire from_json(const Json& doc);
  static Questionnaire load(const std::filesystem::path& path);
  static const Questionnaire& standard();

  const std::vector<CriterionDef>& criteria() const { return criteria_; }
  const CriterionDef& criterion(Criterion c) const;
  const std::map<int, std::string>& statements() const { return statements_; }
  std::vector<int> group_statements(CriterionGroup g) const;
  int scale_min() const { return scale_min_; }
  int scale_max() const { return scale_max_; }

 private:
  std::vector<CriterionDef> criteria_;
  std::map<int, std::string> statements_;
  int scale_min_;
  int scale_max_;
};

struct EvaluationResponse {
  std::string learner_id;
  CognitiveCore core = CognitiveCore::NT;
  std::map<int, int> answers;
  Timestamp submitted_at;
  bool operator==(const EvaluationResponse&) const = default;
};

/// Exactly one answer per statement, each within the scale.
void validate_evaluation(const EvaluationResponse& response,
                         const Questionnaire& questionnaire = Questionnaire::standard());

std::string evaluations_to_csv(std::span<const EvaluationResponse> responses,
                               const Questionnaire& questionnaire = Questionnaire::standard());
std::vector<EvaluationResponse> evaluations_from_csv(std::string_view text,
                                                     const Questionnaire& questionnaire = Questionnaire::standard());

enum class Classification { Negative, Neutral, Positive };
std::string_view to_string(Classification c);

/// negative [1, 2.6), neutral [2.6, 3.4), positive [3.4, 5].
Classification classify(Tenths mean);

struct CriterionStats {
  Criterion criterion = Criterion::UserCentricity;
  std::vector<int> statement_ids;
  Tenths mean;
  /// Population standard deviation.
  Tenths sd;
  int min = 0;
  int max = 0;
  std::size_t samples = 0;
  Classification classification = Classification::Neutral;

  Json to_json() const;
};

/// Pools every (response, statement) score of the criterion. Throws
/// Validation on an empty response list.
CriterionStats criterion_stats(std::span<const EvaluationResponse> responses, Criterion criterion,
                               const Questionnaire& questionnaire = Questionnaire::standard());

/// Mean of the group's rounded criterion means.
Tenths group_rollup(std::span<const EvaluationResponse> responses, CriterionGroup group,
                    const Questionnaire& questionnaire = Questionnaire::standard());

struct CoreBreakdown {
  std::map<CognitiveCore, Tenths> means;
  std::vector<std::string> warnings;
};

/// Per-core mean pooled over the group's statements; cores without
/// responses are omitted with a warning.
CoreBreakdown per_core_breakdown(std::span<const EvaluationResponse> responses, CriterionGroup group,
                                 const Questionnaire& questionnaire = Questionnaire::standard());

/// One-decimal shares of `counts` that sum to exactly 100.0 when any count
/// is non-zero (largest remainder; ties go to the earlier entry).
std::vector<Tenths> apportion_percentages(std::span<const int> counts);

struct Participant {
  std::string learner_id;
  CognitiveCore core = CognitiveCore::NT;
  std::optional<std::string> gender;
  bool completed = false;
};

struct CohortSummary {
  int n = 0;
  std::map<std::string, int> gender_counts;
  std::map<std::string, Tenths> gender_pct;
  std::map<CognitiveCore, int> core_counts;
  std::map<CognitiveCore, Tenths> core_pct;
  int completion_count = 0;
  Tenths completion_pct;
  int response_count = 0;
  /// Responses as a share of completions.
  Tenths response_pct;

  Json to_json() const;
};

CohortSummary cohort_summary(std::span<const Participant> participants,
                             std::span<const EvaluationResponse> responses);

/// Criterion table, group rollups and per-core breakdowns as one document.
Json stats_report(std::span<const EvaluationResponse> responses,
                  const Questionnaire& questionnaire = Questionnaire::standard());

}  // namespace coregame
