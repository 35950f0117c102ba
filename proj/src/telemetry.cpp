#include "coregame/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <set>

namespace coregame {

namespace {

int parse_int(std::string_view text, const char* field) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::Validation, std::string(field) + ": not an integer '" + std::string(text) + "'", field);
  }
  return value;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Numeric ids compare as numbers so "99" sorts before "101".
bool id_less(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b) && a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

std::string format_time_spent(int seconds) {
  if (seconds < 0) throw Error(ErrorCode::Validation, "negative time_spent", "time_spent");
  if (seconds < 60) return std::to_string(seconds) + "s";
  return std::to_string(seconds / 60) + "m " + std::to_string(seconds % 60) + "s";
}

int parse_time_spent(std::string_view text) {
  int minutes = 0;
  auto m = text.find('m');
  if (m != std::string_view::npos) {
    minutes = parse_int(text.substr(0, m), "time_spent");
    text.remove_prefix(m + 1);
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  }
  if (text.empty() || text.back() != 's') {
    throw Error(ErrorCode::Validation, "time_spent must end in 's'", "time_spent");
  }
  const int seconds = parse_int(text.substr(0, text.size() - 1), "time_spent");
  if (minutes < 0 || seconds < 0 || (m != std::string_view::npos && seconds >= 60)) {
    throw Error(ErrorCode::Validation, "time_spent out of range", "time_spent");
  }
  return minutes * 60 + seconds;
}

std::string format_log_date(CalendarDate date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d-%02d-%02d", date.day, date.month, date.year % 100);
  return buf;
}

CalendarDate parse_log_date(std::string_view text) {
  if (text.size() != 8 || text[2] != '-' || text[5] != '-') {
    throw Error(ErrorCode::Validation, "date must be DD-MM-YY, got '" + std::string(text) + "'", "date");
  }
  CalendarDate d{2000 + parse_int(text.substr(6, 2), "date"), parse_int(text.substr(3, 2), "date"),
                 parse_int(text.substr(0, 2), "date")};
  if (d.month < 1 || d.month > 12 || d.day < 1 || to_date(from_date(d)) != d) {
    throw Error(ErrorCode::Validation, "invalid calendar date '" + std::string(text) + "'", "date");
  }
  return d;
}

void validate_record(const QuizAttemptRecord& r, int pass_threshold_pct) {
  auto fail = [](const std::string& msg, const char* field) { throw Error(ErrorCode::Validation, msg, field); };
  if (r.user_id.empty()) fail("user_id is empty", "user_id");
  if (r.quiz_id.empty()) fail("quiz_id is empty", "quiz_id");
  if (r.course_id.empty()) fail("course_id is empty", "course_id");
  if (r.total <= 0) fail("total must be positive", "total");
  if (r.score < 0 || r.score > r.total) fail("score outside [0, total]", "score");
  if (r.points_total < 0) fail("points_total must be non-negative", "points_total");
  if (r.points < 0 || r.points > r.points_total) fail("points outside [0, points_total]", "points");
  if (r.time_spent_s < 0) fail("time_spent must be non-negative", "time_spent");
  const auto pct = round_half_up_div(100LL * r.score, r.total);
  if (r.percentage != pct) {
    fail("percentage " + std::to_string(r.percentage) + " inconsistent with score, expected " + std::to_string(pct),
         "percentage");
  }
  if (r.passed != (r.percentage >= pass_threshold_pct)) fail("passed inconsistent with the pass threshold", "passed");
}

void AttemptLog::append(const QuizAttemptRecord& record) {
  validate_record(record, threshold_);
  records_.push_back(record);
}

std::string attempts_to_csv(std::span<const QuizAttemptRecord> records) {
  std::string out(kAttemptLogHeader);
  out += '\n';
  for (const auto& r : records) {
    out += csv_escape(r.user_id) + ',' + csv_escape(r.quiz_id) + ',' + std::to_string(r.score) + ',' +
           std::to_string(r.total) + ',' + format_log_date(r.date) + ',' + std::to_string(r.points) + ',' +
           std::to_string(r.points_total) + ',' + std::to_string(r.percentage) + ',' +
           format_time_spent(r.time_spent_s) + ',' + (r.passed ? "YES" : "NO") + ',' + csv_escape(r.course_id) + '\n';
  }
  return out;
}

std::string AttemptLog::to_csv() const { return attempts_to_csv(records_); }

AttemptLog AttemptLog::from_csv(std::string_view text, int pass_threshold_pct) {
  auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorCode::Validation, "missing header row", "header");
  AttemptLog log(pass_threshold_pct);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 11) {
      throw Error(ErrorCode::Validation, "row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                                             " fields, expected 11",
                  "row");
    }
    QuizAttemptRecord r;
    r.user_id = row[0];
    r.quiz_id = row[1];
    r.score = parse_int(row[2], "score");
    r.total = parse_int(row[3], "total");
    r.date = parse_log_date(row[4]);
    r.points = parse_int(row[5], "points");
    r.points_total = parse_int(row[6], "points_total");
    r.percentage = parse_int(row[7], "percentage");
    r.time_spent_s = parse_time_spent(row[8]);
    if (row[9] != "YES" && row[9] != "NO") throw Error(ErrorCode::Validation, "passed must be YES or NO", "passed");
    r.passed = row[9] == "YES";
    r.course_id = row[10];
    log.append(r);
  }
  return log;
}

std::vector<QuizAttemptRecord> export_order(std::vector<QuizAttemptRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const QuizAttemptRecord& a, const QuizAttemptRecord& b) {
    if (a.quiz_id != b.quiz_id) return id_less(a.quiz_id, b.quiz_id);
    if (a.date != b.date) return a.date < b.date;
    if (a.user_id != b.user_id) return id_less(a.user_id, b.user_id);
    return false;
  });
  return records;
}

namespace {

constexpr std::array<std::pair<Criterion, std::string_view>, 7> kCriterionNames{{
    {Criterion::UserCentricity, "UserCentricity"},
    {Criterion::Emotion, "Emotion"},
    {Criterion::Appeal, "Appeal"},
    {Criterion::Satisfaction, "Satisfaction"},
    {Criterion::Clarity, "Clarity"},
    {Criterion::ErrorRecognition, "ErrorRecognition"},
    {Criterion::Feedback, "Feedback"},
}};

}  // namespace

std::string_view to_string(Criterion c) {
  for (const auto& [k, name] : kCriterionNames) {
    if (k == c) return name;
  }
  return "?";
}

Criterion criterion_from_string(std::string_view text) {
  for (const auto& [k, name] : kCriterionNames) {
    if (name == text) return k;
  }
  throw Error(ErrorCode::Configuration, "unknown criterion '" + std::string(text) + "'", "criterion");
}

std::string_view to_string(CriterionGroup g) {
  return g == CriterionGroup::Engagement ? "engagement" : "educational_usability";
}

CriterionGroup criterion_group_from_string(std::string_view text) {
  if (text == "engagement") return CriterionGroup::Engagement;
  if (text == "educational_usability") return CriterionGroup::EducationalUsability;
  throw Error(ErrorCode::Configuration, "unknown criterion group '" + std::string(text) + "'", "group");
}

Questionnaire::Questionnaire(std::vector<CriterionDef> criteria, std::map<int, std::string> statements,
                             int scale_min, int scale_max)
    : criteria_(std::move(criteria)), statements_(std::move(statements)), scale_min_(scale_min),
      scale_max_(scale_max) {
  auto fail = [](const std::string& msg, const char* field) { throw Error(ErrorCode::Configuration, msg, field); };
  if (scale_min_ >= scale_max_) fail("empty Likert scale", "scale");
  std::set<Criterion> seen;
  std::set<int> assigned;
  for (const auto& c : criteria_) {
    if (!seen.insert(c.criterion).second) fail("criterion listed twice: " + std::string(to_string(c.criterion)), "criteria");
    if (c.statements.empty()) fail("criterion without statements", "statements");
    for (int s : c.statements) {
      if (!statements_.contains(s)) fail("criterion references unknown statement " + std::to_string(s), "statements");
      if (!assigned.insert(s).second) fail("statement " + std::to_string(s) + " assigned twice", "statements");
    }
  }
  if (seen.size() != kAllCriteria.size()) fail("questionnaire must define all seven criteria", "criteria");
  if (assigned.size() != statements_.size()) fail("every statement must belong to a criterion", "statements");
}

Questionnaire Questionnaire::from_json(const Json& doc) {
  std::vector<CriterionDef> criteria;
  for (const auto& c : doc.at("criteria")) {
    criteria.push_back(CriterionDef{criterion_from_string(c.at("criterion").get<std::string>()), c.value("label", ""),
                                    criterion_group_from_string(c.at("group").get<std::string>()),
                                    c.at("statements").get<std::vector<int>>()});
  }
  std::map<int, std::string> statements;
  for (const auto& s : doc.at("statements")) statements[s.at("id").get<int>()] = s.value("text", "");
  int lo = 1;
  int hi = 5;
  if (doc.contains("scale")) {
    lo = doc["scale"].value("min", 1);
    hi = doc["scale"].value("max", 5);
  }
  return Questionnaire(std::move(criteria), std::move(statements), lo, hi);
}

Questionnaire Questionnaire::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

const Questionnaire& Questionnaire::standard() {
  static const Questionnaire q = load(data_file("questionnaire.json"));
  return q;
}

const CriterionDef& Questionnaire::criterion(Criterion c) const {
  for (const auto& def : criteria_) {
    if (def.criterion == c) return def;
  }
  throw Error(ErrorCode::NotFound, "criterion not defined", "criterion");
}

std::vector<int> Questionnaire::group_statements(CriterionGroup g) const {
  std::vector<int> out;
  for (const auto& c : criteria_) {
    if (c.group == g) out.insert(out.end(), c.statements.begin(), c.statements.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void validate_evaluation(const EvaluationResponse& response, const Questionnaire& questionnaire) {
  if (response.learner_id.empty()) throw Error(ErrorCode::Validation, "learner_id is empty", "learner_id");
  if (response.answers.size() != questionnaire.statements().size()) {
    throw Error(ErrorCode::Validation,
                "expected " + std::to_string(questionnaire.statements().size()) + " answers, got " +
                    std::to_string(response.answers.size()),
                "answers");
  }
  for (const auto& [id, value] : response.answers) {
    if (!questionnaire.statements().contains(id)) {
      throw Error(ErrorCode::Validation, "unknown statement " + std::to_string(id), "answers");
    }
    if (value < questionnaire.scale_min() || value > questionnaire.scale_max()) {
      throw Error(ErrorCode::Validation, "answer to statement " + std::to_string(id) + " outside the scale",
                  "answers");
    }
  }
}

std::string evaluations_to_csv(std::span<const EvaluationResponse> responses, const Questionnaire& questionnaire) {
  std::string out = "learner_id,core";
  for (const auto& [id, _] : questionnaire.statements()) out += ",s" + std::to_string(id);
  out += ",submitted_at\n";
  for (const auto& r : responses) {
    out += csv_escape(r.learner_id) + ',' + std::string(to_string(r.core));
    for (const auto& [id, _] : questionnaire.statements()) {
      auto it = r.answers.find(id);
      out += ',' + (it == r.answers.end() ? std::string{} : std::to_string(it->second));
    }
    out += ',' + std::to_string(r.submitted_at.seconds) + '\n';
  }
  return out;
}

std::vector<EvaluationResponse> evaluations_from_csv(std::string_view text, const Questionnaire& questionnaire) {
  auto rows = parse_csv(text);
  std::vector<EvaluationResponse> out;
  const std::size_t width = questionnaire.statements().size() + 3;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != width) throw Error(ErrorCode::Validation, "row " + std::to_string(i) + " has wrong width", "row");
    EvaluationResponse r;
    r.learner_id = row[0];
    r.core = core_from_string(row[1]);
    std::size_t col = 2;
    for (const auto& [id, _] : questionnaire.statements()) r.answers[id] = parse_int(row[col++], "answers");
    r.submitted_at = Timestamp{std::stoll(row[col])};
    validate_evaluation(r, questionnaire);
    out.push_back(std::move(r));
  }
  return out;
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::Negative: return "negative";
    case Classification::Neutral: return "neutral";
    case Classification::Positive: return "positive";
  }
  return "?";
}

Classification classify(Tenths mean) {
  if (mean.value < 10 || mean.value > 50) {
    throw Error(ErrorCode::Validation, "mean " + format_tenths(mean) + " outside [1, 5]", "mean");
  }
  if (mean.value < 26) return Classification::Negative;
  if (mean.value < 34) return Classification::Neutral;
  return Classification::Positive;
}

namespace {

struct Pool {
  std::int64_t n = 0;
  std::int64_t sum = 0;
  std::int64_t sum_sq = 0;
  int min = 0;
  int max = 0;

  void add(int x) {
    if (n == 0 || x < min) min = x;
    if (n == 0 || x > max) max = x;
    ++n;
    sum += x;
    sum_sq += static_cast<std::int64_t>(x) * x;
  }
};

Pool pool(std::span<const EvaluationResponse> responses, std::span<const int> statements) {
  Pool p;
  for (const auto& r : responses) {
    for (int s : statements) {
      auto it = r.answers.find(s);
      if (it == r.answers.end()) {
        throw Error(ErrorCode::Validation, "response from " + r.learner_id + " lacks statement " + std::to_string(s),
                    "answers");
      }
      p.add(it->second);
    }
  }
  return p;
}

// Population sd in tenths, rounded half-up without floating point:
// 10*sd = sqrt(a) / n with a = 100 * (n*sum_sq - sum^2).
Tenths population_sd(const Pool& p) {
  const std::int64_t a = 100 * (p.n * p.sum_sq - p.sum * p.sum);
  std::int64_t k = 0;
  // Largest k with (2nk - n) <= 2*sqrt(a).
  while (true) {
    const std::int64_t lhs = 2 * p.n * (k + 1) - p.n;
    if (lhs > 0 && lhs * lhs > 4 * a) break;
    ++k;
  }
  return Tenths{k};
}

}  // namespace

Json CriterionStats::to_json() const {
  return Json{{"criterion", to_string(criterion)},
              {"statements", statement_ids},
              {"mean", mean.as_double()},
              {"sd", sd.as_double()},
              {"min", min},
              {"max", max},
              {"samples", samples},
              {"classification", to_string(classification)}};
}

CriterionStats criterion_stats(std::span<const EvaluationResponse> responses, Criterion criterion,
                               const Questionnaire& questionnaire) {
  if (responses.empty()) throw Error(ErrorCode::Validation, "no evaluation responses", "responses");
  const auto& def = questionnaire.criterion(criterion);
  auto p = pool(responses, def.statements);
  CriterionStats s;
  s.criterion = criterion;
  s.statement_ids = def.statements;
  s.mean = mean_tenths(p.sum, p.n);
  s.sd = population_sd(p);
  s.min = p.min;
  s.max = p.max;
  s.samples = static_cast<std::size_t>(p.n);
  s.classification = classify(s.mean);
  return s;
}

Tenths group_rollup(std::span<const EvaluationResponse> responses, CriterionGroup group,
                    const Questionnaire& questionnaire) {
  std::int64_t sum = 0;
  std::int64_t count = 0;
  for (const auto& def : questionnaire.criteria()) {
    if (def.group != group) continue;
    sum += criterion_stats(responses, def.criterion, questionnaire).mean.value;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::Configuration, "group has no criteria", "group");
  return Tenths{round_half_up_div(sum, count)};
}

CoreBreakdown per_core_breakdown(std::span<const EvaluationResponse> responses, CriterionGroup group,
                                 const Questionnaire& questionnaire) {
  CoreBreakdown out;
  const auto statements = questionnaire.group_statements(group);
  for (auto core : kAllCores) {
    std::vector<EvaluationResponse> subset;
    std::copy_if(responses.begin(), responses.end(), std::back_inserter(subset),
                 [core](const EvaluationResponse& r) { return r.core == core; });
    if (subset.empty()) {
      out.warnings.push_back("no responses for core " + std::string(to_string(core)));
      continue;
    }
    auto p = pool(subset, statements);
    out.means[core] = mean_tenths(p.sum, p.n);
  }
  return out;
}

std::vector<Tenths> apportion_percentages(std::span<const int> counts) {
  std::vector<Tenths> out(counts.size());
  const std::int64_t n = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  if (n == 0) return out;
  std::vector<std::int64_t> remainder(counts.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw Error(ErrorCode::Validation, "negative count", "counts");
    out[i].value = 1000 * counts[i] / n;
    remainder[i] = 1000 * counts[i] % n;
    assigned += out[i].value;
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < 1000; ++i, ++assigned) ++out[order[i]].value;
  return out;
}

Json CohortSummary::to_json() const {
  Json genders = Json::object();
  for (const auto& [g, c] : gender_counts) genders[g] = {{"count", c}, {"pct", gender_pct.at(g).as_double()}};
  Json cores = Json::object();
  for (const auto& [core, c] : core_counts) {
    cores[std::string(to_string(core))] = {{"count", c}, {"pct", core_pct.at(core).as_double()}};
  }
  return Json{{"n", n},
              {"gender", genders},
              {"cores", cores},
              {"completion", {{"count", completion_count}, {"pct", completion_pct.as_double()}}},
              {"responses", {{"count", response_count}, {"pct", response_pct.as_double()}}}};
}

CohortSummary cohort_summary(std::span<const Participant> participants,
                             std::span<const EvaluationResponse> responses) {
  CohortSummary s;
  s.n = static_cast<int>(participants.size());
  for (auto core : kAllCores) s.core_counts[core] = 0;
  std::set<std::string> ids;
  for (const auto& p : participants) {
    if (!ids.insert(p.learner_id).second) {
      throw Error(ErrorCode::Validation, "participant listed twice: " + p.learner_id, "learner_id");
    }
    ++s.core_counts[p.core];
    if (p.gender) ++s.gender_counts[*p.gender];
    if (p.completed) ++s.completion_count;
  }
  std::vector<int> core_counts;
  for (auto core : kAllCores) core_counts.push_back(s.core_counts[core]);
  auto core_pct = apportion_percentages(core_counts);
  for (std::size_t i = 0; i < kAllCores.size(); ++i) s.core_pct[kAllCores[i]] = core_pct[i];

  std::vector<int> gender_counts;
  for (const auto& [_, c] : s.gender_counts) gender_counts.push_back(c);
  auto gender_pct = apportion_percentages(gender_counts);
  std::size_t gi = 0;
  for (const auto& [g, _] : s.gender_counts) s.gender_pct[g] = gender_pct[gi++];

  std::set<std::string> responders;
  for (const auto& r : responses) responders.insert(r.learner_id);
  s.response_count = static_cast<int>(responders.size());
  if (s.n > 0) s.completion_pct = Tenths{round_half_up_div(1000LL * s.completion_count, s.n)};
  if (s.completion_count > 0) {
    s.response_pct = Tenths{round_half_up_div(1000LL * s.response_count, s.completion_count)};
  }
  return s;
}

Json stats_report(std::span<const EvaluationResponse> responses, const Questionnaire& questionnaire) {
  Json report{{"responses", responses.size()}};
  if (responses.empty()) {
    report["criteria"] = Json::array();
    return report;
  }
  Json criteria = Json::array();
  for (const auto& def : questionnaire.criteria()) {
    auto s = criterion_stats(responses, def.criterion, questionnaire);
    auto row = s.to_json();
    row["label"] = def.label;
    row["group"] = to_string(def.group);
    criteria.push_back(row);
  }
  report["criteria"] = criteria;
  Json groups = Json::object();
  for (auto g : {CriterionGroup::Engagement, CriterionGroup::EducationalUsability}) {
    auto rollup = group_rollup(responses, g, questionnaire);
    auto breakdown = per_core_breakdown(responses, g, questionnaire);
    Json per_core = Json::object();
    for (const auto& [core, mean] : breakdown.means) per_core[std::string(to_string(core))] = mean.as_double();
    groups[std::string(to_string(g))] = {{"mean", rollup.as_double()},
                                         {"classification", to_string(classify(rollup))},
                                         {"per_core", per_core},
                                         {"warnings", breakdown.warnings}};
  }
  report["groups"] = groups;
  return report;
}

}  // namespace coregame
