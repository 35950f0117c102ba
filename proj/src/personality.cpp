#include "coregame/personality.hpp"

#include <algorithm>
#include <set>

namespace coregame {

std::string_view to_string(Dichotomy d) {
  return d == Dichotomy::Perception ? "Perception" : "Judgement";
}

std::string_view to_string(Pole p) {
  switch (p) {
    case Pole::S: return "S";
    case Pole::N: return "N";
    case Pole::F: return "F";
    case Pole::T: return "T";
  }
  return "?";
}

Option option_from_string(std::string_view text) {
  if (text == "A" || text == "a") return Option::A;
  if (text == "B" || text == "b") return Option::B;
  throw Error(ErrorCode::Validation, "answer must be A or B, got '" + std::string(text) + "'", "answers");
}

namespace {

Dichotomy dichotomy_from_string(std::string_view text) {
  if (text == "Perception") return Dichotomy::Perception;
  if (text == "Judgement" || text == "Judgment") return Dichotomy::Judgement;
  throw Error(ErrorCode::Configuration, "unknown dichotomy '" + std::string(text) + "'", "dichotomy");
}

Pole pole_from_string(std::string_view text) {
  if (text == "S") return Pole::S;
  if (text == "N") return Pole::N;
  if (text == "F") return Pole::F;
  if (text == "T") return Pole::T;
  throw Error(ErrorCode::Configuration, "unknown pole '" + std::string(text) + "'", "pole");
}

bool pole_belongs(Pole p, Dichotomy d) {
  return d == Dichotomy::Perception ? (p == Pole::S || p == Pole::N) : (p == Pole::F || p == Pole::T);
}

std::pair<Pole, Pole> default_poles(Dichotomy d) {
  return d == Dichotomy::Perception ? std::pair{Pole::S, Pole::N} : std::pair{Pole::F, Pole::T};
}

}  // namespace

std::vector<std::string> validate_instrument(std::span<const DichotomyItem> items) {
  std::vector<std::string> errors;
  if (items.empty()) {
    errors.emplace_back("instrument has no items");
    return errors;
  }
  std::set<int> ids;
  std::size_t counts[2] = {0, 0};
  for (const auto& item : items) {
    if (!ids.insert(item.item_id).second) {
      errors.push_back("duplicate item id " + std::to_string(item.item_id));
    }
    ++counts[item.dichotomy == Dichotomy::Perception ? 0 : 1];
    if (!pole_belongs(item.pole_a, item.dichotomy) || !pole_belongs(item.pole_b, item.dichotomy) ||
        item.pole_a == item.pole_b) {
      errors.push_back("item " + std::to_string(item.item_id) + ": options must key opposite poles of " +
                       std::string(to_string(item.dichotomy)));
    }
  }
  for (Dichotomy d : {Dichotomy::Perception, Dichotomy::Judgement}) {
    const auto n = counts[d == Dichotomy::Perception ? 0 : 1];
    if (n == 0) {
      errors.push_back(std::string(to_string(d)) + " block has no items");
    } else if (n % 2 == 0) {
      errors.push_back(std::string(to_string(d)) + " block has " + std::to_string(n) +
                       " items: tie possible with an even item count");
    }
  }
  return errors;
}

Instrument::Instrument(std::vector<DichotomyItem> items) : items_(std::move(items)) {
  auto errors = validate_instrument(items_);
  if (!errors.empty()) {
    std::string message = "invalid instrument:";
    for (const auto& e : errors) message += " " + e + ";";
    throw Error(ErrorCode::Validation, message, "items");
  }
  std::sort(items_.begin(), items_.end(),
            [](const DichotomyItem& a, const DichotomyItem& b) { return a.item_id < b.item_id; });
}

Instrument Instrument::from_json(const Json& doc) {
  std::vector<DichotomyItem> items;
  for (const auto& j : doc.at("items")) {
    DichotomyItem item;
    item.item_id = j.at("id").get<int>();
    item.dichotomy = dichotomy_from_string(j.at("dichotomy").get<std::string>());
    item.text = j.value("text", "");
    item.option_a = j.value("a", "");
    item.option_b = j.value("b", "");
    auto [pa, pb] = default_poles(item.dichotomy);
    item.pole_a = j.contains("pole_a") ? pole_from_string(j["pole_a"].get<std::string>()) : pa;
    item.pole_b = j.contains("pole_b") ? pole_from_string(j["pole_b"].get<std::string>()) : pb;
    items.push_back(std::move(item));
  }
  return Instrument(std::move(items));
}

Instrument Instrument::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

const Instrument& Instrument::standard() {
  static const Instrument instance = load(data_file("instrument_mbti14.json"));
  return instance;
}

const DichotomyItem& Instrument::item(int item_id) const {
  auto it = std::find_if(items_.begin(), items_.end(),
                         [&](const DichotomyItem& i) { return i.item_id == item_id; });
  if (it == items_.end()) {
    throw Error(ErrorCode::Validation, "unknown item id " + std::to_string(item_id), "answers");
  }
  return *it;
}

std::size_t Instrument::block_size(Dichotomy d) const {
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(), [&](const DichotomyItem& i) { return i.dichotomy == d; }));
}

Pole score_dichotomy(std::span<const Option> answers, Dichotomy dichotomy) {
  if (answers.size() != 7) {
    throw Error(ErrorCode::Validation,
                "expected 7 answers for the " + std::string(to_string(dichotomy)) + " block, got " +
                    std::to_string(answers.size()),
                "answers");
  }
  const auto a_votes = std::count(answers.begin(), answers.end(), Option::A);
  const auto [pole_a, pole_b] = default_poles(dichotomy);
  return 2 * a_votes > static_cast<std::ptrdiff_t>(answers.size()) ? pole_a : pole_b;
}

void validate_response(const Instrument& instrument, const AssessmentResponse& response) {
  for (const auto& [id, _] : response.answers) {
    (void)instrument.item(id);
  }
  std::vector<int> missing;
  for (const auto& item : instrument.items()) {
    if (!response.answers.contains(item.item_id)) missing.push_back(item.item_id);
  }
  if (!missing.empty()) {
    std::string ids;
    for (int id : missing) ids += (ids.empty() ? "" : ",") + std::to_string(id);
    throw Error(ErrorCode::Validation,
                "incomplete assessment: " + std::to_string(response.answers.size()) + " of " +
                    std::to_string(instrument.items().size()) + " items answered (missing " + ids + ")",
                "answers");
  }
}

Pole score_block(const Instrument& instrument, const AssessmentResponse& response, Dichotomy dichotomy) {
  const auto [first, second] = default_poles(dichotomy);
  int first_votes = 0;
  int total = 0;
  for (const auto& item : instrument.items()) {
    if (item.dichotomy != dichotomy) continue;
    auto it = response.answers.find(item.item_id);
    if (it == response.answers.end()) {
      throw Error(ErrorCode::Validation, "item " + std::to_string(item.item_id) + " unanswered", "answers");
    }
    ++total;
    if (item.pole_for(it->second) == first) ++first_votes;
  }
  return 2 * first_votes > total ? first : second;
}

CognitiveCore compose_core(Pole perception, Pole judgement) {
  const bool sensing = perception == Pole::S;
  const bool thinking = judgement == Pole::T;
  if (!pole_belongs(perception, Dichotomy::Perception) || !pole_belongs(judgement, Dichotomy::Judgement)) {
    throw Error(ErrorCode::Validation, "poles do not form a cognitive core", "poles");
  }
  if (sensing) return thinking ? CognitiveCore::ST : CognitiveCore::SF;
  return thinking ? CognitiveCore::NT : CognitiveCore::NF;
}

CognitiveCore determine_cognitive_core(const AssessmentResponse& response, const Instrument& instrument) {
  validate_response(instrument, response);
  return compose_core(score_block(instrument, response, Dichotomy::Perception),
                      score_block(instrument, response, Dichotomy::Judgement));
}

}  // namespace coregame
