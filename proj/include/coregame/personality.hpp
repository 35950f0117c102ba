#pragma once

// Abridged MBTI instrument: items, scoring, and cognitive-core composition.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coregame/common.hpp"
#include "coregame/io.hpp"

namespace coregame {

enum class Dichotomy { Perception, Judgement };
enum class Option { A, B };
enum class Pole { S, N, F, T };

std::string_view to_string(Dichotomy d);
std::string_view to_string(Pole p);
Option option_from_string(std::string_view text);  // "A"/"a"/"B"/"b"

struct DichotomyItem {
  int item_id = 0;
  Dichotomy dichotomy = Dichotomy::Perception;
  std::string text;
  std::string option_a;
  std::string option_b;
  Pole pole_a = Pole::S;
  Pole pole_b = Pole::N;

  Pole pole_for(Option option) const { return option == Option::A ? pole_a : pole_b; }
};

/// Checks item invariants: non-empty list, unique ids, each dichotomy block
/// non-empty with an odd item count, and option keys that pick opposite poles
/// of the item's own dichotomy. Empty result means the instrument is valid.
std::vector<std::string> validate_instrument(std::span<const DichotomyItem> items);

class Instrument {
 public:
  /// Throws Error(Validation) listing every problem found by validate_instrument.
  explicit Instrument(std::vector<DichotomyItem> items);

  static Instrument from_json(const Json& doc);
  static Instrument load(const std::filesystem::path& path);
  /// The shipped 14-item instrument.
  static const Instrument& standard();

  const std::vector<DichotomyItem>& items() const { return items_; }
  const DichotomyItem& item(int item_id) const;
  std::size_t block_size(Dichotomy d) const;

 private:
  std::vector<DichotomyItem> items_;
};

struct AssessmentResponse {
  std::string learner_id;
  std::map<int, Option> answers;
  Timestamp completed_at;
};

/// Majority pole over exactly 7 answers using the default keying
/// (A -> S/F, B -> N/T).
Pole score_dichotomy(std::span<const Option> answers, Dichotomy dichotomy);

/// Majority pole of one block of `instrument`, using its per-item keys.
Pole score_block(const Instrument& instrument, const AssessmentResponse& response, Dichotomy dichotomy);

/// Throws Error(Validation) when the response does not answer every item
/// exactly once or names unknown items.
void validate_response(const Instrument& instrument, const AssessmentResponse& response);

CognitiveCore compose_core(Pole perception, Pole judgement);

CognitiveCore determine_cognitive_core(const AssessmentResponse& response,
                                       const Instrument& instrument = Instrument::standard());

}  // namespace coregame
