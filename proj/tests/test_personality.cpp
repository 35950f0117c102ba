#include <gtest/gtest.h>

#include <array>

#include "coregame/personality.hpp"

using namespace coregame;

namespace {

AssessmentResponse from_bits(unsigned bits) {
  AssessmentResponse r;
  r.learner_id = "x";
  const auto& items = Instrument::standard().items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    r.answers[items[i].item_id] = (bits >> i) & 1U ? Option::B : Option::A;
  }
  return r;
}

AssessmentResponse uniform(Option o) { return from_bits(o == Option::A ? 0U : 0x3FFFU); }

}  // namespace

TEST(ScoreDichotomy, Majorities) {
  std::array<Option, 7> all_a;
  all_a.fill(Option::A);
  EXPECT_EQ(score_dichotomy(all_a, Dichotomy::Perception), Pole::S);

  std::array<Option, 7> three_a{Option::A, Option::A, Option::A, Option::B, Option::B, Option::B, Option::B};
  EXPECT_EQ(score_dichotomy(three_a, Dichotomy::Judgement), Pole::T);

  std::array<Option, 7> four_a{Option::B, Option::A, Option::B, Option::A, Option::B, Option::A, Option::A};
  EXPECT_EQ(score_dichotomy(four_a, Dichotomy::Perception), Pole::S);
}

TEST(ScoreDichotomy, RejectsWrongCount) {
  std::array<Option, 6> six{};
  EXPECT_THROW(score_dichotomy(six, Dichotomy::Perception), Error);
}

TEST(Core, UniformAnswers) {
  EXPECT_EQ(determine_cognitive_core(uniform(Option::A)), CognitiveCore::SF);
  EXPECT_EQ(determine_cognitive_core(uniform(Option::B)), CognitiveCore::NT);
}

TEST(Core, PerceptionAThenJudgementB) {
  const auto& items = Instrument::standard().items();
  AssessmentResponse r;
  for (const auto& item : items) r.answers[item.item_id] = item.item_id <= 7 ? Option::A : Option::B;
  EXPECT_EQ(determine_cognitive_core(r), CognitiveCore::ST);
}

TEST(Core, ExhaustiveEveryVectorMapsToOneCore) {
  const auto& instrument = Instrument::standard();
  std::array<int, 4> seen{};
  for (unsigned bits = 0; bits < (1U << 14); ++bits) {
    const auto core = determine_cognitive_core(from_bits(bits), instrument);
    ++seen[static_cast<std::size_t>(core)];
  }
  // Each block splits its 128 vectors 64/64 between the poles.
  for (int n : seen) EXPECT_EQ(n, 4096);
}

TEST(Core, EachBlockHasNoTies) {
  const auto& instrument = Instrument::standard();
  for (auto d : {Dichotomy::Perception, Dichotomy::Judgement}) {
    ASSERT_EQ(instrument.block_size(d), 7U);
    int first_pole = 0;
    for (unsigned bits = 0; bits < 128; ++bits) {
      std::array<Option, 7> v{};
      int a = 0;
      for (int i = 0; i < 7; ++i) {
        v[i] = (bits >> i) & 1U ? Option::B : Option::A;
        a += v[i] == Option::A;
      }
      const Pole p = score_dichotomy(v, d);
      EXPECT_NE(a * 2, 7);
      EXPECT_EQ(p == (d == Dichotomy::Perception ? Pole::S : Pole::F), a > 3);
      first_pole += p == Pole::S || p == Pole::F;
    }
    EXPECT_EQ(first_pole, 64);
  }
}

TEST(Instrument, StandardIsValid) {
  EXPECT_TRUE(validate_instrument(Instrument::standard().items()).empty());
  EXPECT_EQ(Instrument::standard().items().size(), 14U);
}

TEST(Instrument, EvenBlockIsRejected) {
  auto items = Instrument::standard().items();
  items.erase(items.begin());  // 6 perception items remain
  auto problems = validate_instrument(items);
  ASSERT_FALSE(problems.empty());
  bool mentions_tie = false;
  for (const auto& p : problems) mentions_tie |= p.find("tie") != std::string::npos;
  EXPECT_TRUE(mentions_tie);
  EXPECT_THROW(Instrument{items}, Error);
}

TEST(Instrument, EmptyIsRejected) {
  EXPECT_FALSE(validate_instrument({}).empty());
  EXPECT_THROW(Instrument{{}}, Error);
}

TEST(Response, IncompleteOrUnknownItemsRejected) {
  auto r = uniform(Option::A);
  r.answers.erase(3);
  EXPECT_THROW(determine_cognitive_core(r), Error);
  r = uniform(Option::A);
  r.answers[99] = Option::A;
  EXPECT_THROW(determine_cognitive_core(r), Error);
}

TEST(Response, OptionParsing) {
  EXPECT_EQ(option_from_string("a"), Option::A);
  EXPECT_EQ(option_from_string("B"), Option::B);
  EXPECT_THROW(option_from_string("C"), Error);
}

TEST(Core, PerItemKeysAreHonoured) {
  // Flip one perception item's keying; the same answers now score the other pole.
  auto items = Instrument::standard().items();
  for (auto& item : items) {
    if (item.dichotomy == Dichotomy::Perception) std::swap(item.pole_a, item.pole_b);
  }
  Instrument flipped{items};
  EXPECT_EQ(determine_cognitive_core(uniform(Option::A), flipped), CognitiveCore::NF);
}

TEST(Core, ParseRoundTrip) {
  for (auto c : kAllCores) EXPECT_EQ(core_from_string(to_string(c)), c);
  EXPECT_FALSE(parse_core("XX").has_value());
}
