#include <gtest/gtest.h>

#include <random>

#include "conparse/faithfulness.hpp"
#include "conparse/validity.hpp"
#include "support/random_trees.hpp"

using namespace conparse;

namespace {

const char* const kSingapore =
    "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN located) (PP (IN in) (NP (NNP Asia))))))";
const char* const kSituated =
    "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN situated) (PP (IN in) (NP (NNP Asia))))))";

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto j = s.find(' ', i);
    if (j == std::string_view::npos) j = s.size();
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

TEST(Check, SingaporeIsFaithful) {
  const auto sentence = words("Singapore is located in Asia");
  EXPECT_TRUE(check_faithfulness(std::string_view(kSingapore), sentence).faithful);
  EXPECT_TRUE(check_faithfulness(parse_bracketed(kSingapore), sentence).faithful);
}

TEST(Check, SituatedAnnotation) {
  const auto report = check_faithfulness(std::string_view(kSituated), words("Singapore is located in Asia"));
  ASSERT_EQ(report.errors.size(), 1u);
  EXPECT_EQ(report.errors[0].kind, UnfaithfulKind::WordMismatch);
  EXPECT_EQ(report.errors[0].detail, "'situated' does not exist in the original input sentence.");
  EXPECT_EQ(report.errors[0].positions, std::vector<std::size_t>{2});
}

TEST(Check, MisplacedWordNamesTheExpectedOne) {
  const auto report = check_faithfulness(std::string_view("(S (NN b) (NN a))"), words("a b"));
  ASSERT_EQ(report.errors.size(), 2u);
  EXPECT_EQ(report.errors[0].detail, "'b' should be 'a' (word 1 of the input sentence).");
}

TEST(Check, RepeatedConstituent) {
  const auto sentence = words("They are not comfortable with themselves");
  const std::string tree =
      "(S (NP (PRP They)) (VP (VBP are) (RB not) (ADJP (JJ comfortable) (PP (IN with) (NP (PRP themselves))))) "
      "(VP (VBP are) (RB not) (ADJP (JJ comfortable) (PP (IN with) (NP (PRP themselves))))))";
  const auto report = check_faithfulness(std::string_view(tree), sentence);
  ASSERT_EQ(report.primary_kind(), UnfaithfulKind::OverGeneration);
  EXPECT_EQ(report.errors[0].sub, OverGenerationSub::Repetition);
  EXPECT_NE(report.errors[0].detail.find("are not comfortable with themselves"), std::string::npos);
}

TEST(Check, PredictionFailure) {
  const auto report = check_faithfulness(std::string_view("Sorry, I can't."), words("a b"));
  EXPECT_EQ(report.primary_kind(), UnfaithfulKind::PredictionFailure);
  EXPECT_FALSE(predicted_yield("no tree here").has_value());
}

TEST(Check, ReadsWordsOfInvalidTrees) {
  const auto yield = predicted_yield("(S (NP (NNP Singapore)) (VP (VBD had been putting)");
  ASSERT_TRUE(yield);
  EXPECT_EQ(*yield, words("Singapore had been putting"));
}

TEST(Classify, Subkinds) {
  const auto gold = words("the market rose sharply today");
  EXPECT_EQ(classify_overgeneration(words("the market rose sharply today rose sharply today"), gold),
            OverGenerationSub::Repetition);
  EXPECT_EQ(classify_overgeneration(words("the market rose sharply today and then fell"), gold),
            OverGenerationSub::ContinueWriting);
  EXPECT_EQ(classify_overgeneration(words("the market rose"), gold), OverGenerationSub::Other);
}

TEST(Classify, RepetitionPresentInGoldIsNotFlagged) {
  const auto gold = words("a b c a b c");
  EXPECT_EQ(classify_overgeneration(words("a b c a b c d"), gold), OverGenerationSub::ContinueWriting);
}

TEST(Corrupt, SituatedExample) {
  const auto sample = corrupt_faithfulness(parse_bracketed(kSingapore), {{"located", "situated"}}, 0);
  EXPECT_EQ(sample.text, kSituated);
  EXPECT_EQ(sample.annotation, "'situated' does not exist in the original input sentence.");
  EXPECT_EQ(sample.position, 2u);
}

TEST(Corrupt, EmptyTableIsInapplicable) {
  EXPECT_THROW(corrupt_faithfulness(parse_bracketed(kSingapore), {}, 0), InapplicableCorruption);
}

TEST(Corrupt, BuiltinTableSize) {
  EXPECT_GE(builtin_substitutions().size(), 45u);
  EXPECT_EQ(builtin_substitutions().at("located"), "situated");
}

TEST(Json, RoundTrip) {
  const auto report = check_faithfulness(std::string_view(kSituated), words("Singapore is located in Asia"));
  EXPECT_EQ(faithfulness_from_json(to_json(report)), report);
}

TEST(Property, OwnYieldIsFaithful) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 300; ++i) {
    const auto tree = testgen::random_tree(rng);
    ASSERT_TRUE(check_faithfulness(tree, yield_words(tree)).faithful);
    ASSERT_TRUE(check_faithfulness(std::string_view(render_bracketed(tree)), yield_words(tree)).faithful);
  }
}

TEST(Property, SubstitutionsAreFoundAtTheirPosition) {
  std::mt19937_64 rng(42);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    const auto tree = testgen::random_tree(rng);
    UnfaithfulSample sample;
    try {
      sample = corrupt_faithfulness(tree, builtin_substitutions(), static_cast<std::uint64_t>(i));
    } catch (const InapplicableCorruption&) {
      continue;
    }
    ++checked;
    const auto report = check_faithfulness(std::string_view(sample.text), yield_words(tree));
    ASSERT_EQ(report.errors.size(), 1u) << sample.text;
    ASSERT_EQ(report.errors[0].kind, UnfaithfulKind::WordMismatch);
    ASSERT_EQ(report.errors[0].positions, std::vector<std::size_t>{sample.position});
    ASSERT_EQ(report.errors[0].detail, sample.annotation);
  }
  EXPECT_GT(checked, 200);
}

TEST(Property, EveryUnfaithfulCaseHasOneKind) {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 300; ++i) {
    const auto pred = testgen::random_tree(rng);
    const auto sentence = yield_words(testgen::random_tree(rng));
    const auto report = check_faithfulness(pred, sentence);
    ASSERT_EQ(report.faithful, report.errors.empty());
    if (!report.faithful) {
      for (const auto& e : report.errors) ASSERT_EQ(e.kind, report.errors.front().kind);
    }
  }
}
