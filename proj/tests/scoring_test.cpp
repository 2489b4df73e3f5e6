#include <gtest/gtest.h>

#include <random>

#include "conparse/scoring.hpp"
#include "support/random_trees.hpp"
#include "support/span_oracle.hpp"

using namespace conparse;

namespace {

const char* const kSingapore =
    "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN located) (PP (IN in) (NP (NNP Asia))))))";
const char* const kCat = "(S (NP (DT the) (NN cat)) (VP (VBZ sleeps)))";

SentenceCounts identity3() { return {3, 3, 3, false, false}; }
SentenceCounts invalid3() { return {0, 0, 3, true, false}; }

}  // namespace

TEST(Sentence, Identity) {
  const auto tree = parse_bracketed(kSingapore);
  const auto c = score_sentence(tree, tree, EvalConfig{});
  EXPECT_EQ(c, (SentenceCounts{6, 6, 6, false, false}));
}

TEST(Sentence, Relabel) {
  const auto c = score_sentence(parse_bracketed(kCat), parse_bracketed("(S (NP (DT the) (NN cat)) (NP (VBZ sleeps)))"),
                                EvalConfig{});
  EXPECT_EQ(c.matched, 2u);
  EXPECT_EQ(c.predicted, 3u);
  EXPECT_EQ(c.gold, 3u);
}

TEST(Sentence, InvalidRawOutput) {
  const auto c = score_sentence(parse_bracketed(kCat), std::string_view("(S (NP (NNP"), EvalConfig{});
  EXPECT_TRUE(c.invalid);
  EXPECT_EQ(c.matched, 0u);
  EXPECT_EQ(c.predicted, 0u);
  EXPECT_EQ(c.gold, 3u);
}

TEST(Sentence, RawOutputWithWrapperAndChatter) {
  const auto c = score_sentence(parse_bracketed(kCat), std::string_view("Tree: (ROOT " + std::string(kCat) + ")"),
                                EvalConfig{});
  EXPECT_EQ(c, (SentenceCounts{3, 3, 3, false, false}));
}

TEST(Sentence, UnfaithfulFlag) {
  const auto c = score_sentence(parse_bracketed(kCat), parse_bracketed("(S (NP (DT a) (NN cat)) (VP (VBZ sleeps)))"),
                                EvalConfig{});
  EXPECT_TRUE(c.unfaithful);
  EXPECT_EQ(c.matched, 3u);
}

TEST(Spans, PunctuationIsRemovedFromIndexSpace) {
  const auto tree = parse_bracketed("(S (NP (NN a)) (, ,) (VP (VB b)) (. .))");
  const auto spans = evaluation_spans(tree, EvalConfig{});
  EXPECT_EQ(spans, (std::vector<LabeledSpan>{{"S", 0, 2}, {"NP", 0, 1}, {"VP", 1, 2}}));
  const auto only_punct = parse_bracketed("(S (NP (NN a)) (PRN (, ,)))");
  EXPECT_EQ(evaluation_spans(only_punct, EvalConfig{}).size(), 2u);
}

TEST(Spans, DeletedLabels) {
  const auto tree = parse_bracketed("(TOP (S (NN a)))");
  EXPECT_EQ(evaluation_spans(tree, EvalConfig{}), (std::vector<LabeledSpan>{{"S", 0, 1}}));
}

TEST(Corpus, TwoIdentities) {
  const auto r = score_corpus({identity3(), identity3()}, EvalConfig{});
  EXPECT_DOUBLE_EQ(r.lp, 1.0);
  EXPECT_DOUBLE_EQ(r.lr, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
}

TEST(Corpus, IdentityPlusInvalid) {
  const auto r = score_corpus({identity3(), invalid3()}, EvalConfig{});
  EXPECT_DOUBLE_EQ(r.lp, 1.0);
  EXPECT_DOUBLE_EQ(r.lr, 0.5);
  EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.overall_f1, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.valid_f1, 1.0);
  EXPECT_DOUBLE_EQ(r.invalid_rate, 50.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 0.5);
}

TEST(Corpus, AllInvalid) {
  const auto r = score_corpus({invalid3(), invalid3()}, EvalConfig{});
  EXPECT_DOUBLE_EQ(r.overall_f1, 0.0);
  EXPECT_DOUBLE_EQ(r.invalid_rate, 100.0);
}

TEST(Corpus, SkipPolicyDropsInvalid) {
  EvalConfig skip;
  skip.invalid_policy = InvalidPolicy::SkipInvalid;
  const auto r = score_corpus({identity3(), invalid3()}, skip);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
  EXPECT_NEAR(r.overall_f1, 2.0 / 3.0, 1e-12);
}

TEST(Corpus, Empty) { EXPECT_THROW(score_corpus({}, EvalConfig{}), EmptyCorpus); }

TEST(Reduction, TableValues) {
  EXPECT_NEAR(reduction_rate(95.72, 87.20), 8.90, 0.01);
  EXPECT_NEAR(reduction_rate(93.73, 79.02), 15.69, 0.01);
  EXPECT_DOUBLE_EQ(reduction_rate(80.0, 80.0), 0.0);
  EXPECT_THROW(reduction_rate(0.0, 1.0), std::domain_error);
}

TEST(Config, Parse) {
  const auto c = parse_eval_config("# comment\nDELETE_LABEL=TOP\nDELETE_LABEL=X\n\nPUNCT_POS=.\nINVALID_POLICY=skip\n");
  EXPECT_EQ(c.delete_labels, (std::set<std::string>{"TOP", "X"}));
  EXPECT_EQ(c.punctuation_pos, (std::set<std::string>{"."}));
  EXPECT_EQ(c.invalid_policy, InvalidPolicy::SkipInvalid);
  EXPECT_THROW(parse_eval_config("FOO=1\n"), std::invalid_argument);
  EXPECT_EQ(parse_invalid_policy("ZeroCounts"), InvalidPolicy::ZeroCounts);
}

TEST(Json, Counts) {
  const SentenceCounts c{1, 2, 3, false, true};
  EXPECT_EQ(counts_from_json(to_json(c)), c);
  EXPECT_FALSE(format_score_table(score_corpus({c}, EvalConfig{})).empty());
}

TEST(Property, ScorerMatchesOracle) {
  std::mt19937_64 rng(51);
  const EvalConfig config;
  for (int i = 0; i < 300; ++i) {
    const auto gold = testgen::random_tree(rng);
    const auto pred = testgen::perturb(rng, gold);
    const auto got = score_sentence(gold, pred, config);
    const auto want = testgen::oracle_compare(render_bracketed(gold), render_bracketed(pred), config.punctuation_pos,
                                              config.delete_labels);
    ASSERT_EQ(got.matched, want.matched);
    ASSERT_EQ(got.predicted, want.predicted);
    ASSERT_EQ(got.gold, want.gold);
  }
}

TEST(Property, SwapExchangesPrecisionAndRecall) {
  std::mt19937_64 rng(52);
  for (int i = 0; i < 200; ++i) {
    const auto a = testgen::random_tree(rng);
    const auto b = testgen::perturb(rng, a);
    const auto ab = score_corpus({score_sentence(a, b, EvalConfig{})}, EvalConfig{});
    const auto ba = score_corpus({score_sentence(b, a, EvalConfig{})}, EvalConfig{});
    ASSERT_DOUBLE_EQ(ab.lp, ba.lr);
    ASSERT_DOUBLE_EQ(ab.lr, ba.lp);
    ASSERT_DOUBLE_EQ(ab.f1, ba.f1);
  }
}

TEST(Property, PoliciesAgreeWithoutInvalid) {
  std::mt19937_64 rng(53);
  std::vector<SentenceCounts> counts;
  for (int i = 0; i < 50; ++i) {
    const auto a = testgen::random_tree(rng);
    counts.push_back(score_sentence(a, testgen::perturb(rng, a), EvalConfig{}));
  }
  EvalConfig skip;
  skip.invalid_policy = InvalidPolicy::SkipInvalid;
  const auto z = score_corpus(counts, EvalConfig{});
  const auto s = score_corpus(counts, skip);
  EXPECT_DOUBLE_EQ(z.f1, s.f1);
  EXPECT_DOUBLE_EQ(z.valid_f1, z.overall_f1);
}
