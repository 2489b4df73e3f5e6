#include <gtest/gtest.h>

#include "conparse/pmc.hpp"

using namespace conparse;

namespace {

const char* const kSingapore =
    "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN located) (PP (IN in) (NP (NNP Asia))))))";
const char* const kMissingNnp =
    "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN located) (PP (IN in) (NP (NNP ))))))";
const char* const kSituated =
    "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN situated) (PP (IN in) (NP (NNP Asia))))))";

const std::vector<std::string> kSentence = {"Singapore", "is", "located", "in", "Asia"};

ScriptedBackend any_prompt(std::vector<std::string> responses) {
  ScriptedBackend b;
  std::vector<nlohmann::json> js(responses.begin(), responses.end());
  b.add("*", std::move(js));
  return b;
}

}  // namespace

TEST(Interpret, Strategies) {
  EXPECT_EQ(interpret_output(kSingapore, Strategy::Bracket).bracket, kSingapore);
  const auto tree = parse_bracketed(kSingapore);
  EXPECT_EQ(interpret_output(encode(tree, Strategy::Transition).payload, Strategy::Transition).bracket, kSingapore);
  const std::string span = "Here you go:\n" + encode(tree, Strategy::Span).payload + "\nDone.";
  EXPECT_EQ(interpret_output(span, Strategy::Span).bracket, kSingapore);
  const auto bad = interpret_output("NT(S) REDUCE", Strategy::Transition);
  EXPECT_TRUE(bad.bracket.empty());
  EXPECT_FALSE(bad.error.empty());
}

TEST(Feedback, RuleBasedClean) {
  const auto [v, f] = checker_feedback(kSingapore, kSentence, CheckerMode::RuleBased);
  EXPECT_TRUE(v.valid);
  EXPECT_TRUE(f.faithful);
}

TEST(Feedback, RuleBasedSituated) {
  const auto [v, f] = checker_feedback(kSituated, kSentence, CheckerMode::RuleBased);
  EXPECT_TRUE(v.valid);
  EXPECT_EQ(f.primary_kind(), UnfaithfulKind::WordMismatch);
}

TEST(Feedback, UndecodableOutput) {
  const auto [v, f] = rule_based_check("NT(S) REDUCE", Strategy::Transition, kSentence);
  EXPECT_EQ(v.primary_kind(), InvalidKind::Other);
  EXPECT_EQ(f.primary_kind(), UnfaithfulKind::PredictionFailure);
}

TEST(Feedback, LlmFallsBackOnMalformedReply) {
  auto backend = any_prompt({"this is {not json"});
  for (const char* tree : {kSingapore, kMissingNnp, kSituated}) {
    const auto llm = checker_feedback(tree, kSentence, CheckerMode::LLMBased, &backend);
    const auto rule = checker_feedback(tree, kSentence, CheckerMode::RuleBased);
    EXPECT_EQ(llm, rule) << tree;
  }
}

TEST(Feedback, LlmFallsBackOnBackendError) {
  ScriptedBackend backend;
  backend.add("*", {nlohmann::json{{"error", "Timeout"}}});
  EXPECT_EQ(checker_feedback(kMissingNnp, kSentence, CheckerMode::LLMBased, &backend),
            checker_feedback(kMissingNnp, kSentence, CheckerMode::RuleBased));
}

TEST(Feedback, LlmReplyIsUsedWhenWellFormed) {
  auto backend = any_prompt({"Sure: {\"valid\": false, \"errors\": [{\"kind\": \"Other\", \"location\": null, "
                             "\"message\": \"Looks odd.\"}]}"});
  const auto [v, f] = checker_feedback(kSingapore, kSentence, CheckerMode::LLMBased, &backend);
  ASSERT_EQ(v.errors.size(), 1u);
  EXPECT_EQ(v.errors[0].message, "Looks odd.");
  // The same reply is not a faithfulness report, so that side falls back.
  EXPECT_TRUE(f.faithful);
  EXPECT_THROW(checker_feedback(kSingapore, kSentence, CheckerMode::LLMBased, nullptr), std::invalid_argument);
}

TEST(Feedback, Rendering) {
  const auto [v, f] = checker_feedback(kMissingNnp, kSentence, CheckerMode::RuleBased);
  const auto text = render_feedback(kMissingNnp, v, f);
  EXPECT_NE(text.find(kMissingNnp), std::string::npos);
  EXPECT_NE(text.find("- The constituent (NNP) lacks a word."), std::string::npos);
  EXPECT_NE(initial_feedback().find("(none)"), std::string::npos);
}

TEST(Loop, ImmediateStop) {
  auto parser = any_prompt({kSingapore});
  const auto s = run_pmc(kSentence, parser, PMCConfig{});
  EXPECT_EQ(s.rounds.size(), 1u);
  EXPECT_TRUE(s.converged);
  ASSERT_TRUE(s.final_tree);
  EXPECT_EQ(render_bracketed(*s.final_tree), kSingapore);
}

TEST(Loop, RepairsInSecondRound) {
  auto parser = any_prompt({kMissingNnp, kSingapore});
  const auto s = run_pmc(kSentence, parser, PMCConfig{});
  ASSERT_EQ(s.rounds.size(), 2u);
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.rounds[0].prompt.find("The constituent (NNP) lacks a word."), std::string::npos);
  EXPECT_NE(s.rounds[1].prompt.find("The constituent (NNP) lacks a word."), std::string::npos);
  EXPECT_NE(s.rounds[1].prompt.find(render_feedback(s.rounds[0].raw_output, s.rounds[0].validity,
                                                    s.rounds[0].faithfulness)),
            std::string::npos);
}

TEST(Loop, BoundedByMaxRounds) {
  auto parser = any_prompt({kMissingNnp});
  PMCConfig config;
  const auto s = run_pmc(kSentence, parser, config);
  EXPECT_EQ(s.rounds.size(), 3u);
  EXPECT_FALSE(s.converged);
  EXPECT_FALSE(s.final_tree);
  EXPECT_EQ(s.final_output, kMissingNnp);
}

TEST(Loop, KeepsLastCleanOutputWhenNotStoppingEarly) {
  auto parser = any_prompt({kSingapore, kSituated});
  PMCConfig config;
  config.stop_on_clean = false;
  config.max_rounds = 2;
  const auto s = run_pmc(kSentence, parser, config);
  EXPECT_EQ(s.rounds.size(), 2u);
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.final_output, kSingapore);
}

TEST(Loop, ConvergedTreesPassIndependentChecks) {
  auto parser = any_prompt({kSituated, kMissingNnp, kSingapore});
  PMCConfig config;
  config.max_rounds = 5;
  const auto s = run_pmc(kSentence, parser, config);
  ASSERT_TRUE(s.converged);
  EXPECT_EQ(s.rounds.size(), 3u);
  const auto text = render_bracketed(*s.final_tree);
  EXPECT_TRUE(check_validity(text).valid);
  EXPECT_TRUE(check_faithfulness(*s.final_tree, kSentence).faithful);
}

TEST(Loop, BackendFailureCarriesPartialSession) {
  ScriptedBackend parser;
  parser.add("*", {nlohmann::json(kMissingNnp), nlohmann::json{{"error", "RateLimited"}}});
  try {
    run_pmc(kSentence, parser, PMCConfig{});
    FAIL();
  } catch (const PMCError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::RateLimited);
    EXPECT_EQ(e.partial().rounds.size(), 1u);
  }
}

TEST(Loop, ReplayFromLogIsIdentical) {
  auto parser = any_prompt({kSituated, kSingapore});
  RecordingBackend recorder(parser);
  const auto first = run_pmc(kSentence, recorder, PMCConfig{});
  auto replay = ScriptedBackend::from_jsonl(recorder.to_script());
  const auto second = run_pmc(kSentence, replay, PMCConfig{});
  EXPECT_EQ(to_json(first).dump(), to_json(second).dump());
}

TEST(Loop, TransitionStrategy) {
  const auto tree = parse_bracketed(kSingapore);
  auto parser = any_prompt({"NT(S) SHIFT(NNP Singapore) REDUCE REDUCE", encode(tree, Strategy::Transition).payload});
  PMCConfig config;
  config.strategy = Strategy::Transition;
  const auto s = run_pmc(kSentence, parser, config);
  EXPECT_EQ(s.rounds.size(), 2u);
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(*s.final_tree, tree);
}

TEST(Config, Validation) {
  PMCConfig config;
  config.max_rounds = 0;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config.max_rounds = 3;
  config.base_mode = PromptMode::les();
  EXPECT_THROW(config.validate(), std::invalid_argument);
  EXPECT_EQ(parse_checker_mode("llm"), CheckerMode::LLMBased);
}
