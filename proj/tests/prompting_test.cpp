#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "conparse/prompting.hpp"
#include "support/random_trees.hpp"

using namespace conparse;

namespace {

const char* const kSingapore =
    "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN located) (PP (IN in) (NP (NNP Asia))))))";

std::size_t occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

PromptSpec singapore_spec(std::vector<Demonstration> demos = {}) {
  return make_prompt_spec(default_templates(), Strategy::Bracket, "Singapore is located in Asia _PERIOD_",
                          std::move(demos), default_exemplars());
}

std::vector<Demonstration> demos(std::size_t n) {
  std::mt19937_64 rng(61);
  std::vector<Demonstration> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_demonstration(testgen::random_tree(rng), Strategy::Bracket));
  return out;
}

}  // namespace

TEST(Preprocess, SentenceFinalPeriod) {
  EXPECT_EQ(preprocess("Singapore is located in Asia."),
            (std::vector<std::string>{"Singapore", "is", "located", "in", "Asia", "_PERIOD_"}));
  EXPECT_EQ(preprocess("Hello , world"), (std::vector<std::string>{"Hello", "_COMMA_", "world"}));
}

TEST(Preprocess, Parentheses) {
  EXPECT_EQ(preprocess_token("("), "-LRB-");
  EXPECT_EQ(preprocess_token("a(b)"), "a-LRB-b-RRB-");
  EXPECT_EQ(preprocess_token("..."), "_PERIOD__PERIOD__PERIOD_");
  EXPECT_EQ(postprocess_token("_PERIOD__PERIOD__PERIOD_"), "...");
  EXPECT_EQ(postprocess_token("a-LRB-b-RRB-"), "a(b)");
  EXPECT_EQ(tokenize("(hello), world!"),
            (std::vector<std::string>{"(", "hello", ")", ",", "world", "!"}));
}

TEST(Preprocess, Bijection) {
  for (const auto& [c, symbol] : punctuation_symbols()) {
    const std::string s(1, c);
    EXPECT_EQ(postprocess_token(preprocess_token(s)), s);
  }
  const std::vector<std::string> tokens = {"Hello", ",", "world", "(", "x", ")", "?!", "don't", ":", ";", "\""};
  EXPECT_EQ(postprocess(preprocess_tokens(tokens)), tokens);
}

TEST(Preprocess, Trees) {
  const auto tree = parse_bracketed("(S (NP (NN a)) (. .))");
  const auto pre = preprocess_tree(tree);
  EXPECT_EQ(render_bracketed(pre), "(S (NP (NN a)) (. _PERIOD_))");
  EXPECT_EQ(postprocess_tree(pre), tree);
}

TEST(Template, Placeholders) {
  EXPECT_EQ(render_template("a {x} {{y}}", {{"x", "1"}}), "a 1 {y}");
  EXPECT_THROW(render_template("{z}", {}), PromptError);
  EXPECT_THROW(render_template("{z", {{"z", ""}}), PromptError);
}

TEST(Build, ZeroShotHasThreeSections) {
  const auto prompt = build_prompt(PromptMode::zero_shot(), singapore_spec());
  EXPECT_EQ(prompt.rfind("Task Introduction:\n", 0), 0u);
  EXPECT_EQ(occurrences(prompt, "Instruction:\n"), 1u);
  EXPECT_EQ(occurrences(prompt, "Task Input:\n"), 1u);
  EXPECT_EQ(occurrences(prompt, "Training Instances:"), 0u);
  EXPECT_EQ(occurrences(prompt, "Error-Avoiding Instruction:"), 0u);
  EXPECT_NE(prompt.find("Sentence: Singapore is located in Asia _PERIOD_\nTree:\n"), std::string::npos);
}

TEST(Build, LesCarriesExemplars) {
  const auto prompt = build_prompt(PromptMode::les(), singapore_spec());
  EXPECT_NE(prompt.find("The constituent (NNP) lacks a word."), std::string::npos);
  EXPECT_NE(prompt.find("'situated' does not exist in the original input sentence."), std::string::npos);
}

TEST(Build, LesExtendsItsBasePrompt) {
  const auto spec = singapore_spec(demos(3));
  for (auto [base, les] : {std::pair{PromptMode::zero_shot(), PromptMode::les(0)},
                           std::pair{PromptMode::few_shot(3), PromptMode::les(3)}}) {
    const auto base_prompt = build_prompt(base, spec);
    const auto les_prompt = build_prompt(les, spec);
    EXPECT_GT(les_prompt.size(), base_prompt.size());
    // Every base section appears unchanged.
    std::size_t start = 0;
    while (start < base_prompt.size()) {
      auto end = base_prompt.find("\n\n", start);
      if (end == std::string::npos) end = base_prompt.size();
      const auto chunk = base_prompt.substr(start, end - start);
      EXPECT_NE(les_prompt.find(chunk), std::string::npos) << chunk;
      start = end + 2;
    }
  }
}

TEST(Build, FewShotCountsDemonstrations) {
  const auto spec = singapore_spec(demos(7));
  const auto prompt = build_prompt(PromptMode::few_shot(5), spec);
  const auto training = prompt.find("Training Instances:");
  const auto input = prompt.find("Task Input:");
  ASSERT_LT(training, input);
  EXPECT_EQ(occurrences(prompt.substr(training, input - training), "Sentence: "), 5u);
}

TEST(Build, Errors) {
  auto kind_of = [](const PromptMode& mode, const PromptSpec& spec) {
    try {
      build_prompt(mode, spec);
    } catch (const PromptError& e) {
      return e.kind();
    }
    ADD_FAILURE();
    return PromptErrorKind::EmptySection;
  };
  EXPECT_EQ(kind_of(PromptMode::few_shot(2), singapore_spec(demos(1))), PromptErrorKind::MissingDemonstrations);
  EXPECT_EQ(kind_of(PromptMode::few_shot(0), singapore_spec(demos(1))), PromptErrorKind::MissingDemonstrations);
  auto only_invalid = singapore_spec();
  std::erase_if(only_invalid.error_avoiding, [](const auto& e) { return e.kind == ExemplarKind::Unfaithful; });
  EXPECT_EQ(kind_of(PromptMode::les(), only_invalid), PromptErrorKind::MissingExemplars);
  EXPECT_NO_THROW(build_prompt(PromptMode::les(), only_invalid, false));
  auto blank = singapore_spec();
  blank.task_input.clear();
  EXPECT_EQ(kind_of(PromptMode::zero_shot(), blank), PromptErrorKind::EmptySection);
}

TEST(Build, Pure) {
  const auto spec = singapore_spec(demos(2));
  EXPECT_EQ(build_prompt(PromptMode::les(2), spec), build_prompt(PromptMode::les(2), spec));
}

TEST(Build, InstructionsShowTheStrategy) {
  const auto tree = parse_bracketed(kSingapore);
  for (auto s : {Strategy::Bracket, Strategy::Transition, Strategy::Span}) {
    const auto& text = default_templates().instructions.at(s);
    const auto spec = make_prompt_spec(default_templates(), s, "x");
    EXPECT_NE(spec.instruction.find(encode(tree, s).payload), std::string::npos) << text;
  }
}

TEST(Templates, LoadOverrides) {
  const auto dir = std::filesystem::temp_directory_path() / "conparse_templates_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "task_introduction.txt") << "Custom intro.";
  const auto t = load_templates(dir.string());
  EXPECT_EQ(t.task_introduction, "Custom intro.");
  EXPECT_EQ(t.instructions.at(Strategy::Span), default_templates().instructions.at(Strategy::Span));
  std::filesystem::remove_all(dir);
}

TEST(Checker, ValidityPrompt) {
  const auto prompt = build_checker_prompt(CheckerRole::ValidityAgent, kSingapore, "Singapore is located in Asia");
  EXPECT_NE(prompt.find("\"valid\""), std::string::npos);
  EXPECT_NE(prompt.find(kSingapore), std::string::npos);
}

TEST(Checker, FaithfulnessPromptWithDemos) {
  const std::string situated =
      "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN situated) (PP (IN in) (NP (NNP Asia))))))";
  const std::vector<CheckerDemo> demo_list = {{"(S (NN a))", "a", "{\"faithful\": true, \"errors\": []}"},
                                              {"(S (NN b))", "a", "{\"faithful\": false}"}};
  const auto prompt =
      build_checker_prompt(CheckerRole::FaithfulnessAgent, situated, "Singapore is located in Asia", demo_list);
  EXPECT_NE(prompt.find(situated), std::string::npos);
  EXPECT_NE(prompt.find("Sentence: Singapore is located in Asia"), std::string::npos);
  const auto first = prompt.find("Tree: (S (NN a))\nReply: {\"faithful\": true, \"errors\": []}");
  const auto second = prompt.find("Tree: (S (NN b))\nReply: {\"faithful\": false}");
  ASSERT_NE(first, std::string::npos);
  ASSERT_NE(second, std::string::npos);
  EXPECT_LT(first, second);
}

TEST(Finetune, SingleTree) {
  const std::vector<ConstituencyTree> trees = {parse_bracketed(kSingapore)};
  for (auto s : {Strategy::Bracket, Strategy::Transition, Strategy::Span}) {
    const auto records = export_finetune_records(trees, s);
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].input, "Singapore is located in Asia");
    EXPECT_EQ(decode_record(records[0], s), trees[0]);
    EXPECT_GT(records[0].length(), 5u);
  }
  EXPECT_THROW(export_finetune_records({}, Strategy::Bracket), std::invalid_argument);
}

TEST(Finetune, RandomTreebankDecodes) {
  std::mt19937_64 rng(62);
  std::vector<ConstituencyTree> trees;
  for (int i = 0; i < 100; ++i) trees.push_back(testgen::random_tree(rng));
  for (auto s : {Strategy::Bracket, Strategy::Transition}) {
    const auto records = export_finetune_records(trees, s);
    for (std::size_t i = 0; i < trees.size(); ++i) ASSERT_EQ(decode_record(records[i], s), preprocess_tree(trees[i]));
  }
}

TEST(Exemplars, Defaults) {
  const auto& ex = default_exemplars();
  ASSERT_EQ(ex.size(), 4u);
  EXPECT_EQ(ex[0].annotation, "The constituent (NNP) lacks a word.");
  EXPECT_EQ(std::count_if(ex.begin(), ex.end(), [](const auto& e) { return e.kind == ExemplarKind::Unfaithful; }), 2);
}
