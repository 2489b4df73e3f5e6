#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "conparse/linearize.hpp"
#include "conparse/tree.hpp"

namespace conparse {

// ---- punctuation symbols ----

// The fixed symbol table: "." -> "_PERIOD_", "(" -> "-LRB-", ...
const std::map<char, std::string>& punctuation_symbols();

// Splits on whitespace and peels leading/trailing table punctuation off each
// word, one token per character ("Asia." -> "Asia", ".").
std::vector<std::string> tokenize(std::string_view sentence);

// A token made only of table characters becomes the concatenation of their
// symbols; elsewhere only parentheses are replaced.
std::string preprocess_token(std::string_view token);
std::string postprocess_token(std::string_view token);

std::vector<std::string> preprocess(std::string_view sentence);
std::vector<std::string> preprocess_tokens(std::span<const std::string> tokens);
std::vector<std::string> postprocess(std::span<const std::string> tokens);
ConstituencyTree preprocess_tree(const ConstituencyTree& tree);
ConstituencyTree postprocess_tree(const ConstituencyTree& tree);

std::string join_tokens(std::span<const std::string> tokens);

// ---- prompts ----

struct Demonstration {
  std::string sentence;
  std::string tree;  // linearized with the prompt's strategy
};

enum class ExemplarKind { Invalid, Unfaithful };
std::string_view to_string(ExemplarKind kind);

struct ErrorExemplar {
  std::string sentence;
  std::string erroneous_tree;
  std::string annotation;
  ExemplarKind kind = ExemplarKind::Invalid;
};

struct PromptSpec {
  std::string task_introduction;
  std::string instruction;
  std::vector<Demonstration> demonstrations;
  std::string error_avoiding_instruction;  // lead-in text for the exemplars
  std::vector<ErrorExemplar> error_avoiding;
  std::string feedback;  // rendered as a Feedback section when non-empty
  std::string task_input;
};

struct PromptMode {
  enum class Kind { ZeroShot, FewShot, LES };

  Kind kind = Kind::ZeroShot;
  std::size_t shots = 0;  // FewShot: k; LES: shots of the base prompt (0 = zero-shot base)

  static PromptMode zero_shot() { return {Kind::ZeroShot, 0}; }
  static PromptMode few_shot(std::size_t k) { return {Kind::FewShot, k}; }
  static PromptMode les(std::size_t base_shots = 0) { return {Kind::LES, base_shots}; }
};

enum class PromptErrorKind { MissingDemonstrations, MissingExemplars, EmptySection, UnknownPlaceholder };

class PromptError : public std::runtime_error {
 public:
  PromptError(PromptErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  PromptErrorKind kind() const { return kind_; }

 private:
  PromptErrorKind kind_;
};

// Replaces every {name} with values.at(name). "{{" and "}}" are literal braces.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

struct PromptTemplates {
  std::string task_introduction;
  std::map<Strategy, std::string> instructions;
  std::string error_avoiding;
};

const PromptTemplates& default_templates();
// Reads task_introduction.txt, instruction_{bracket,transition,span}.txt and
// error_avoiding.txt from `dir`; missing files keep the defaults.
PromptTemplates load_templates(const std::string& dir);

// Two Invalid and two Unfaithful exemplars.
const std::vector<ErrorExemplar>& default_exemplars();

Demonstration make_demonstration(const ConstituencyTree& tree, Strategy strategy);

PromptSpec make_prompt_spec(const PromptTemplates& templates, Strategy strategy, std::string task_input,
                            std::vector<Demonstration> demonstrations = {},
                            std::vector<ErrorExemplar> exemplars = {});

// Sections in order: Task Introduction, Instruction, [Error-Avoiding
// Instruction], [Training Instances], [Feedback], Task Input. FewShot(k) uses the first k
// demonstrations. LES needs an exemplar of each kind unless
// `require_both_kinds` is false.
std::string build_prompt(const PromptMode& mode, const PromptSpec& spec, bool require_both_kinds = true);

// ---- checker agents ----

enum class CheckerRole { ValidityAgent, FaithfulnessAgent };

struct CheckerDemo {
  std::string tree;
  std::string sentence;
  std::string reply;  // JSON report
};

std::string build_checker_prompt(CheckerRole role, std::string_view tree, std::string_view sentence,
                                 std::span<const CheckerDemo> demos = {});

// ---- fine-tune export ----

struct FinetuneRecord {
  std::string instruction;
  std::string input;
  std::string output;  // linearized tree

  // Z: instruction, input and tree joined by newlines.
  std::string sequence() const;
  // N: whitespace-separated pieces of Z.
  std::size_t length() const;
};

std::string default_finetune_instruction(Strategy strategy);

// Trees are preprocessed before linearization.
std::vector<FinetuneRecord> export_finetune_records(std::span<const ConstituencyTree> treebank, Strategy strategy);
ConstituencyTree decode_record(const FinetuneRecord& record, Strategy strategy);

nlohmann::json to_json(const FinetuneRecord& record);

}  // namespace conparse
