#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "conparse/backend.hpp"
#include "conparse/faithfulness.hpp"
#include "conparse/linearize.hpp"
#include "conparse/prompting.hpp"
#include "conparse/validity.hpp"

namespace conparse {

// Model output read back as a bracketed tree. Bracket output passes through
// unchanged; transition and span output is decoded, and a decoding failure
// leaves `bracket` empty with the reason in `error`.
struct InterpretedOutput {
  std::string bracket;
  std::string error;
};

InterpretedOutput interpret_output(std::string_view raw, Strategy strategy);

// Validity and faithfulness of one model output against the sentence.
std::pair<ValidityReport, FaithfulnessReport> rule_based_check(std::string_view raw, Strategy strategy,
                                                               std::span<const std::string> sentence);

enum class CheckerMode { RuleBased, LLMBased };
std::string_view to_string(CheckerMode mode);
CheckerMode parse_checker_mode(std::string_view name);

// LLMBased asks `backend` through checker prompts and falls back to the rule
// checks for any reply that does not parse as a report.
std::pair<ValidityReport, FaithfulnessReport> checker_feedback(std::string_view raw,
                                                               std::span<const std::string> sentence,
                                                               CheckerMode mode, Backend* backend = nullptr,
                                                               Strategy strategy = Strategy::Bracket);

struct PMCConfig {
  std::size_t max_rounds = 3;
  CheckerMode checker_mode = CheckerMode::RuleBased;
  bool stop_on_clean = true;
  Strategy strategy = Strategy::Bracket;
  PromptMode base_mode = PromptMode::zero_shot();
  PromptTemplates templates = default_templates();
  std::vector<Demonstration> demonstrations;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string model_id;

  // Throws std::invalid_argument for max_rounds == 0 or an LES base mode.
  void validate() const;
};

struct RoundTrace {
  std::size_t round = 0;
  std::string prompt;
  std::string raw_output;
  ValidityReport validity;
  FaithfulnessReport faithfulness;

  bool clean() const { return validity.errors.empty() && faithfulness.errors.empty(); }
};

struct PMCSession {
  std::vector<std::string> sentence;
  std::vector<RoundTrace> rounds;
  // final_output is the last clean round's output, or the last output when no
  // round was clean. final_tree is nullopt when that output is not a valid tree.
  std::optional<ConstituencyTree> final_tree;
  std::string final_output;
  bool converged = false;
};

class PMCError : public BackendError {
 public:
  PMCError(const BackendError& cause, PMCSession partial)
      : BackendError(cause.kind(), cause.what()), partial_(std::move(partial)) {}
  const PMCSession& partial() const { return partial_; }

 private:
  PMCSession partial_;
};

// Text placed in the Feedback section of the next parser prompt.
std::string initial_feedback();
std::string render_feedback(std::string_view previous_output, const ValidityReport& validity,
                            const FaithfulnessReport& faithfulness);

// `sentence` is already preprocessed. Backend failures raise PMCError
// carrying the rounds completed so far.
PMCSession run_pmc(std::span<const std::string> sentence, Backend& parser, const PMCConfig& config,
                   Backend* checker = nullptr);

nlohmann::json to_json(const RoundTrace& round);
nlohmann::json to_json(const PMCSession& session);

}  // namespace conparse
