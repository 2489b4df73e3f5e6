#include "conparse/pmc.hpp"

#include <stdexcept>

namespace conparse {

namespace {

std::string_view json_object_text(std::string_view reply) {
  const auto first = reply.find('{');
  const auto last = reply.rfind('}');
  if (first == std::string_view::npos || last == std::string_view::npos || last < first) return {};
  return reply.substr(first, last - first + 1);
}

std::optional<ConstituencyTree> try_parse(std::string_view bracket) {
  if (bracket.empty() || !check_validity(bracket).valid) return std::nullopt;
  return parse_bracketed(extract_tree_text(bracket), ParseOptions{true, false, false});
}

}  // namespace

InterpretedOutput interpret_output(std::string_view raw, Strategy strategy) {
  if (strategy == Strategy::Bracket) return {std::string(raw), {}};
  try {
    if (strategy == Strategy::Transition) {
      const auto actions = parse_actions(raw);
      return {render_bracketed(execute_transitions(actions)), {}};
    }
    std::vector<std::string> lines;
    for (auto& line : split_lines(raw)) {
      if (line.find(" is a ") != std::string::npos) lines.push_back(std::move(line));
    }
    return {render_bracketed(decode_span(lines)), {}};
  } catch (const std::exception& e) {
    return {{}, e.what()};
  }
}

std::pair<ValidityReport, FaithfulnessReport> rule_based_check(std::string_view raw, Strategy strategy,
                                                               std::span<const std::string> sentence) {
  const std::vector<std::string> words(sentence.begin(), sentence.end());
  const auto out = interpret_output(raw, strategy);
  if (out.bracket.empty() && !out.error.empty()) {
    ValidityReport v;
    v.valid = false;
    v.errors.push_back({InvalidKind::Other, "", "The output cannot be read as a tree: " + out.error});
    return {v, check_faithfulness(std::string_view{}, words)};
  }
  return {check_validity(out.bracket), check_faithfulness(out.bracket, words)};
}

std::string_view to_string(CheckerMode mode) { return mode == CheckerMode::RuleBased ? "rule" : "llm"; }

CheckerMode parse_checker_mode(std::string_view name) {
  if (name == "rule" || name == "RuleBased") return CheckerMode::RuleBased;
  if (name == "llm" || name == "LLMBased") return CheckerMode::LLMBased;
  throw std::invalid_argument("unknown checker mode '" + std::string(name) + "' (expected rule or llm)");
}

std::pair<ValidityReport, FaithfulnessReport> checker_feedback(std::string_view raw,
                                                               std::span<const std::string> sentence,
                                                               CheckerMode mode, Backend* backend, Strategy strategy) {
  auto rules = rule_based_check(raw, strategy, sentence);
  if (mode == CheckerMode::RuleBased) return rules;
  if (backend == nullptr) throw std::invalid_argument("LLM-based checking needs a backend");

  const std::string tree = interpret_output(raw, strategy).bracket;
  const std::string text = join_tokens(sentence);
  auto ask = [&](CheckerRole role) {
    CompletionRequest req;
    req.prompt = build_checker_prompt(role, tree.empty() ? raw : std::string_view(tree), text);
    return nlohmann::json::parse(json_object_text(backend->complete(req).text));
  };

  // Any checker failure, including a backend error, keeps the rule-based report.
  std::pair<ValidityReport, FaithfulnessReport> out = rules;
  try {
    out.first = validity_from_json(ask(CheckerRole::ValidityAgent));
  } catch (const std::exception&) {
    out.first = rules.first;
  }
  try {
    out.second = faithfulness_from_json(ask(CheckerRole::FaithfulnessAgent));
  } catch (const std::exception&) {
    out.second = rules.second;
  }
  return out;
}

void PMCConfig::validate() const {
  if (max_rounds == 0) throw std::invalid_argument("max_rounds must be >= 1");
  if (base_mode.kind == PromptMode::Kind::LES) {
    throw std::invalid_argument("multi-agent refinement runs on a zero-shot or few-shot base prompt");
  }
}

std::string initial_feedback() { return "Validity feedback:\n(none)\n\nFaithfulness feedback:\n(none)"; }

std::string render_feedback(std::string_view previous_output, const ValidityReport& validity,
                            const FaithfulnessReport& faithfulness) {
  std::string out = "Your previous output was:\n" + std::string(previous_output);
  while (!out.empty() && out.back() == '\n') out.pop_back();
  out += "\n\nValidity feedback:\n";
  if (validity.errors.empty()) out += "- The tree is valid.\n";
  for (const auto& e : validity.errors) out += "- " + e.message + "\n";
  out += "\nFaithfulness feedback:\n";
  if (faithfulness.errors.empty()) out += "- The tree is faithful to the input sentence.\n";
  for (const auto& e : faithfulness.errors) out += "- " + e.detail + "\n";
  out += "\nCorrect every problem listed above and output the revised tree.";
  return out;
}

PMCSession run_pmc(std::span<const std::string> sentence, Backend& parser, const PMCConfig& config,
                   Backend* checker) {
  config.validate();
  PMCSession session;
  session.sentence.assign(sentence.begin(), sentence.end());

  PromptSpec spec = make_prompt_spec(config.templates, config.strategy, join_tokens(sentence), config.demonstrations);
  spec.feedback = initial_feedback();

  for (std::size_t r = 1; r <= config.max_rounds; ++r) {
    RoundTrace round;
    round.round = r;
    round.prompt = build_prompt(config.base_mode, spec);
    CompletionRequest req{round.prompt, config.temperature, config.max_tokens, config.model_id};
    try {
      round.raw_output = parser.complete(req).text;
      std::tie(round.validity, round.faithfulness) =
          checker_feedback(round.raw_output, sentence, config.checker_mode, checker, config.strategy);
    } catch (const BackendError& e) {
      throw PMCError(e, std::move(session));
    }
    const bool clean = round.clean();
    spec.feedback = render_feedback(round.raw_output, round.validity, round.faithfulness);
    session.rounds.push_back(std::move(round));
    if (clean && config.stop_on_clean) break;
  }

  const RoundTrace& last = session.rounds.back();
  session.converged = last.clean();
  session.final_output = last.raw_output;
  for (auto it = session.rounds.rbegin(); it != session.rounds.rend(); ++it) {
    if (it->clean()) {
      session.final_output = it->raw_output;
      break;
    }
  }
  session.final_tree = try_parse(interpret_output(session.final_output, config.strategy).bracket);
  if (!session.final_tree) session.converged = false;
  return session;
}

nlohmann::json to_json(const RoundTrace& round) {
  return {{"round", round.round},
          {"prompt", round.prompt},
          {"raw_output", round.raw_output},
          {"validity", to_json(round.validity)},
          {"faithfulness", to_json(round.faithfulness)}};
}

nlohmann::json to_json(const PMCSession& session) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : session.rounds) rounds.push_back(to_json(r));
  return {{"sentence", session.sentence},
          {"rounds", rounds},
          {"final_tree", session.final_tree ? nlohmann::json(render_bracketed(*session.final_tree))
                                            : nlohmann::json(nullptr)},
          {"final_output", session.final_output},
          {"converged", session.converged}};
}

}  // namespace conparse
