#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "conparse/tree.hpp"

namespace conparse {

enum class InvalidPolicy {
  // An invalid prediction contributes 0 matched / 0 predicted but keeps its
  // gold brackets, so it only lowers recall.
  ZeroCounts,
  // Invalid sentences are dropped from the totals (standard evalb).
  SkipInvalid,
};

std::string_view to_string(InvalidPolicy p);
InvalidPolicy parse_invalid_policy(std::string_view name);

struct EvalConfig {
  std::set<std::string> delete_labels = {"TOP", "ROOT", "-NONE-"};
  // Tokens whose POS is listed here are removed from the index space before
  // spans are computed.
  std::set<std::string> punctuation_pos = {",", ":", "``", "''", "."};
  InvalidPolicy invalid_policy = InvalidPolicy::ZeroCounts;
};

// key=value lines: DELETE_LABEL, PUNCT_POS (both repeatable; the first
// occurrence replaces the default set) and INVALID_POLICY=zero|skip.
// Lines starting with '#' and blank lines are ignored.
EvalConfig parse_eval_config(std::string_view text);
EvalConfig load_eval_config(const std::string& path);

struct SentenceCounts {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  bool invalid = false;
  bool unfaithful = false;

  bool operator==(const SentenceCounts&) const = default;
};

// Spans used for scoring: preterminals excluded, deleted labels dropped,
// punctuation tokens removed from the index space; spans covering only
// punctuation disappear.
std::vector<LabeledSpan> evaluation_spans(const ConstituencyTree& tree, const EvalConfig& config);

std::size_t multiset_intersection(std::vector<LabeledSpan> a, std::vector<LabeledSpan> b);

SentenceCounts score_sentence(const ConstituencyTree& gold, const ConstituencyTree& pred, const EvalConfig& config);
// `pred_raw` is model output; invalid output yields matched = predicted = 0.
SentenceCounts score_sentence(const ConstituencyTree& gold, std::string_view pred_raw, const EvalConfig& config);

struct ScoreReport {
  double lp = 0;  // ratios in [0, 1], computed under config.invalid_policy
  double lr = 0;
  double f1 = 0;
  double invalid_rate = 0;     // percent
  double unfaithful_rate = 0;  // percent
  double valid_f1 = 0;         // over non-invalid sentences only
  double overall_f1 = 0;       // ZeroCounts over every sentence
  double macro_f1 = 0;         // mean per-sentence F1, invalid sentences scoring 0
  std::size_t sentences = 0;
  std::size_t invalid = 0;
  std::size_t unfaithful = 0;
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

class EmptyCorpus : public std::invalid_argument {
 public:
  EmptyCorpus() : std::invalid_argument("cannot score an empty corpus") {}
};

double f1_score(double precision, double recall);

ScoreReport score_corpus(const std::vector<SentenceCounts>& counts, const EvalConfig& config);

// (f1_in - f1_out) / f1_in, as a percentage.
double reduction_rate(double f1_in_domain, double f1_out_avg);

nlohmann::json to_json(const SentenceCounts& c);
SentenceCounts counts_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScoreReport& r);
std::string format_score_table(const ScoreReport& r);

}  // namespace conparse
