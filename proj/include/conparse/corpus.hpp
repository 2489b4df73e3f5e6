#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "conparse/backend.hpp"
#include "conparse/faithfulness.hpp"
#include "conparse/linearize.hpp"
#include "conparse/pmc.hpp"
#include "conparse/prompting.hpp"
#include "conparse/scoring.hpp"
#include "conparse/tree.hpp"
#include "conparse/validity.hpp"

namespace conparse {

// ---- treebanks ----

enum class TreebankErrorKind { FileNotFound, ParseError, EmptyTreebank };

class TreebankError : public std::runtime_error {
 public:
  TreebankError(TreebankErrorKind kind, const std::string& message, std::size_t line = 0)
      : std::runtime_error(message), kind_(kind), line_(line) {}
  TreebankErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  TreebankErrorKind kind_;
  std::size_t line_;
};

struct SkippedTree {
  std::size_t line = 0;
  std::string message;
};

struct TreebankSplit {
  std::string name = "test";
  std::string domain;
  std::vector<ConstituencyTree> trees;
  std::vector<SkippedTree> skipped;  // filled in lenient mode only
};

// One bracketed tree per line or multi-line .mrg layout; trees are normalized
// with treebank_options(). A bad tree is fatal unless `lenient`, in which case
// it is skipped and listed. A file without trees raises EmptyTreebank.
TreebankSplit parse_treebank(std::string_view text, std::string domain, std::string name = "test",
                             bool lenient = false, std::string_view source = "<input>");
TreebankSplit load_treebank(const std::string& path, std::string domain, std::string name = "test",
                            bool lenient = false);

// WSJ section numbers per split: train 02-21, dev 22, test 23.
const std::map<std::string, std::vector<int>>& default_ptb_sections();
// *.mrg files under `root`/NN/ for the sections of `split`, in name order.
std::vector<std::string> ptb_split_files(const std::string& root, const std::string& split,
                                         const std::map<std::string, std::vector<int>>& sections =
                                             default_ptb_sections());

struct TreebankStats {
  std::size_t trees = 0;
  std::size_t tokens = 0;
  std::size_t constituents = 0;  // phrasal nodes
  std::size_t max_length = 0;
  double mean_length = 0;
  double mean_depth = 0;
  std::map<std::string, std::size_t> labels;  // phrasal label counts
};

TreebankStats treebank_stats(std::span<const ConstituencyTree> trees);
nlohmann::json to_json(const TreebankStats& stats);

// ---- experiments ----

enum class RunMode { Zero, Few, LES, PMC };
std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view name);

struct ExperimentConfig {
  RunMode mode = RunMode::Zero;
  std::size_t shots = 0;  // Few: k (>= 1); LES: shots of the base prompt
  Strategy strategy = Strategy::Bracket;
  EvalConfig eval;
  PromptTemplates templates = default_templates();
  std::vector<ErrorExemplar> exemplars = default_exemplars();
  std::vector<ConstituencyTree> demo_pool;  // demonstrations are drawn from here
  PMCConfig pmc;                            // used in PMC mode; strategy and demos are filled in
  std::size_t parallel = 1;
  std::uint64_t seed = 0;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string model_id;
};

struct ResultRecord {
  std::string id;
  std::string domain;
  Strategy strategy = Strategy::Bracket;
  std::vector<std::string> sentence;  // preprocessed tokens
  std::string gold;                   // preprocessed gold tree, bracketed
  std::string prediction_raw;
  bool valid = false;
  ValidityReport validity;
  bool faithful = false;
  FaithfulnessReport faithfulness;
  std::size_t pmc_rounds = 0;
  std::optional<SentenceCounts> counts;
  std::string backend_error;  // non-empty when the backend failed for this sentence
};

nlohmann::json to_json(const ResultRecord& record);
ResultRecord record_from_json(const nlohmann::json& j);

std::vector<ResultRecord> read_records(std::string_view jsonl);
std::vector<ResultRecord> load_records(const std::string& path);

// "<domain>-000001"-style ids, 1-based.
std::string record_id(std::string_view domain, std::size_t index);

// The first `k` demonstrations of a seeded shuffle of `pool`.
std::vector<Demonstration> select_demonstrations(std::span<const ConstituencyTree> pool, std::size_t k,
                                                 Strategy strategy, std::uint64_t seed);

// The prompt sent for `gold` under `config` (not used in PMC mode).
std::string experiment_prompt(const ConstituencyTree& gold, const ExperimentConfig& config,
                              std::span<const Demonstration> demos);

// Checks and scores one model output against a gold tree.
ResultRecord evaluate_output(std::string id, std::string domain, const ConstituencyTree& gold,
                             std::string prediction_raw, Strategy strategy, const EvalConfig& eval);

// Runs every sentence of `split`. With `out_path`, records are appended to
// that JSONL file as they finish and ids already present in it are skipped.
// Returns every record of the run, previously completed ones included, sorted
// by id.
std::vector<ResultRecord> run_experiment(const TreebankSplit& split, Backend& backend, const ExperimentConfig& config,
                                         const std::string& out_path = {});

}  // namespace conparse
