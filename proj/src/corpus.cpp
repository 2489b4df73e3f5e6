#include "conparse/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace conparse {

namespace {

std::string read_whole(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TreebankError(TreebankErrorKind::FileNotFound, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

SentenceCounts invalid_counts(const ConstituencyTree& gold, const EvalConfig& eval, bool unfaithful) {
  SentenceCounts c;
  c.gold = evaluation_spans(gold, eval).size();
  c.invalid = true;
  c.unfaithful = unfaithful;
  return c;
}

}  // namespace

TreebankSplit parse_treebank(std::string_view text, std::string domain, std::string name, bool lenient,
                             std::string_view source) {
  TreebankSplit split;
  split.name = std::move(name);
  split.domain = std::move(domain);
  std::vector<TreeText> pieces;
  try {
    pieces = split_trees(text);
  } catch (const TreeError& e) {
    const auto upto = text.substr(0, std::min(e.offset(), text.size()));
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(upto.begin(), upto.end(), '\n'));
    throw TreebankError(TreebankErrorKind::ParseError,
                        std::string(source) + ":" + std::to_string(line) + ": " + e.what(), line);
  }
  for (const auto& piece : pieces) {
    try {
      split.trees.push_back(parse_bracketed(piece.text, treebank_options()));
    } catch (const TreeError& e) {
      if (!lenient) {
        throw TreebankError(TreebankErrorKind::ParseError,
                            std::string(source) + ":" + std::to_string(piece.line) + ": " + e.what(), piece.line);
      }
      split.skipped.push_back({piece.line, e.what()});
    }
  }
  if (split.trees.empty()) {
    throw TreebankError(TreebankErrorKind::EmptyTreebank, std::string(source) + ": no trees found");
  }
  return split;
}

TreebankSplit load_treebank(const std::string& path, std::string domain, std::string name, bool lenient) {
  return parse_treebank(read_whole(path), std::move(domain), std::move(name), lenient, path);
}

const std::map<std::string, std::vector<int>>& default_ptb_sections() {
  static const std::map<std::string, std::vector<int>> sections = [] {
    std::map<std::string, std::vector<int>> m;
    for (int s = 2; s <= 21; ++s) m["train"].push_back(s);
    m["dev"] = {22};
    m["test"] = {23};
    return m;
  }();
  return sections;
}

std::vector<std::string> ptb_split_files(const std::string& root, const std::string& split,
                                         const std::map<std::string, std::vector<int>>& sections) {
  namespace fs = std::filesystem;
  auto it = sections.find(split);
  if (it == sections.end()) throw std::invalid_argument("unknown split '" + split + "'");
  std::vector<std::string> files;
  for (int s : it->second) {
    char dir[3];
    std::snprintf(dir, sizeof dir, "%02d", s);
    const fs::path d = fs::path(root) / dir;
    if (!fs::is_directory(d)) throw TreebankError(TreebankErrorKind::FileNotFound, "missing section " + d.string());
    std::vector<std::string> here;
    for (const auto& entry : fs::directory_iterator(d)) {
      if (entry.path().extension() == ".mrg") here.push_back(entry.path().string());
    }
    std::sort(here.begin(), here.end());
    files.insert(files.end(), here.begin(), here.end());
  }
  return files;
}

TreebankStats treebank_stats(std::span<const ConstituencyTree> trees) {
  TreebankStats s;
  s.trees = trees.size();
  double depth_sum = 0;
  for (const auto& t : trees) {
    s.tokens += t.size();
    s.max_length = std::max(s.max_length, t.size());
    depth_sum += static_cast<double>(depth(t.root()));
    for (const auto& span : extract_spans(t, false)) {
      ++s.constituents;
      ++s.labels[span.label];
    }
  }
  if (s.trees > 0) {
    s.mean_length = static_cast<double>(s.tokens) / static_cast<double>(s.trees);
    s.mean_depth = depth_sum / static_cast<double>(s.trees);
  }
  return s;
}

nlohmann::json to_json(const TreebankStats& s) {
  return {{"trees", s.trees},
          {"tokens", s.tokens},
          {"constituents", s.constituents},
          {"max_length", s.max_length},
          {"mean_length", s.mean_length},
          {"mean_depth", s.mean_depth},
          {"labels", s.labels}};
}

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Zero: return "zero";
    case RunMode::Few: return "few";
    case RunMode::LES: return "les";
    case RunMode::PMC: return "pmc";
  }
  return "?";
}

RunMode parse_run_mode(std::string_view name) {
  for (auto m : {RunMode::Zero, RunMode::Few, RunMode::LES, RunMode::PMC}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown mode '" + std::string(name) + "' (expected zero, few, les or pmc)");
}

nlohmann::json to_json(const ResultRecord& r) {
  return {{"id", r.id},
          {"domain", r.domain},
          {"strategy", to_string(r.strategy)},
          {"sentence", r.sentence},
          {"gold", r.gold},
          {"prediction_raw", r.prediction_raw},
          {"valid", r.valid},
          {"validity_errors", to_json(r.validity)["errors"]},
          {"faithful", r.faithful},
          {"faithfulness_errors", to_json(r.faithfulness)["errors"]},
          {"pmc_rounds", r.pmc_rounds},
          {"counts", r.counts ? to_json(*r.counts) : nlohmann::json(nullptr)},
          {"backend_error", r.backend_error.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.backend_error)}};
}

ResultRecord record_from_json(const nlohmann::json& j) {
  ResultRecord r;
  r.id = j.at("id").get<std::string>();
  r.domain = j.at("domain").get<std::string>();
  r.strategy = parse_strategy(j.value("strategy", std::string("bracket")));
  r.sentence = j.at("sentence").get<std::vector<std::string>>();
  r.gold = j.at("gold").get<std::string>();
  r.prediction_raw = j.at("prediction_raw").get<std::string>();
  r.valid = j.at("valid").get<bool>();
  r.validity = validity_from_json({{"valid", r.valid}, {"errors", j.at("validity_errors")}});
  r.faithful = j.at("faithful").get<bool>();
  r.faithfulness = faithfulness_from_json({{"faithful", r.faithful}, {"errors", j.at("faithfulness_errors")}});
  r.pmc_rounds = j.value("pmc_rounds", std::size_t{0});
  if (j.contains("counts") && !j.at("counts").is_null()) r.counts = counts_from_json(j.at("counts"));
  if (j.contains("backend_error") && j.at("backend_error").is_string()) {
    r.backend_error = j.at("backend_error").get<std::string>();
  }
  if (r.counts.has_value() == r.gold.empty()) throw std::invalid_argument("counts must be present exactly when gold is");
  return r;
}

std::vector<ResultRecord> read_records(std::string_view jsonl) {
  std::vector<ResultRecord> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("record line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ResultRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return read_records(buf.str());
}

std::string record_id(std::string_view domain, std::size_t index) {
  char num[16];
  std::snprintf(num, sizeof num, "%06zu", index);
  return std::string(domain) + "-" + num;
}

std::vector<Demonstration> select_demonstrations(std::span<const ConstituencyTree> pool, std::size_t k,
                                                 Strategy strategy, std::uint64_t seed) {
  if (k > pool.size()) {
    throw PromptError(PromptErrorKind::MissingDemonstrations, "requested " + std::to_string(k) +
                                                                  " demonstrations from a pool of " +
                                                                  std::to_string(pool.size()));
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the order is stable across standard libraries.
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  std::vector<Demonstration> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(make_demonstration(pool[order[i]], strategy));
  return out;
}

std::string experiment_prompt(const ConstituencyTree& gold, const ExperimentConfig& config,
                              std::span<const Demonstration> demos) {
  const auto sentence = preprocess_tokens(yield_words(gold));
  PromptSpec spec = make_prompt_spec(config.templates, config.strategy, join_tokens(sentence),
                                     std::vector<Demonstration>(demos.begin(), demos.end()));
  switch (config.mode) {
    case RunMode::Zero: return build_prompt(PromptMode::zero_shot(), spec);
    case RunMode::Few: return build_prompt(PromptMode::few_shot(config.shots), spec);
    case RunMode::LES:
      spec.error_avoiding = config.exemplars;
      return build_prompt(PromptMode::les(config.shots), spec);
    case RunMode::PMC: break;
  }
  throw std::invalid_argument("PMC prompts are built round by round");
}

ResultRecord evaluate_output(std::string id, std::string domain, const ConstituencyTree& gold,
                             std::string prediction_raw, Strategy strategy, const EvalConfig& eval) {
  const ConstituencyTree gold_pre = preprocess_tree(gold);
  ResultRecord r;
  r.id = std::move(id);
  r.domain = std::move(domain);
  r.strategy = strategy;
  r.sentence = yield_words(gold_pre);
  r.gold = render_bracketed(gold_pre);
  r.prediction_raw = std::move(prediction_raw);
  std::tie(r.validity, r.faithfulness) = rule_based_check(r.prediction_raw, strategy, r.sentence);
  r.valid = r.validity.valid;
  r.faithful = r.faithfulness.faithful;
  if (r.valid) {
    const auto bracket = interpret_output(r.prediction_raw, strategy).bracket;
    r.counts = score_sentence(gold_pre, bracket, eval);
    r.counts->unfaithful = !r.faithful;
  } else {
    r.counts = invalid_counts(gold_pre, eval, !r.faithful);
  }
  return r;
}

std::vector<ResultRecord> run_experiment(const TreebankSplit& split, Backend& backend, const ExperimentConfig& config,
                                         const std::string& out_path) {
  if (config.parallel == 0) throw std::invalid_argument("parallel must be >= 1");
  if (config.mode == RunMode::Few && config.shots == 0) {
    throw PromptError(PromptErrorKind::MissingDemonstrations, "few-shot mode needs --shots >= 1");
  }
  const std::size_t k = config.mode == RunMode::Zero ? 0 : config.shots;
  const auto demos = select_demonstrations(config.demo_pool, k, config.strategy, config.seed);

  PMCConfig pmc = config.pmc;
  pmc.strategy = config.strategy;
  pmc.demonstrations = demos;
  pmc.base_mode = k > 0 ? PromptMode::few_shot(k) : PromptMode::zero_shot();
  pmc.temperature = config.temperature;
  pmc.max_tokens = config.max_tokens;
  pmc.model_id = config.model_id;
  pmc.templates = config.templates;
  if (config.mode == RunMode::PMC) pmc.validate();

  std::vector<ResultRecord> records;
  std::set<std::string> done;
  if (!out_path.empty() && std::filesystem::exists(out_path)) {
    for (auto& r : load_records(out_path)) {
      if (done.insert(r.id).second) records.push_back(std::move(r));
    }
  }
  std::ofstream out;
  if (!out_path.empty()) {
    out.open(out_path, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
  }

  std::mutex mu;
  std::exception_ptr failure;
  std::atomic<std::size_t> next{0};
  auto process = [&](std::size_t i) {
    const std::string id = record_id(split.domain, i + 1);
    {
      std::lock_guard lock(mu);
      if (done.contains(id)) return;
    }
    const ConstituencyTree& gold = split.trees[i];
    ResultRecord record;
    try {
      if (config.mode == RunMode::PMC) {
        Backend* checker = pmc.checker_mode == CheckerMode::LLMBased ? &backend : nullptr;
        const auto session = run_pmc(preprocess_tokens(yield_words(gold)), backend, pmc, checker);
        record = evaluate_output(id, split.domain, gold, session.final_output, config.strategy, config.eval);
        record.pmc_rounds = session.rounds.size();
      } else {
        CompletionRequest req{experiment_prompt(gold, config, demos), config.temperature, config.max_tokens,
                              config.model_id};
        record = evaluate_output(id, split.domain, gold, backend.complete(req).text, config.strategy, config.eval);
      }
    } catch (const BackendError& e) {
      record = evaluate_output(id, split.domain, gold, "", config.strategy, config.eval);
      record.backend_error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    std::lock_guard lock(mu);
    if (out.is_open()) {
      out << to_json(record).dump() << '\n';
      out.flush();
    }
    done.insert(record.id);
    records.push_back(std::move(record));
  };
  auto work = [&] {
    for (std::size_t i = next++; i < split.trees.size(); i = next++) {
      try {
        process(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = split.trees.size();
      }
    }
  };

  const std::size_t workers = std::min(config.parallel, std::max<std::size_t>(split.trees.size(), 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(records.begin(), records.end(),
            [](const ResultRecord& a, const ResultRecord& b) { return a.id < b.id; });
  return records;
}

}  // namespace conparse
