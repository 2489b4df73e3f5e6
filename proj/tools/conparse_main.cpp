#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "conparse/backend.hpp"
#include "conparse/corpus.hpp"
#include "conparse/faithfulness.hpp"
#include "conparse/linearize.hpp"
#include "conparse/pmc.hpp"
#include "conparse/prompting.hpp"
#include "conparse/report.hpp"
#include "conparse/scoring.hpp"
#include "conparse/tree.hpp"
#include "conparse/validity.hpp"

using namespace conparse;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::stringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Bracket and transition outputs are one per line; span outputs are blocks
// separated by blank lines.
std::vector<std::string> read_outputs(const std::string& text, Strategy strategy) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  if (strategy != Strategy::Span) {
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      out.push_back(line);
    }
    return out;
  }
  std::string block;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      if (!block.empty()) out.push_back(block);
      block.clear();
    } else {
      if (!block.empty()) block += '\n';
      block += line;
    }
  }
  if (!block.empty()) out.push_back(block);
  return out;
}

struct Output {
  std::ofstream file;
  std::ostream* stream = &std::cout;

  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file.open(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + path);
    stream = &file;
  }
  std::ostream& operator*() { return *stream; }
};

struct BackendOptions {
  std::string kind = "script";
  std::string script;
  std::string record;
  std::size_t parallel = 1;
};

void add_backend_options(CLI::App* cmd, BackendOptions& opts) {
  cmd->add_option("--backend", opts.kind, "Completion backend")->check(CLI::IsMember({"http", "script"}));
  cmd->add_option("--script", opts.script, "Scripted responses (JSONL)");
  cmd->add_option("--record", opts.record, "Write every request/response pair here as a replay script");
  cmd->add_option("--parallel", opts.parallel, "Concurrent requests")->check(CLI::PositiveNumber);
}

std::unique_ptr<Backend> make_backend(const BackendOptions& opts) {
  if (opts.kind == "http") return std::make_unique<HttpBackend>(HttpConfig::from_env());
  if (opts.script.empty()) throw std::invalid_argument("--backend script needs --script FILE");
  return std::make_unique<ScriptedBackend>(ScriptedBackend::load(opts.script));
}

void save_recording(const BackendOptions& opts, const RecordingBackend& rec) {
  if (opts.record.empty()) return;
  Output out(opts.record);
  *out << rec.to_script();
}

std::vector<ConstituencyTree> load_trees(const std::string& path, bool lenient) {
  auto split = load_treebank(path, "", "test", lenient);
  for (const auto& s : split.skipped) std::cerr << path << ":" << s.line << ": skipped: " << s.message << '\n';
  return std::move(split.trees);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constituency parsing with language models: linearization, checking, scoring and prompting."};
  app.require_subcommand(1);

  std::string strategy_name = "bracket";
  bool lenient = false;
  std::string out_path;
  auto strategy_option = [&](CLI::App* cmd) {
    cmd->add_option("--strategy", strategy_name, "bracket, transition or span")
        ->check(CLI::IsMember({"bracket", "transition", "span"}));
  };

  // stats
  std::string stats_file;
  bool stats_json = false;
  auto* stats = app.add_subcommand("stats", "Treebank statistics");
  stats->add_option("treebank", stats_file)->required();
  stats->add_flag("--lenient", lenient, "Skip malformed trees");
  stats->add_flag("--json", stats_json, "JSON output");

  // linearize / decode
  std::string lin_file;
  auto* linearize = app.add_subcommand("linearize", "Linearize every tree of a treebank");
  linearize->add_option("treebank", lin_file)->required();
  linearize->add_flag("--lenient", lenient);
  linearize->add_option("--out", out_path);
  strategy_option(linearize);

  std::string dec_file;
  auto* decode_cmd = app.add_subcommand("decode", "Decode linearized trees back to brackets");
  decode_cmd->add_option("input", dec_file)->required();
  decode_cmd->add_option("--out", out_path);
  strategy_option(decode_cmd);

  // validate / faithcheck
  std::string val_file;
  auto* validate = app.add_subcommand("validate", "Check predicted trees for validity (one per line)");
  validate->add_option("predictions", val_file)->required();
  strategy_option(validate);

  std::string fc_gold;
  std::string fc_pred;
  auto* faithcheck = app.add_subcommand("faithcheck", "Check predicted trees against gold sentences");
  faithcheck->add_option("--gold", fc_gold, "Gold treebank")->required();
  faithcheck->add_option("--pred", fc_pred, "Predictions")->required();
  faithcheck->add_flag("--lenient", lenient);
  strategy_option(faithcheck);

  // corrupt
  std::string cor_file;
  std::string cor_kind = "MissingWord";
  std::uint64_t seed = 0;
  auto* corrupt = app.add_subcommand("corrupt", "Inject errors into gold trees");
  corrupt->add_option("treebank", cor_file)->required();
  corrupt->add_option("--kind", cor_kind)
      ->check(CLI::IsMember({"BracketUnmatched", "MissingWord", "MoreThanOneWord", "WordMismatch"}));
  corrupt->add_option("--seed", seed);
  corrupt->add_option("--out", out_path);
  corrupt->add_flag("--lenient", lenient);

  // score
  std::string sc_gold;
  std::string sc_pred;
  std::string sc_config;
  std::string policy_name;
  bool sc_json = false;
  auto* score = app.add_subcommand("score", "Labeled bracket scoring of predictions against gold trees");
  score->add_option("--gold", sc_gold)->required();
  score->add_option("--pred", sc_pred)->required();
  score->add_option("--config", sc_config, "key=value evaluation parameters");
  score->add_option("--invalid-policy", policy_name)->check(CLI::IsMember({"zero", "skip"}));
  score->add_flag("--json", sc_json);
  score->add_flag("--lenient", lenient);
  strategy_option(score);

  // parse
  std::string p_treebank;
  std::string p_domain = "test";
  std::string p_mode = "zero";
  std::size_t p_shots = 0;
  std::string p_demos;
  std::string p_templates;
  std::size_t pmc_rounds = 3;
  std::string checker_mode = "rule";
  BackendOptions backend_opts;
  auto* parse = app.add_subcommand("parse", "Run a prompting experiment over a treebank");
  parse->add_option("treebank", p_treebank)->required();
  parse->add_option("--domain", p_domain);
  parse->add_option("--mode", p_mode)->check(CLI::IsMember({"zero", "few", "les", "pmc"}));
  parse->add_option("--shots", p_shots);
  parse->add_option("--demos", p_demos, "Treebank the demonstrations are drawn from");
  parse->add_option("--templates", p_templates, "Directory of prompt templates");
  parse->add_option("--invalid-policy", policy_name)->check(CLI::IsMember({"zero", "skip"}));
  parse->add_option("--pmc-rounds", pmc_rounds)->check(CLI::PositiveNumber);
  parse->add_option("--checker-mode", checker_mode)->check(CLI::IsMember({"rule", "llm"}));
  parse->add_option("--seed", seed);
  parse->add_option("--out", out_path, "Result records (JSONL, resumable)");
  parse->add_flag("--lenient", lenient);
  strategy_option(parse);
  add_backend_options(parse, backend_opts);

  // pmc
  std::string pmc_sentence;
  std::string pmc_trace;
  auto* pmc = app.add_subcommand("pmc", "Multi-agent refinement of one sentence");
  pmc->add_option("sentence", pmc_sentence)->required();
  pmc->add_option("--pmc-rounds", pmc_rounds)->check(CLI::PositiveNumber);
  pmc->add_option("--checker-mode", checker_mode)->check(CLI::IsMember({"rule", "llm"}));
  pmc->add_option("--out", pmc_trace, "Session trace (JSON)");
  strategy_option(pmc);
  add_backend_options(pmc, backend_opts);

  // report
  std::string r_file;
  std::string r_in_domain;
  double r_reference = -1;
  bool r_by_input = false;
  bool r_by_span = false;
  std::size_t r_width = 5;
  std::string r_format = "text";
  auto* report = app.add_subcommand("report", "Summarize result records");
  report->add_option("records", r_file)->required();
  report->add_option("--in-domain", r_in_domain, "Domain whose F1 is the reduction-rate reference");
  report->add_option("--reference-f1", r_reference, "Reference F1 in percent");
  report->add_flag("--by-input-length", r_by_input);
  report->add_flag("--by-span-length", r_by_span);
  report->add_option("--span-width", r_width)->check(CLI::PositiveNumber);
  report->add_option("--format", r_format)->check(CLI::IsMember({"text", "json", "csv"}));
  report->add_option("--invalid-policy", policy_name)->check(CLI::IsMember({"zero", "skip"}));

  // export-finetune
  std::string ft_file;
  auto* finetune = app.add_subcommand("export-finetune", "Write instruction-tuning records (JSONL)");
  finetune->add_option("treebank", ft_file)->required();
  finetune->add_option("--out", out_path);
  finetune->add_flag("--lenient", lenient);
  strategy_option(finetune);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const Strategy strategy = parse_strategy(strategy_name);
    EvalConfig eval;
    if (!sc_config.empty()) eval = load_eval_config(sc_config);
    if (!policy_name.empty()) eval.invalid_policy = parse_invalid_policy(policy_name);

    if (*stats) {
      const auto trees = load_trees(stats_file, lenient);
      const auto s = treebank_stats(trees);
      if (stats_json) {
        std::cout << to_json(s).dump(2) << '\n';
      } else {
        std::cout << "trees        " << s.trees << "\ntokens       " << s.tokens << "\nconstituents "
                  << s.constituents << "\nmean length  " << s.mean_length << "\nmax length   " << s.max_length
                  << "\nmean depth   " << s.mean_depth << '\n';
      }
    } else if (*linearize) {
      Output out(out_path);
      bool first = true;
      for (const auto& t : load_trees(lin_file, lenient)) {
        if (strategy == Strategy::Span && !first) *out << '\n';
        *out << encode(t, strategy).payload << '\n';
        first = false;
      }
    } else if (*decode_cmd) {
      Output out(out_path);
      for (const auto& payload : read_outputs(slurp(dec_file), strategy)) {
        if (strategy != Strategy::Span && payload.empty()) continue;
        *out << render_bracketed(decode({strategy, payload})) << '\n';
      }
    } else if (*validate) {
      for (const auto& raw : read_outputs(slurp(val_file), strategy)) {
        const auto bracket = interpret_output(raw, strategy);
        ValidityReport r;
        if (bracket.bracket.empty() && !bracket.error.empty()) {
          r.valid = false;
          r.errors.push_back({InvalidKind::Other, "", "The output cannot be read as a tree: " + bracket.error});
        } else {
          r = check_validity(bracket.bracket);
        }
        std::cout << to_json(r).dump() << '\n';
      }
    } else if (*faithcheck) {
      const auto gold = load_trees(fc_gold, lenient);
      const auto preds = read_outputs(slurp(fc_pred), strategy);
      if (preds.size() != gold.size()) {
        throw std::invalid_argument("gold has " + std::to_string(gold.size()) + " trees but there are " +
                                    std::to_string(preds.size()) + " predictions");
      }
      for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto sentence = preprocess_tokens(yield_words(gold[i]));
        std::cout << to_json(rule_based_check(preds[i], strategy, sentence).second).dump() << '\n';
      }
    } else if (*corrupt) {
      Output out(out_path);
      std::size_t index = 0;
      for (const auto& t : load_trees(cor_file, lenient)) {
        const std::uint64_t s = seed + index++;
        try {
          json j;
          if (cor_kind == "WordMismatch") {
            const auto sample = corrupt_faithfulness(t, builtin_substitutions(), s);
            j = {{"kind", cor_kind}, {"text", sample.text}, {"annotation", sample.annotation}};
          } else {
            const auto sample = corrupt_validity(t, parse_invalid_kind(cor_kind), s);
            j = {{"kind", cor_kind}, {"text", sample.text}, {"annotation", sample.annotation}};
          }
          j["gold"] = render_bracketed(t);
          *out << j.dump() << '\n';
        } catch (const InapplicableCorruption& e) {
          std::cerr << "tree " << index << ": skipped: " << e.what() << '\n';
        }
      }
    } else if (*score) {
      const auto gold = load_trees(sc_gold, lenient);
      const auto preds = read_outputs(slurp(sc_pred), strategy);
      if (preds.size() != gold.size()) {
        throw std::invalid_argument("gold has " + std::to_string(gold.size()) + " trees but there are " +
                                    std::to_string(preds.size()) + " predictions");
      }
      std::vector<SentenceCounts> counts;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        counts.push_back(*evaluate_output(record_id("score", i + 1), "score", gold[i], preds[i], strategy, eval).counts);
      }
      const auto r = score_corpus(counts, eval);
      if (sc_json) {
        std::cout << to_json(r).dump(2) << '\n';
      } else {
        std::cout << format_score_table(r);
      }
    } else if (*parse) {
      ExperimentConfig config;
      config.mode = parse_run_mode(p_mode);
      config.shots = p_shots;
      config.strategy = strategy;
      config.eval = eval;
      config.seed = seed;
      config.parallel = backend_opts.parallel;
      if (!p_templates.empty()) config.templates = load_templates(p_templates);
      if (!p_demos.empty()) config.demo_pool = load_trees(p_demos, lenient);
      config.pmc.max_rounds = pmc_rounds;
      config.pmc.checker_mode = parse_checker_mode(checker_mode);
      const auto split = load_treebank(p_treebank, p_domain, "test", lenient);
      auto backend = make_backend(backend_opts);
      RecordingBackend recording(*backend);
      LimitedBackend limited(recording, backend_opts.parallel);
      const auto records = run_experiment(split, limited, config, out_path);
      save_recording(backend_opts, recording);
      if (out_path.empty()) {
        for (const auto& r : records) std::cout << to_json(r).dump() << '\n';
      }
      std::size_t failures = 0;
      for (const auto& r : records) failures += r.backend_error.empty() ? 0 : 1;
      std::cerr << records.size() << " records, " << failures << " backend failures\n";
      if (failures > 0) return kBackend;
    } else if (*pmc) {
      PMCConfig config;
      config.max_rounds = pmc_rounds;
      config.checker_mode = parse_checker_mode(checker_mode);
      config.strategy = strategy;
      auto backend = make_backend(backend_opts);
      RecordingBackend recording(*backend);
      const auto sentence = preprocess(pmc_sentence);
      try {
        const auto session = run_pmc(sentence, recording, config,
                                     config.checker_mode == CheckerMode::LLMBased ? &recording : nullptr);
        save_recording(backend_opts, recording);
        Output out(pmc_trace);
        *out << to_json(session).dump(2) << '\n';
        std::cerr << session.rounds.size() << " rounds, " << (session.converged ? "converged" : "not converged")
                  << '\n';
      } catch (const PMCError& e) {
        save_recording(backend_opts, recording);
        if (!pmc_trace.empty()) {
          Output out(pmc_trace);
          *out << to_json(e.partial()).dump(2) << '\n';
        }
        throw;
      }
    } else if (*report) {
      const auto records = load_records(r_file);
      ReportOptions opts;
      opts.eval = eval;
      if (!r_in_domain.empty()) opts.in_domain = r_in_domain;
      if (r_reference >= 0) opts.reference_f1 = r_reference;
      opts.by_input_length = r_by_input;
      opts.by_span_length = r_by_span;
      opts.span_bucket_width = r_width;
      const auto rep = build_report(records, opts);
      if (r_format == "json") {
        std::cout << to_json(rep).dump(2) << '\n';
      } else if (r_format == "csv") {
        std::cout << format_report_csv(rep);
      } else {
        std::cout << format_report_text(rep);
      }
    } else if (*finetune) {
      Output out(out_path);
      const auto trees = load_trees(ft_file, lenient);
      for (const auto& rec : export_finetune_records(trees, strategy)) *out << to_json(rec).dump() << '\n';
    }
  } catch (const BackendError& e) {
    std::cerr << "backend error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
