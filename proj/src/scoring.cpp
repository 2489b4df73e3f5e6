#include "conparse/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "conparse/faithfulness.hpp"
#include "conparse/validity.hpp"

namespace conparse {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double ratio(std::size_t num, std::size_t den) {
  if (den == 0) return num == 0 ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

struct Totals {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  void add(const SentenceCounts& c) {
    matched += c.matched;
    predicted += c.predicted;
    gold += c.gold;
  }
  double f1() const { return f1_score(ratio(matched, predicted), ratio(matched, gold)); }
};

}  // namespace

std::string_view to_string(InvalidPolicy p) {
  return p == InvalidPolicy::ZeroCounts ? "zero" : "skip";
}

InvalidPolicy parse_invalid_policy(std::string_view name) {
  if (name == "zero" || name == "ZeroCounts") return InvalidPolicy::ZeroCounts;
  if (name == "skip" || name == "SkipInvalid") return InvalidPolicy::SkipInvalid;
  throw std::invalid_argument("unknown invalid policy '" + std::string(name) + "' (expected zero or skip)");
}

EvalConfig parse_eval_config(std::string_view text) {
  EvalConfig config;
  bool delete_seen = false;
  bool punct_seen = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key(trim(view.substr(0, eq)));
    const std::string value(trim(view.substr(eq + 1)));
    if (key == "DELETE_LABEL") {
      if (!delete_seen) config.delete_labels.clear();
      delete_seen = true;
      if (!value.empty()) config.delete_labels.insert(value);
    } else if (key == "PUNCT_POS") {
      if (!punct_seen) config.punctuation_pos.clear();
      punct_seen = true;
      if (!value.empty()) config.punctuation_pos.insert(value);
    } else if (key == "INVALID_POLICY") {
      config.invalid_policy = parse_invalid_policy(value);
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return config;
}

EvalConfig load_eval_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_eval_config(buf.str());
}

std::vector<LabeledSpan> evaluation_spans(const ConstituencyTree& tree, const EvalConfig& config) {
  // remap[i] = number of kept tokens before position i
  std::vector<std::size_t> remap;
  remap.reserve(tree.size() + 1);
  std::size_t kept = 0;
  auto walk = [&](auto&& self, const Node& n) -> void {
    if (n.is_preterminal()) {
      remap.push_back(kept);
      if (!config.punctuation_pos.contains(n.label)) ++kept;
      return;
    }
    for (const auto& c : n.children) self(self, c);
  };
  walk(walk, tree.root());
  remap.push_back(kept);

  std::vector<LabeledSpan> out;
  for (const auto& s : extract_spans(tree, false)) {
    if (config.delete_labels.contains(s.label)) continue;
    const std::size_t start = remap[s.start];
    const std::size_t end = remap[s.end];
    if (start == end) continue;
    out.push_back({s.label, start, end});
  }
  return out;
}

std::size_t multiset_intersection(std::vector<LabeledSpan> a, std::vector<LabeledSpan> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++n;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return n;
}

SentenceCounts score_sentence(const ConstituencyTree& gold, const ConstituencyTree& pred, const EvalConfig& config) {
  const auto gold_spans = evaluation_spans(gold, config);
  const auto pred_spans = evaluation_spans(pred, config);
  SentenceCounts c;
  c.gold = gold_spans.size();
  c.predicted = pred_spans.size();
  c.matched = multiset_intersection(gold_spans, pred_spans);
  c.unfaithful = !check_faithfulness(pred, yield_words(gold)).faithful;
  return c;
}

SentenceCounts score_sentence(const ConstituencyTree& gold, std::string_view pred_raw, const EvalConfig& config) {
  const bool valid = check_validity(pred_raw).valid;
  if (!valid) {
    SentenceCounts c;
    c.gold = evaluation_spans(gold, config).size();
    c.invalid = true;
    c.unfaithful = !check_faithfulness(pred_raw, yield_words(gold)).faithful;
    return c;
  }
  const auto pred = parse_bracketed(extract_tree_text(pred_raw), ParseOptions{true, false, false});
  return score_sentence(gold, pred, config);
}

double f1_score(double precision, double recall) {
  if (precision + recall <= 0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

ScoreReport score_corpus(const std::vector<SentenceCounts>& counts, const EvalConfig& config) {
  if (counts.empty()) throw EmptyCorpus();
  ScoreReport r;
  Totals policy;
  Totals overall;
  Totals valid_only;
  double macro = 0;
  for (const auto& c : counts) {
    overall.add(c);
    if (!c.invalid) valid_only.add(c);
    if (!(c.invalid && config.invalid_policy == InvalidPolicy::SkipInvalid)) policy.add(c);
    if (c.invalid) ++r.invalid;
    if (c.unfaithful) ++r.unfaithful;
    macro += c.invalid ? 0.0 : f1_score(ratio(c.matched, c.predicted), ratio(c.matched, c.gold));
  }
  r.sentences = counts.size();
  r.matched = policy.matched;
  r.predicted = policy.predicted;
  r.gold = policy.gold;
  r.lp = ratio(policy.matched, policy.predicted);
  r.lr = ratio(policy.matched, policy.gold);
  r.f1 = f1_score(r.lp, r.lr);
  r.overall_f1 = overall.f1();
  r.valid_f1 = r.invalid == r.sentences ? 0.0 : valid_only.f1();
  r.macro_f1 = macro / static_cast<double>(counts.size());
  r.invalid_rate = 100.0 * static_cast<double>(r.invalid) / static_cast<double>(r.sentences);
  r.unfaithful_rate = 100.0 * static_cast<double>(r.unfaithful) / static_cast<double>(r.sentences);
  return r;
}

double reduction_rate(double f1_in_domain, double f1_out_avg) {
  if (f1_in_domain == 0.0) throw std::domain_error("reduction rate: in-domain F1 is zero");
  if (f1_in_domain < 0.0) throw std::domain_error("reduction rate: in-domain F1 must be positive");
  return 100.0 * (f1_in_domain - f1_out_avg) / f1_in_domain;
}

nlohmann::json to_json(const SentenceCounts& c) {
  return {{"matched", c.matched}, {"predicted", c.predicted}, {"gold", c.gold},
          {"invalid", c.invalid}, {"unfaithful", c.unfaithful}};
}

SentenceCounts counts_from_json(const nlohmann::json& j) {
  SentenceCounts c;
  c.matched = j.at("matched").get<std::size_t>();
  c.predicted = j.at("predicted").get<std::size_t>();
  c.gold = j.at("gold").get<std::size_t>();
  c.invalid = j.at("invalid").get<bool>();
  c.unfaithful = j.value("unfaithful", false);
  return c;
}

nlohmann::json to_json(const ScoreReport& r) {
  return {{"LP", r.lp},
          {"LR", r.lr},
          {"F1", r.f1},
          {"valid_F1", r.valid_f1},
          {"overall_F1", r.overall_f1},
          {"macro_F1", r.macro_f1},
          {"invalid_rate", r.invalid_rate},
          {"unfaithful_rate", r.unfaithful_rate},
          {"sentences", r.sentences},
          {"invalid", r.invalid},
          {"unfaithful", r.unfaithful},
          {"matched", r.matched},
          {"predicted", r.predicted},
          {"gold", r.gold}};
}

std::string format_score_table(const ScoreReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "Sentences        " << std::setw(10) << r.sentences << '\n'
     << "Matched/Pred/Gold " << r.matched << '/' << r.predicted << '/' << r.gold << '\n'
     << "LP               " << std::setw(10) << 100 * r.lp << '\n'
     << "LR               " << std::setw(10) << 100 * r.lr << '\n'
     << "F1               " << std::setw(10) << 100 * r.f1 << '\n'
     << "Valid F1         " << std::setw(10) << 100 * r.valid_f1 << '\n'
     << "Overall F1       " << std::setw(10) << 100 * r.overall_f1 << '\n'
     << "Macro F1         " << std::setw(10) << 100 * r.macro_f1 << '\n'
     << "Invalid rate     " << std::setw(10) << r.invalid_rate << '\n'
     << "Unfaithful rate  " << std::setw(10) << r.unfaithful_rate << '\n';
  return os.str();
}

}  // namespace conparse
