#include "conparse/faithfulness.hpp"

#include <algorithm>
#include <random>

#include "conparse/validity.hpp"
#include "group_scan.hpp"

namespace conparse {

namespace {

std::string join(const std::vector<std::string>& words, std::size_t first, std::size_t last) {
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out += ' ';
    out += words[i];
  }
  return out;
}

bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

struct Repeat {
  std::size_t start;
  std::size_t length;
};

std::optional<Repeat> find_repetition(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  const std::size_t n = pred.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t len = 3; i + 2 * len <= n; ++len) {
      if (!std::equal(pred.begin() + static_cast<long>(i), pred.begin() + static_cast<long>(i + len),
                      pred.begin() + static_cast<long>(i + len))) {
        continue;
      }
      std::vector<std::string> doubled(pred.begin() + static_cast<long>(i),
                                       pred.begin() + static_cast<long>(i + 2 * len));
      if (!contains_sequence(gold, doubled)) return Repeat{i, len};
    }
  }
  return std::nullopt;
}

FaithfulnessReport compare(const std::optional<std::vector<std::string>>& yield,
                           const std::vector<std::string>& sentence) {
  FaithfulnessReport report;
  if (!yield) {
    report.errors.push_back({UnfaithfulKind::PredictionFailure, std::nullopt,
                             "The output does not contain a parse of the input sentence.", {}});
    report.faithful = false;
    return report;
  }
  const auto& pred = *yield;
  if (pred.size() != sentence.size()) {
    FaithfulnessError err;
    err.kind = UnfaithfulKind::OverGeneration;
    err.sub = classify_overgeneration(pred, sentence);
    err.detail = "The tree contains " + std::to_string(pred.size()) + " words but the input sentence has " +
                 std::to_string(sentence.size()) + " words.";
    switch (*err.sub) {
      case OverGenerationSub::Repetition: {
        const auto rep = *find_repetition(pred, sentence);
        err.detail += " The words '" + join(pred, rep.start, rep.start + rep.length) + "' are repeated.";
        for (std::size_t i = rep.start + rep.length; i < rep.start + 2 * rep.length; ++i) err.positions.push_back(i);
        break;
      }
      case OverGenerationSub::ContinueWriting:
        err.detail += " The tree continues after the end of the sentence with '" +
                      join(pred, sentence.size(), pred.size()) + "'.";
        for (std::size_t i = sentence.size(); i < pred.size(); ++i) err.positions.push_back(i);
        break;
      case OverGenerationSub::Other: {
        std::size_t i = 0;
        while (i < pred.size() && i < sentence.size() && pred[i] == sentence[i]) ++i;
        err.positions.push_back(i);
        if (pred.size() < sentence.size()) {
          err.detail += " Words of the input sentence are missing from the tree.";
        }
        break;
      }
    }
    report.errors.push_back(std::move(err));
  } else {
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] != sentence[i]) {
        report.errors.push_back({UnfaithfulKind::WordMismatch, std::nullopt,
                                 mismatch_detail(pred[i], sentence[i], i, sentence), {i}});
      }
    }
  }
  report.faithful = report.errors.empty();
  return report;
}

}  // namespace

std::string_view to_string(UnfaithfulKind kind) {
  switch (kind) {
    case UnfaithfulKind::OverGeneration: return "OverGeneration";
    case UnfaithfulKind::WordMismatch: return "WordMismatch";
    case UnfaithfulKind::PredictionFailure: return "PredictionFailure";
  }
  return "?";
}

std::string_view to_string(OverGenerationSub sub) {
  switch (sub) {
    case OverGenerationSub::Repetition: return "Repetition";
    case OverGenerationSub::ContinueWriting: return "ContinueWriting";
    case OverGenerationSub::Other: return "Other";
  }
  return "?";
}

UnfaithfulKind parse_unfaithful_kind(std::string_view name) {
  for (auto k : {UnfaithfulKind::OverGeneration, UnfaithfulKind::WordMismatch, UnfaithfulKind::PredictionFailure}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown unfaithful kind '" + std::string(name) + "'");
}

OverGenerationSub parse_overgeneration_sub(std::string_view name) {
  for (auto s : {OverGenerationSub::Repetition, OverGenerationSub::ContinueWriting, OverGenerationSub::Other}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown over-generation subkind '" + std::string(name) + "'");
}

std::optional<UnfaithfulKind> FaithfulnessReport::primary_kind() const {
  if (errors.empty()) return std::nullopt;
  return errors.front().kind;
}

std::optional<std::vector<std::string>> predicted_yield(std::string_view raw) {
  const std::string_view text = extract_tree_text(raw);
  if (text.empty()) return std::nullopt;
  std::vector<std::string> words;
  for (const auto& g : detail::scan_groups(text)) {
    if (g.children == 0 && !g.label.empty()) words.insert(words.end(), g.words.begin(), g.words.end());
  }
  if (words.empty()) return std::nullopt;
  return words;
}

FaithfulnessReport check_faithfulness(std::string_view raw, const std::vector<std::string>& sentence) {
  return compare(predicted_yield(raw), sentence);
}

FaithfulnessReport check_faithfulness(const ConstituencyTree& tree, const std::vector<std::string>& sentence) {
  return compare(yield_words(tree), sentence);
}

OverGenerationSub classify_overgeneration(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (find_repetition(pred, gold)) return OverGenerationSub::Repetition;
  if (pred.size() > gold.size() && std::equal(gold.begin(), gold.end(), pred.begin())) {
    return OverGenerationSub::ContinueWriting;
  }
  return OverGenerationSub::Other;
}

std::string mismatch_detail(std::string_view predicted, std::string_view expected, std::size_t position,
                            const std::vector<std::string>& sentence) {
  if (std::find(sentence.begin(), sentence.end(), predicted) == sentence.end()) {
    return "'" + std::string(predicted) + "' does not exist in the original input sentence.";
  }
  return "'" + std::string(predicted) + "' should be '" + std::string(expected) + "' (word " +
         std::to_string(position + 1) + " of the input sentence).";
}

const SubstitutionTable& builtin_substitutions() {
  static const SubstitutionTable table = {
      {"located", "situated"},   {"big", "large"},        {"large", "big"},          {"small", "little"},
      {"little", "small"},       {"buy", "purchase"},     {"bought", "purchased"},   {"sell", "vend"},
      {"said", "stated"},        {"says", "states"},      {"company", "firm"},       {"firm", "company"},
      {"begin", "start"},        {"began", "started"},    {"start", "begin"},        {"end", "finish"},
      {"rise", "increase"},      {"rose", "increased"},   {"fell", "dropped"},       {"fall", "drop"},
      {"quick", "fast"},         {"fast", "quick"},       {"huge", "enormous"},      {"halted", "stopped"},
      {"abruptly", "suddenly"},  {"orders", "requests"},  {"comfortable", "relaxed"}, {"affluent", "wealthy"},
      {"wealthy", "rich"},       {"rich", "wealthy"},     {"happy", "glad"},         {"sad", "unhappy"},
      {"show", "display"},       {"help", "assist"},      {"get", "obtain"},         {"got", "obtained"},
      {"house", "home"},         {"car", "automobile"},   {"people", "persons"},     {"children", "kids"},
      {"market", "marketplace"}, {"shares", "stocks"},    {"stock", "share"},        {"profit", "gain"},
      {"84", "81"},              {"1", "7"},              {"2", "3"},                {"10", "100"},
      {"1990", "1991"},          {"million", "billion"},  {"billion", "million"},    {"percent", "%"},
  };
  return table;
}

UnfaithfulSample corrupt_faithfulness(const ConstituencyTree& tree, const SubstitutionTable& table,
                                      std::uint64_t seed) {
  const auto words = yield_words(tree);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto it = table.find(words[i]);
    if (it != table.end() && it->second != words[i] && !it->second.empty()) candidates.push_back(i);
  }
  if (candidates.empty()) throw InapplicableCorruption("no token of the tree appears in the substitution table");
  std::mt19937_64 rng(seed);
  const std::size_t pos = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
  const std::string& replacement = table.at(words[pos]);
  std::size_t i = 0;
  auto swapped = map_words(tree, [&](const std::string& w) { return i++ == pos ? replacement : w; });
  return {render_bracketed(swapped), mismatch_detail(replacement, words[pos], pos, words), pos};
}

nlohmann::json to_json(const FaithfulnessReport& report) {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : report.errors) {
    errors.push_back({{"kind", to_string(e.kind)},
                      {"sub", e.sub ? nlohmann::json(to_string(*e.sub)) : nlohmann::json(nullptr)},
                      {"detail", e.detail},
                      {"positions", e.positions}});
  }
  return {{"faithful", report.faithful}, {"errors", errors}};
}

FaithfulnessReport faithfulness_from_json(const nlohmann::json& j) {
  FaithfulnessReport r;
  r.faithful = j.at("faithful").get<bool>();
  for (const auto& e : j.at("errors")) {
    FaithfulnessError err;
    err.kind = parse_unfaithful_kind(e.at("kind").get<std::string>());
    if (e.contains("sub") && e.at("sub").is_string()) err.sub = parse_overgeneration_sub(e.at("sub").get<std::string>());
    if ((err.kind == UnfaithfulKind::OverGeneration) != err.sub.has_value()) {
      throw std::invalid_argument("'sub' must be present exactly for OverGeneration");
    }
    err.detail = e.at("detail").get<std::string>();
    if (e.contains("positions")) err.positions = e.at("positions").get<std::vector<std::size_t>>();
    r.errors.push_back(std::move(err));
  }
  if (r.faithful != r.errors.empty()) throw std::invalid_argument("'faithful' disagrees with the error list");
  return r;
}

}  // namespace conparse
