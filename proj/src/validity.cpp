#include "conparse/validity.hpp"

#include <algorithm>
#include <random>

#include "group_scan.hpp"

namespace conparse {

namespace {

using detail::Group;
using detail::scan_groups;

std::string group_text(std::string_view text, const Group& g) {
  std::size_t end = g.close == std::string_view::npos ? text.size() : g.close + 1;
  return std::string(text.substr(g.open, end - g.open));
}

std::string compact_constituent(const Group& g) {
  std::string out = "(" + g.label;
  for (const auto& w : g.words) out += " " + w;
  return out + ")";
}

int rank(InvalidKind k) { return static_cast<int>(k); }

std::string render_with(const Node& n, const std::vector<std::string>& leaf_text, std::size_t& k) {
  if (n.is_preterminal()) {
    std::string out = "(" + n.label;
    if (!leaf_text[k].empty()) out += " " + leaf_text[k];
    ++k;
    return out + ")";
  }
  std::string out = "(" + n.label;
  for (const auto& c : n.children) out += " " + render_with(c, leaf_text, k);
  return out + ")";
}

}  // namespace

std::string_view to_string(InvalidKind kind) {
  switch (kind) {
    case InvalidKind::BracketUnmatched: return "BracketUnmatched";
    case InvalidKind::MissingWord: return "MissingWord";
    case InvalidKind::MoreThanOneWord: return "MoreThanOneWord";
    case InvalidKind::Other: return "Other";
  }
  return "?";
}

InvalidKind parse_invalid_kind(std::string_view name) {
  for (auto k : {InvalidKind::BracketUnmatched, InvalidKind::MissingWord, InvalidKind::MoreThanOneWord,
                 InvalidKind::Other}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown invalid-tree kind '" + std::string(name) + "'");
}

std::optional<InvalidKind> ValidityReport::primary_kind() const {
  if (errors.empty()) return std::nullopt;
  return errors.front().kind;
}

bool ValidityReport::has(InvalidKind kind) const {
  return std::any_of(errors.begin(), errors.end(), [kind](const ValidityError& e) { return e.kind == kind; });
}

std::string missing_word_message(std::string_view label) {
  return "The constituent (" + std::string(label) + ") lacks a word.";
}

std::string more_than_one_word_message(std::string_view constituent) {
  return "The constituent " + std::string(constituent) + " contains more than one word.";
}

std::string bracket_message(std::size_t opens, std::size_t closes) {
  return "The brackets are unmatched: the tree has " + std::to_string(opens) + " left brackets and " +
         std::to_string(closes) + " right brackets.";
}

std::string_view extract_tree_text(std::string_view raw) {
  const auto first = raw.find('(');
  if (first == std::string_view::npos) return {};
  const auto last = raw.rfind(')');
  if (last == std::string_view::npos || last < first) return raw.substr(first);
  return raw.substr(first, last - first + 1);
}

ValidityReport check_validity(std::string_view raw) {
  ValidityReport report;
  const std::string_view text = extract_tree_text(raw);
  if (text.empty()) {
    report.valid = false;
    report.errors.push_back({InvalidKind::Other, "", "The output does not contain a constituency tree."});
    return report;
  }

  std::size_t opens = 0;
  std::size_t closes = 0;
  long depth = 0;
  std::optional<std::size_t> stray_close;
  std::optional<std::size_t> second_tree;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '(') {
      if (depth == 0 && i > 0 && !second_tree && !stray_close) second_tree = i;
      ++opens;
      ++depth;
    } else if (text[i] == ')') {
      ++closes;
      if (--depth < 0) {
        if (!stray_close) stray_close = i;
        depth = 0;
      }
    }
  }
  if (opens != closes || stray_close) {
    std::size_t at = stray_close ? *stray_close : text.size();
    std::string message = bracket_message(opens, closes);
    if (opens == closes) {
      message = "The brackets are unmatched: the right bracket at offset " + std::to_string(at) +
                " has no matching left bracket.";
    }
    report.errors.push_back({InvalidKind::BracketUnmatched, "offset " + std::to_string(at), message});
  } else if (second_tree) {
    report.errors.push_back({InvalidKind::Other, "offset " + std::to_string(*second_tree),
                             "The output contains more than one tree."});
  }

  for (const Group& g : scan_groups(text)) {
    const std::string where = group_text(text, g);
    if (g.children == 0) {
      if (g.label.empty()) {
        report.errors.push_back({InvalidKind::Other, where, "The tree contains an empty constituent ()."});
      } else if (g.words.empty()) {
        report.errors.push_back({InvalidKind::MissingWord, where, missing_word_message(g.label)});
      } else if (g.words.size() > 1) {
        report.errors.push_back(
            {InvalidKind::MoreThanOneWord, where, more_than_one_word_message(compact_constituent(g))});
      }
    } else {
      if (!g.words.empty()) {
        report.errors.push_back({InvalidKind::Other, where,
                                 "The word '" + g.words.front() + "' under constituent (" + g.label +
                                     ") is not wrapped in a word-level constituent."});
      }
      if (g.label.empty() && g.open != 0) {
        report.errors.push_back({InvalidKind::Other, where, "A constituent has no label."});
      }
    }
  }

  if (report.errors.empty()) {
    try {
      (void)parse_bracketed(text, ParseOptions{true, false, false});
    } catch (const TreeError& e) {
      std::string message = "The output is not a well-formed constituency tree.";
      if (e.kind() == TreeErrorKind::Malformed &&
          std::string_view(e.what()).find("root must be a phrasal") != std::string_view::npos) {
        message = "The tree has no phrasal root constituent.";
      }
      report.errors.push_back({InvalidKind::Other,
                               e.location().empty() ? "offset " + std::to_string(e.offset()) : e.location(),
                               message});
    }
  }

  std::stable_sort(report.errors.begin(), report.errors.end(),
                   [](const ValidityError& a, const ValidityError& b) { return rank(a.kind) < rank(b.kind); });
  report.valid = report.errors.empty();
  return report;
}

CorruptedSample corrupt_validity(const ConstituencyTree& tree, InvalidKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = tree.size();
  auto pick = [&rng](std::size_t count) {
    return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
  };

  switch (kind) {
    case InvalidKind::MissingWord: {
      std::vector<std::string> leaves = yield_words(tree);
      const std::size_t k = pick(n);
      leaves[k].clear();
      std::size_t cursor = 0;
      std::string text = render_with(tree.root(), leaves, cursor);
      std::string label;
      for (const auto& s : extract_spans(tree, true)) {
        if (s.start == k && s.end == k + 1) label = s.label;  // the deepest one is the preterminal
      }
      return {text, missing_word_message(label)};
    }
    case InvalidKind::MoreThanOneWord: {
      if (n < 2) throw InapplicableCorruption("MoreThanOneWord needs a tree with at least two words");
      const std::size_t k = pick(n - 1);
      // Fold word k+1 into leaf k and drop the emptied leaf with its now
      // childless ancestors.
      std::size_t seen = 0;
      std::string merged_label;
      std::string merged_words;
      auto rec = [&](auto&& self, const Node& node) -> std::optional<Node> {
        if (node.is_preterminal()) {
          const std::size_t idx = seen++;
          if (idx == k + 1) return std::nullopt;
          return node;
        }
        Node out = make_node(node.label, {});
        for (const auto& c : node.children) {
          if (auto kept = self(self, c)) out.children.push_back(std::move(*kept));
        }
        if (out.children.empty()) return std::nullopt;
        return out;
      };
      Node pruned = *rec(rec, tree.root());
      const auto words = yield_words(tree);
      std::vector<std::string> leaves;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == k + 1) continue;
        leaves.push_back(i == k ? words[k] + " " + words[k + 1] : words[i]);
      }
      std::size_t cursor = 0;
      std::string text = render_with(pruned, leaves, cursor);
      for (const auto& s : extract_spans(tree, true)) {
        if (s.start == k && s.end == k + 1) merged_label = s.label;
      }
      merged_words = words[k] + " " + words[k + 1];
      return {text, more_than_one_word_message("(" + merged_label + " " + merged_words + ")")};
    }
    case InvalidKind::BracketUnmatched: {
      std::string text = render_bracketed(tree);
      // Only brackets closing a phrasal node are candidates, so leaf groups
      // stay intact and the sole problem is the imbalance.
      std::vector<std::size_t> candidates;
      for (std::size_t i = 1; i < text.size(); ++i) {
        if (text[i] == ')' && text[i - 1] == ')') candidates.push_back(i);
      }
      const std::size_t opens = static_cast<std::size_t>(std::count(text.begin(), text.end(), '('));
      text.erase(candidates[pick(candidates.size())], 1);
      return {text, bracket_message(opens, opens - 1)};
    }
    case InvalidKind::Other:
      break;
  }
  throw InapplicableCorruption("kind Other cannot be injected");
}

nlohmann::json to_json(const ValidityReport& report) {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : report.errors) {
    errors.push_back({{"kind", to_string(e.kind)},
                      {"location", e.location.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.location)},
                      {"message", e.message}});
  }
  return {{"valid", report.valid}, {"errors", errors}};
}

ValidityReport validity_from_json(const nlohmann::json& j) {
  ValidityReport r;
  r.valid = j.at("valid").get<bool>();
  for (const auto& e : j.at("errors")) {
    ValidityError err;
    err.kind = parse_invalid_kind(e.at("kind").get<std::string>());
    if (e.contains("location") && e.at("location").is_string()) err.location = e.at("location").get<std::string>();
    err.message = e.at("message").get<std::string>();
    if (err.message.empty()) throw std::invalid_argument("validity error without a message");
    r.errors.push_back(std::move(err));
  }
  if (r.valid != r.errors.empty()) throw std::invalid_argument("'valid' disagrees with the error list");
  return r;
}

}  // namespace conparse
