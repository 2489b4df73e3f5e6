#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conparse {

struct Token {
  std::string surface;
  std::size_t index = 0;

  bool operator==(const Token&) const = default;
};

enum class LabelLevel { Clause, Phrase, Word };

// Clause-level tags are the PTB S family; preterminal labels are word level.
LabelLevel label_level(std::string_view label, bool preterminal);
std::string_view to_string(LabelLevel level);

// A node is a preterminal iff it has no children, in which case `word`
// holds its single token.
struct Node {
  std::string label;
  std::string word;
  std::vector<Node> children;

  bool is_preterminal() const { return children.empty(); }
  bool operator==(const Node&) const = default;
};

Node make_leaf(std::string label, std::string word);
Node make_node(std::string label, std::vector<Node> children);

struct LabeledSpan {
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const LabeledSpan&) const = default;
  auto operator<=>(const LabeledSpan&) const = default;
};

enum class TreeErrorKind {
  BracketUnmatched,
  MissingWord,
  MoreThanOneWord,
  EmptyLabel,
  Malformed,
};

std::string_view to_string(TreeErrorKind kind);

class TreeError : public std::runtime_error {
 public:
  TreeError(TreeErrorKind kind, std::string message, std::size_t offset = 0,
            std::string location = {});

  TreeErrorKind kind() const { return kind_; }
  // Character offset into the parsed text, when meaningful.
  std::size_t offset() const { return offset_; }
  // The offending constituent as it appeared in the input, e.g. "(NNP )".
  const std::string& location() const { return location_; }

 private:
  TreeErrorKind kind_;
  std::size_t offset_;
  std::string location_;
};

// Immutable once constructed. The constructor enforces: the root is a
// phrasal node, every internal node has at least one child, every leaf is a
// preterminal carrying exactly one non-empty token, and no label is empty.
class ConstituencyTree {
 public:
  explicit ConstituencyTree(Node root);

  const Node& root() const { return root_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

  bool operator==(const ConstituencyTree& other) const { return root_ == other.root_; }

 private:
  Node root_;
  std::vector<Token> tokens_;
};

struct ParseOptions {
  // Strip "( ... )" and "(TOP ...)"/"(ROOT ...)" wrappers around a single tree.
  bool strip_wrapper = false;
  // NP-SBJ -> NP, NP=2 -> NP; -NONE-, -LRB- and -RRB- are left alone.
  bool strip_function_tags = false;
  // Delete -NONE- preterminals and any ancestors left without children.
  bool remove_empty_elements = false;
};

// Treebank loading preset: all normalizations on.
ParseOptions treebank_options();

ConstituencyTree parse_bracketed(std::string_view text, const ParseOptions& options = {});
std::string render_bracketed(const ConstituencyTree& tree);
std::string render_bracketed(const Node& node);

std::vector<Token> yield_tokens(const ConstituencyTree& tree);
std::vector<std::string> yield_words(const ConstituencyTree& tree);
std::string sentence_text(const ConstituencyTree& tree);

// Preorder; one span per qualifying node, duplicates kept.
std::vector<LabeledSpan> extract_spans(const ConstituencyTree& tree, bool include_preterminals);

std::size_t node_count(const Node& node);
std::size_t depth(const Node& node);

// Returns a copy of the tree with every token rewritten by `fn`.
template <typename Fn>
ConstituencyTree map_words(const ConstituencyTree& tree, Fn&& fn) {
  auto rec = [&](auto&& self, const Node& n) -> Node {
    if (n.is_preterminal()) return make_leaf(n.label, fn(n.word));
    std::vector<Node> kids;
    kids.reserve(n.children.size());
    for (const auto& c : n.children) kids.push_back(self(self, c));
    return make_node(n.label, std::move(kids));
  };
  return ConstituencyTree(rec(rec, tree.root()));
}

struct TreeText {
  std::string text;
  std::size_t line = 0;  // 1-based line where the expression starts
};

// Splits a treebank file into one string per top-level parenthesized
// expression, so both one-tree-per-line and multi-line .mrg layouts work.
// Unbalanced input or stray text between trees raises TreeError.
std::vector<TreeText> split_trees(std::string_view text);

}  // namespace conparse
