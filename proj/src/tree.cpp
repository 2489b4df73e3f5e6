#include "conparse/tree.hpp"

#include <algorithm>
#include <array>
#include <optional>

namespace conparse {

namespace {

constexpr std::array<std::string_view, 5> kClauseLabels = {"S", "SBAR", "SBARQ", "SINV", "SQ"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool has_forbidden_char(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_space(c) || c == '(' || c == ')'; });
}

struct Lexeme {
  enum Type { Open, Close, Atom } type;
  std::string_view text;
  std::size_t offset;
};

std::vector<Lexeme> lex(std::string_view text) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (is_space(c)) {
      ++i;
    } else if (c == '(') {
      out.push_back({Lexeme::Open, text.substr(i, 1), i});
      ++i;
    } else if (c == ')') {
      out.push_back({Lexeme::Close, text.substr(i, 1), i});
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j]) && text[j] != '(' && text[j] != ')') ++j;
      out.push_back({Lexeme::Atom, text.substr(i, j - i), i});
      i = j;
    }
  }
  return out;
}

class BracketReader {
 public:
  BracketReader(std::string_view text, bool allow_empty_root)
      : text_(text), lexemes_(lex(text)), allow_empty_root_(allow_empty_root) {}

  Node read() {
    check_balance();
    if (lexemes_.empty() || lexemes_.front().type != Lexeme::Open) {
      std::size_t off = lexemes_.empty() ? 0 : lexemes_.front().offset;
      throw TreeError(TreeErrorKind::Malformed, "expected '(' at the start of a tree", off);
    }
    Node root = read_node(true);
    if (pos_ != lexemes_.size()) {
      throw TreeError(TreeErrorKind::Malformed, "unexpected text after the end of the tree",
                      lexemes_[pos_].offset);
    }
    return root;
  }

 private:
  void check_balance() const {
    long depth = 0;
    std::size_t opens = 0;
    std::size_t closes = 0;
    for (const auto& lx : lexemes_) {
      if (lx.type == Lexeme::Open) {
        ++opens;
        ++depth;
      } else if (lx.type == Lexeme::Close) {
        ++closes;
        if (--depth < 0) {
          throw TreeError(TreeErrorKind::BracketUnmatched, "unmatched ')'", lx.offset);
        }
      }
    }
    if (depth != 0) {
      throw TreeError(TreeErrorKind::BracketUnmatched,
                      std::to_string(opens) + " '(' but " + std::to_string(closes) + " ')'",
                      text_.size());
    }
  }

  Node read_node(bool is_root) {
    const std::size_t open_offset = lexemes_[pos_].offset;
    ++pos_;  // '('
    Node node;
    if (pos_ < lexemes_.size() && lexemes_[pos_].type == Lexeme::Atom) {
      node.label = std::string(lexemes_[pos_].text);
      ++pos_;
    }
    std::vector<std::string_view> words;
    std::size_t first_word_offset = 0;
    while (true) {
      const Lexeme& lx = lexemes_.at(pos_);
      if (lx.type == Lexeme::Close) break;
      if (lx.type == Lexeme::Open) {
        node.children.push_back(read_node(false));
      } else {
        if (words.empty()) first_word_offset = lx.offset;
        words.push_back(lx.text);
        ++pos_;
      }
    }
    const std::size_t close_offset = lexemes_[pos_].offset;
    ++pos_;  // ')'
    const std::string location(text_.substr(open_offset, close_offset - open_offset + 1));

    if (!node.children.empty() && !words.empty()) {
      throw TreeError(TreeErrorKind::Malformed, "word '" + std::string(words.front()) +
                                                    "' appears directly under a phrasal constituent",
                      first_word_offset, location);
    }
    if (node.children.empty()) {
      if (words.empty()) {
        if (node.label.empty()) {
          throw TreeError(TreeErrorKind::Malformed, "empty constituent", open_offset, location);
        }
        throw TreeError(TreeErrorKind::MissingWord, "constituent (" + node.label + ") has no word",
                        open_offset, location);
      }
      if (words.size() > 1) {
        throw TreeError(TreeErrorKind::MoreThanOneWord,
                        "constituent (" + node.label + ") has " + std::to_string(words.size()) + " words",
                        open_offset, location);
      }
      if (node.label.empty()) {
        throw TreeError(TreeErrorKind::EmptyLabel, "preterminal without a label", open_offset, location);
      }
      node.word = std::string(words.front());
      return node;
    }
    if (node.label.empty() && !(is_root && allow_empty_root_)) {
      throw TreeError(TreeErrorKind::EmptyLabel, "constituent without a label", open_offset, location);
    }
    return node;
  }

  std::string_view text_;
  std::vector<Lexeme> lexemes_;
  std::size_t pos_ = 0;
  bool allow_empty_root_;
};

std::string strip_function_tag(const std::string& label) {
  if (label.empty() || label.front() == '-') return label;
  auto cut = label.find_first_of("-=");
  if (cut == std::string::npos || cut == 0) return label;
  return label.substr(0, cut);
}

void strip_tags_rec(Node& n) {
  n.label = strip_function_tag(n.label);
  for (auto& c : n.children) strip_tags_rec(c);
}

std::optional<Node> remove_empty_rec(const Node& n) {
  if (n.is_preterminal()) {
    if (n.label == "-NONE-") return std::nullopt;
    return n;
  }
  Node out;
  out.label = n.label;
  for (const auto& c : n.children) {
    if (auto kept = remove_empty_rec(c)) out.children.push_back(std::move(*kept));
  }
  if (out.children.empty()) return std::nullopt;
  return out;
}

bool is_wrapper(const Node& n) {
  return !n.is_preterminal() && n.children.size() == 1 && !n.children.front().is_preterminal() &&
         (n.label.empty() || n.label == "TOP" || n.label == "ROOT");
}

void validate_rec(const Node& n, std::vector<Token>& tokens) {
  if (n.label.empty()) throw TreeError(TreeErrorKind::EmptyLabel, "node with an empty label");
  if (has_forbidden_char(n.label)) {
    throw TreeError(TreeErrorKind::Malformed, "label '" + n.label + "' contains whitespace or parentheses");
  }
  if (n.is_preterminal()) {
    if (n.word.empty()) {
      throw TreeError(TreeErrorKind::MissingWord, "constituent (" + n.label + ") has no word");
    }
    if (has_forbidden_char(n.word)) {
      throw TreeError(TreeErrorKind::MoreThanOneWord,
                      "token '" + n.word + "' contains whitespace or parentheses");
    }
    tokens.push_back({n.word, tokens.size()});
    return;
  }
  if (!n.word.empty()) {
    throw TreeError(TreeErrorKind::Malformed, "phrasal node (" + n.label + ") carries a word");
  }
  for (const auto& c : n.children) validate_rec(c, tokens);
}

void render_rec(const Node& n, std::string& out) {
  out += '(';
  out += n.label;
  if (n.is_preterminal()) {
    out += ' ';
    out += n.word;
  } else {
    for (const auto& c : n.children) {
      out += ' ';
      render_rec(c, out);
    }
  }
  out += ')';
}

std::size_t spans_rec(const Node& n, std::size_t start, bool include_pre, std::vector<LabeledSpan>& out) {
  if (n.is_preterminal()) {
    if (include_pre) out.push_back({n.label, start, start + 1});
    return start + 1;
  }
  const std::size_t slot = out.size();
  out.push_back({n.label, start, start});
  std::size_t end = start;
  for (const auto& c : n.children) end = spans_rec(c, end, include_pre, out);
  out[slot].end = end;
  return end;
}

}  // namespace

LabelLevel label_level(std::string_view label, bool preterminal) {
  if (preterminal) return LabelLevel::Word;
  if (std::find(kClauseLabels.begin(), kClauseLabels.end(), label) != kClauseLabels.end()) {
    return LabelLevel::Clause;
  }
  return LabelLevel::Phrase;
}

std::string_view to_string(LabelLevel level) {
  switch (level) {
    case LabelLevel::Clause: return "clause";
    case LabelLevel::Phrase: return "phrase";
    case LabelLevel::Word: return "word";
  }
  return "?";
}

Node make_leaf(std::string label, std::string word) {
  Node n;
  n.label = std::move(label);
  n.word = std::move(word);
  return n;
}

Node make_node(std::string label, std::vector<Node> children) {
  Node n;
  n.label = std::move(label);
  n.children = std::move(children);
  return n;
}

std::string_view to_string(TreeErrorKind kind) {
  switch (kind) {
    case TreeErrorKind::BracketUnmatched: return "BracketUnmatched";
    case TreeErrorKind::MissingWord: return "MissingWord";
    case TreeErrorKind::MoreThanOneWord: return "MoreThanOneWord";
    case TreeErrorKind::EmptyLabel: return "EmptyLabel";
    case TreeErrorKind::Malformed: return "Malformed";
  }
  return "?";
}

TreeError::TreeError(TreeErrorKind kind, std::string message, std::size_t offset, std::string location)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      offset_(offset),
      location_(std::move(location)) {}

ConstituencyTree::ConstituencyTree(Node root) : root_(std::move(root)) {
  if (root_.is_preterminal()) {
    throw TreeError(TreeErrorKind::Malformed, "the root must be a phrasal constituent, not a preterminal");
  }
  validate_rec(root_, tokens_);
}

ParseOptions treebank_options() { return {true, true, true}; }

ConstituencyTree parse_bracketed(std::string_view text, const ParseOptions& options) {
  BracketReader reader(text, options.strip_wrapper);
  Node root = reader.read();
  if (options.strip_wrapper) {
    while (is_wrapper(root)) {
      Node inner = std::move(root.children.front());
      root = std::move(inner);
    }
  }
  if (options.strip_function_tags) strip_tags_rec(root);
  if (options.remove_empty_elements) {
    auto kept = remove_empty_rec(root);
    if (!kept) throw TreeError(TreeErrorKind::Malformed, "tree contains only empty elements");
    root = std::move(*kept);
  }
  return ConstituencyTree(std::move(root));
}

std::string render_bracketed(const Node& node) {
  std::string out;
  render_rec(node, out);
  return out;
}

std::string render_bracketed(const ConstituencyTree& tree) { return render_bracketed(tree.root()); }

std::vector<Token> yield_tokens(const ConstituencyTree& tree) { return tree.tokens(); }

std::vector<std::string> yield_words(const ConstituencyTree& tree) {
  std::vector<std::string> out;
  out.reserve(tree.size());
  for (const auto& t : tree.tokens()) out.push_back(t.surface);
  return out;
}

std::string sentence_text(const ConstituencyTree& tree) {
  std::string out;
  for (const auto& t : tree.tokens()) {
    if (!out.empty()) out += ' ';
    out += t.surface;
  }
  return out;
}

std::vector<LabeledSpan> extract_spans(const ConstituencyTree& tree, bool include_preterminals) {
  std::vector<LabeledSpan> out;
  spans_rec(tree.root(), 0, include_preterminals, out);
  return out;
}

std::size_t node_count(const Node& node) {
  std::size_t n = 1;
  for (const auto& c : node.children) n += node_count(c);
  return n;
}

std::size_t depth(const Node& node) {
  std::size_t d = 0;
  for (const auto& c : node.children) d = std::max(d, depth(c));
  return d + 1;
}

std::vector<TreeText> split_trees(std::string_view text) {
  std::vector<TreeText> out;
  long depth_now = 0;
  std::size_t line = 1;
  std::size_t start = 0;
  std::size_t start_line = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') ++line;
    if (c == '(') {
      if (depth_now == 0) {
        start = i;
        start_line = line;
      }
      ++depth_now;
    } else if (c == ')') {
      if (depth_now == 0) {
        throw TreeError(TreeErrorKind::BracketUnmatched, "unmatched ')' on line " + std::to_string(line), i);
      }
      if (--depth_now == 0) out.push_back({std::string(text.substr(start, i - start + 1)), start_line});
    } else if (depth_now == 0 && !is_space(c)) {
      throw TreeError(TreeErrorKind::Malformed, "text outside of a tree on line " + std::to_string(line), i);
    }
  }
  if (depth_now != 0) {
    throw TreeError(TreeErrorKind::BracketUnmatched,
                    "tree starting on line " + std::to_string(start_line) + " is never closed", text.size());
  }
  return out;
}

}  // namespace conparse
