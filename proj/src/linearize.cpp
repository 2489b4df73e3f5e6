#include "conparse/linearize.hpp"

#include <algorithm>
#include <cctype>

namespace conparse {

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_blank(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_blank(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_blank(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_blank(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const std::vector<std::string>& words, std::size_t first, std::size_t last) {
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out += ' ';
    out += words[i];
  }
  return out;
}

void oracle_rec(const Node& n, std::vector<TransitionAction>& out) {
  if (n.is_preterminal()) {
    out.push_back(TransitionAction::shift(n.label, n.word));
    return;
  }
  out.push_back(TransitionAction::nt(n.label));
  for (const auto& c : n.children) oracle_rec(c, out);
  out.push_back(TransitionAction::reduce());
}

void span_lines_rec(const Node& n, const std::vector<std::string>& words, std::size_t& pos,
                    std::vector<std::string>& out) {
  const std::size_t slot = out.size();
  out.emplace_back();
  const std::size_t start = pos;
  if (n.is_preterminal()) {
    ++pos;
  } else {
    for (const auto& c : n.children) span_lines_rec(c, words, pos, out);
  }
  out[slot] = join(words, start, pos) + " is a " + n.label + ".";
}

// ---- span decoding search ----

struct Frame {
  std::string label;
  std::size_t start;
  std::size_t end;
  std::size_t cursor;
  std::vector<Node> kids;

  bool pending() const { return end - start == 1 && kids.empty(); }
  bool complete() const { return cursor == end && !kids.empty(); }
};

class SpanDecoder {
 public:
  static constexpr std::size_t kBudget = 2'000'000;

  explicit SpanDecoder(std::vector<SpanLine> lines) : lines_(std::move(lines)) {
    words_ = lines_.front().phrase;
  }

  ConstituencyTree run() {
    std::vector<Frame> stack;
    stack.push_back({lines_.front().label, 0, words_.size(), 0, {}});
    search(std::move(stack), 1);
    if (solutions_.size() > 1) {
      throw LinearizeError(LinearizeErrorKind::AmbiguousSpans,
                           "lines are consistent with more than one tree (repeated phrase)");
    }
    if (solutions_.empty()) {
      if (budget_exhausted_) {
        throw LinearizeError(LinearizeErrorKind::AmbiguousSpans, "span decode search budget exhausted");
      }
      throw LinearizeError(fail_kind_, fail_message_, fail_line_);
    }
    return ConstituencyTree(std::move(solutions_.front()));
  }

 private:
  void fail(std::size_t line, LinearizeErrorKind kind, std::string message) {
    if (!has_failure_ || line >= fail_line_) {
      has_failure_ = true;
      fail_line_ = line;
      fail_kind_ = kind;
      fail_message_ = std::move(message);
    }
  }

  // Closes the pending top frame as a preterminal and folds every completed
  // frame into its parent. Returns false if the root itself is pending.
  static bool close_pending(std::vector<Frame>& stack, const std::vector<std::string>& words) {
    if (stack.size() == 1) return false;
    Frame top = std::move(stack.back());
    stack.pop_back();
    Frame& parent = stack.back();
    parent.kids.push_back(make_leaf(top.label, words[top.start]));
    parent.cursor = top.end;
    fold_complete(stack);
    return true;
  }

  static void fold_complete(std::vector<Frame>& stack) {
    while (stack.size() > 1 && stack.back().complete()) {
      Frame done = std::move(stack.back());
      stack.pop_back();
      stack.back().kids.push_back(make_node(done.label, std::move(done.kids)));
      stack.back().cursor = done.end;
    }
  }

  void search(std::vector<Frame> stack, std::size_t i) {
    if (solutions_.size() > 1) return;
    if (++steps_ > kBudget) {
      budget_exhausted_ = true;
      return;
    }
    if (i == lines_.size()) {
      finish(std::move(stack));
      return;
    }
    if (stack.empty()) {
      fail(i, LinearizeErrorKind::UnresolvableSpan, "line " + std::to_string(i + 1) + " has no place left in the tree");
      return;
    }
    const SpanLine& line = lines_[i];
    Frame& top = stack.back();
    if (top.pending()) {
      // Either the line is a unary child of the single-word node on top ...
      if (line.phrase.size() == 1 && line.phrase.front() == words_[top.start]) {
        std::vector<Frame> branch = stack;
        branch.push_back({line.label, top.start, top.end, top.start, {}});
        search(std::move(branch), i + 1);
      }
      // ... or that node is a preterminal and the line starts after it.
      if (!close_pending(stack, words_)) {
        fail(i, LinearizeErrorKind::UnresolvableSpan, "the root constituent cannot be a single word");
        return;
      }
      if (stack.size() == 1 && stack.back().cursor == stack.back().end) {
        fail(i, LinearizeErrorKind::UnresolvableSpan,
             "line " + std::to_string(i + 1) + " is left over after every word is covered");
        return;
      }
      search(std::move(stack), i);
      return;
    }
    if (top.cursor == top.end) {
      fail(i, LinearizeErrorKind::UnresolvableSpan,
           "line " + std::to_string(i + 1) + " is left over after every word is covered");
      return;
    }
    const std::size_t at = top.cursor;
    const std::size_t len = line.phrase.size();
    if (at + len > words_.size() ||
        !std::equal(line.phrase.begin(), line.phrase.end(), words_.begin() + static_cast<long>(at))) {
      fail(i, LinearizeErrorKind::UnresolvableSpan,
           "phrase '" + join(line.phrase, 0, len) + "' does not match the sentence at word " + std::to_string(at + 1));
      return;
    }
    if (at + len > top.end) {
      fail(i, LinearizeErrorKind::CrossingSpans,
           "phrase '" + join(line.phrase, 0, len) + "' crosses the boundary of its parent (" + top.label + ")");
      return;
    }
    stack.push_back({line.label, at, at + len, at, {}});
    search(std::move(stack), i + 1);
  }

  void finish(std::vector<Frame> stack) {
    while (!stack.empty() && stack.back().pending()) {
      if (!close_pending(stack, words_)) break;
    }
    fold_complete(stack);
    if (stack.size() != 1 || !stack.front().complete()) {
      fail(lines_.size(), LinearizeErrorKind::UnresolvableSpan, "some words are not covered by any line");
      return;
    }
    Node root = make_node(stack.front().label, std::move(stack.front().kids));
    solutions_.push_back(std::move(root));
  }

  std::vector<SpanLine> lines_;
  std::vector<std::string> words_;
  std::vector<Node> solutions_;
  std::size_t steps_ = 0;
  bool budget_exhausted_ = false;
  bool has_failure_ = false;
  std::size_t fail_line_ = 0;
  LinearizeErrorKind fail_kind_ = LinearizeErrorKind::UnresolvableSpan;
  std::string fail_message_ = "span lines do not form a tree";
};

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Bracket: return "bracket";
    case Strategy::Transition: return "transition";
    case Strategy::Span: return "span";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "bracket") return Strategy::Bracket;
  if (lower == "transition") return Strategy::Transition;
  if (lower == "span") return Strategy::Span;
  throw std::invalid_argument("unknown linearization strategy '" + std::string(name) + "'");
}

std::string_view to_string(LinearizeErrorKind kind) {
  switch (kind) {
    case LinearizeErrorKind::StackUnderflow: return "StackUnderflow";
    case LinearizeErrorKind::DanglingNT: return "DanglingNT";
    case LinearizeErrorKind::EmptyConstituent: return "EmptyConstituent";
    case LinearizeErrorKind::UnconsumedBuffer: return "UnconsumedBuffer";
    case LinearizeErrorKind::BufferMismatch: return "BufferMismatch";
    case LinearizeErrorKind::MalformedAction: return "MalformedAction";
    case LinearizeErrorKind::UnresolvableSpan: return "UnresolvableSpan";
    case LinearizeErrorKind::CrossingSpans: return "CrossingSpans";
    case LinearizeErrorKind::AmbiguousSpans: return "AmbiguousSpans";
    case LinearizeErrorKind::MalformedLine: return "MalformedLine";
  }
  return "?";
}

LinearizeError::LinearizeError(LinearizeErrorKind kind, std::string message, std::size_t position)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), position_(position) {}

LinearizedTree encode(const ConstituencyTree& tree, Strategy strategy) {
  switch (strategy) {
    case Strategy::Bracket: return {strategy, render_bracketed(tree)};
    case Strategy::Transition: return {strategy, format_actions(oracle_transitions(tree))};
    case Strategy::Span: {
      std::string payload;
      for (const auto& line : encode_span(tree)) {
        if (!payload.empty()) payload += '\n';
        payload += line;
      }
      return {strategy, payload};
    }
  }
  throw std::logic_error("unreachable");
}

ConstituencyTree decode(const LinearizedTree& lin) {
  switch (lin.strategy) {
    case Strategy::Bracket: return parse_bracketed(lin.payload);
    case Strategy::Transition: return execute_transitions(parse_actions(lin.payload));
    case Strategy::Span: {
      auto lines = split_lines(lin.payload);
      return decode_span(lines);
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<TransitionAction> oracle_transitions(const ConstituencyTree& tree) {
  std::vector<TransitionAction> out;
  oracle_rec(tree.root(), out);
  return out;
}

ConstituencyTree execute_transitions(std::span<const TransitionAction> actions,
                                     std::optional<std::span<const std::string>> buffer) {
  struct Item {
    Node node;
    bool open;
  };
  std::vector<Item> stack;
  std::size_t open_count = 0;
  std::size_t next_word = 0;

  for (std::size_t i = 0; i < actions.size(); ++i) {
    const TransitionAction& a = actions[i];
    switch (a.kind) {
      case TransitionAction::Kind::NT:
        stack.push_back({make_node(a.label, {}), true});
        ++open_count;
        break;
      case TransitionAction::Kind::Shift:
        if (buffer) {
          if (next_word >= buffer->size()) {
            throw LinearizeError(LinearizeErrorKind::BufferMismatch, "SHIFT with an empty buffer", i);
          }
          if ((*buffer)[next_word] != a.word) {
            throw LinearizeError(LinearizeErrorKind::BufferMismatch,
                                 "SHIFT of '" + a.word + "' but the buffer holds '" + (*buffer)[next_word] + "'", i);
          }
        }
        ++next_word;
        stack.push_back({make_leaf(a.label, a.word), false});
        break;
      case TransitionAction::Kind::Reduce: {
        if (open_count == 0) throw LinearizeError(LinearizeErrorKind::StackUnderflow, "REDUCE with no open nonterminal", i);
        std::size_t k = stack.size();
        while (!stack[k - 1].open) --k;
        Item& target = stack[k - 1];
        if (k == stack.size()) {
          throw LinearizeError(LinearizeErrorKind::EmptyConstituent,
                               "REDUCE closes NT(" + target.node.label + ") with no children", i);
        }
        for (std::size_t j = k; j < stack.size(); ++j) target.node.children.push_back(std::move(stack[j].node));
        stack.resize(k);
        target.open = false;
        --open_count;
        break;
      }
    }
  }
  if (open_count > 0) {
    throw LinearizeError(LinearizeErrorKind::DanglingNT,
                         std::to_string(open_count) + " nonterminal(s) never reduced", actions.size());
  }
  if (stack.size() != 1 || stack.front().node.is_preterminal()) {
    throw LinearizeError(LinearizeErrorKind::DanglingNT, "actions do not build a single root constituent",
                         actions.size());
  }
  if (buffer && next_word != buffer->size()) {
    throw LinearizeError(LinearizeErrorKind::UnconsumedBuffer,
                         std::to_string(buffer->size() - next_word) + " word(s) left in the buffer", actions.size());
  }
  return ConstituencyTree(std::move(stack.front().node));
}

std::string format_action(const TransitionAction& a) {
  switch (a.kind) {
    case TransitionAction::Kind::NT: return "NT(" + a.label + ")";
    case TransitionAction::Kind::Shift: return "SHIFT(" + a.label + " " + a.word + ")";
    case TransitionAction::Kind::Reduce: return "REDUCE";
  }
  return {};
}

std::string format_actions(std::span<const TransitionAction> actions) {
  std::string out;
  for (const auto& a : actions) {
    if (!out.empty()) out += ' ';
    out += format_action(a);
  }
  return out;
}

std::vector<TransitionAction> parse_actions(std::string_view text) {
  std::vector<TransitionAction> out;
  std::size_t i = 0;
  while (true) {
    while (i < text.size() && is_blank(text[i])) ++i;
    if (i >= text.size()) break;
    const std::size_t begin = i;
    while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
    const std::string_view name = text.substr(begin, i - begin);
    std::string_view arg;
    bool has_arg = false;
    if (i < text.size() && text[i] == '(') {
      const std::size_t close = text.find(')', i);
      if (close == std::string_view::npos) {
        throw LinearizeError(LinearizeErrorKind::MalformedAction, "unterminated action at offset " + std::to_string(begin), out.size());
      }
      arg = text.substr(i + 1, close - i - 1);
      has_arg = true;
      i = close + 1;
    }
    if (i < text.size() && !is_blank(text[i])) {
      throw LinearizeError(LinearizeErrorKind::MalformedAction,
                           "unexpected character at offset " + std::to_string(i), out.size());
    }
    if (name == "REDUCE" && !has_arg) {
      out.push_back(TransitionAction::reduce());
    } else if (name == "NT" && has_arg) {
      auto parts = split_words(arg);
      if (parts.size() != 1) {
        throw LinearizeError(LinearizeErrorKind::MalformedAction, "NT expects exactly one label", out.size());
      }
      out.push_back(TransitionAction::nt(parts.front()));
    } else if (name == "SHIFT" && has_arg) {
      auto parts = split_words(arg);
      if (parts.size() != 2) {
        throw LinearizeError(LinearizeErrorKind::MalformedAction,
                             "SHIFT expects a POS tag and exactly one word, got '" + std::string(arg) + "'", out.size());
      }
      out.push_back(TransitionAction::shift(parts[0], parts[1]));
    } else {
      throw LinearizeError(LinearizeErrorKind::MalformedAction,
                           "unknown action '" + std::string(text.substr(begin, i - begin)) + "'", out.size());
    }
  }
  return out;
}

std::vector<std::string> encode_span(const ConstituencyTree& tree) {
  const auto words = yield_words(tree);
  std::vector<std::string> out;
  std::size_t pos = 0;
  span_lines_rec(tree.root(), words, pos, out);
  return out;
}

SpanLine parse_span_line(std::string_view raw) {
  std::string_view line = trim(raw);
  if (line.empty() || line.back() != '.') {
    throw LinearizeError(LinearizeErrorKind::MalformedLine, "template line must end with '.': '" + std::string(raw) + "'");
  }
  line.remove_suffix(1);
  constexpr std::string_view kCopula = " is a ";
  const auto at = line.rfind(kCopula);
  if (at == std::string_view::npos) {
    throw LinearizeError(LinearizeErrorKind::MalformedLine, "template line lacks ' is a ': '" + std::string(raw) + "'");
  }
  SpanLine out;
  out.phrase = split_words(line.substr(0, at));
  const auto label = split_words(line.substr(at + kCopula.size()));
  if (out.phrase.empty() || label.size() != 1) {
    throw LinearizeError(LinearizeErrorKind::MalformedLine, "template line needs a phrase and one label: '" + std::string(raw) + "'");
  }
  out.label = label.front();
  if (out.label.find_first_of("()") != std::string::npos) {
    throw LinearizeError(LinearizeErrorKind::MalformedLine, "label contains a parenthesis: '" + std::string(raw) + "'");
  }
  return out;
}

ConstituencyTree decode_span(std::span<const std::string> lines) {
  std::vector<SpanLine> parsed;
  parsed.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      parsed.push_back(parse_span_line(lines[i]));
    } catch (const LinearizeError& e) {
      throw LinearizeError(e.kind(), e.what(), i);
    }
  }
  if (parsed.empty()) throw LinearizeError(LinearizeErrorKind::MalformedLine, "no template lines");
  return SpanDecoder(std::move(parsed)).run();
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= text.size()) {
    auto nl = text.find('\n', i);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(i, nl - i));
    if (!line.empty()) out.emplace_back(line);
    i = nl + 1;
  }
  return out;
}

}  // namespace conparse
