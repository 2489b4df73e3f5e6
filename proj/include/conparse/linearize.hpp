#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conparse/tree.hpp"

namespace conparse {

enum class Strategy { Bracket, Transition, Span };

std::string_view to_string(Strategy s);
// Accepts "bracket", "transition", "span" (case-insensitive).
Strategy parse_strategy(std::string_view name);

struct LinearizedTree {
  Strategy strategy = Strategy::Bracket;
  // Bracket string, space-joined actions, or newline-joined template lines.
  std::string payload;

  bool operator==(const LinearizedTree&) const = default;
};

struct TransitionAction {
  enum class Kind { NT, Shift, Reduce };

  Kind kind = Kind::Reduce;
  std::string label;  // NT label, or the POS carried by SHIFT
  std::string word;   // SHIFT only

  static TransitionAction nt(std::string label) { return {Kind::NT, std::move(label), {}}; }
  static TransitionAction shift(std::string pos, std::string word) {
    return {Kind::Shift, std::move(pos), std::move(word)};
  }
  static TransitionAction reduce() { return {Kind::Reduce, {}, {}}; }

  bool operator==(const TransitionAction&) const = default;
};

enum class LinearizeErrorKind {
  // transition system
  StackUnderflow,
  DanglingNT,
  EmptyConstituent,
  UnconsumedBuffer,
  BufferMismatch,
  MalformedAction,
  // span templates
  UnresolvableSpan,
  CrossingSpans,
  AmbiguousSpans,
  MalformedLine,
};

std::string_view to_string(LinearizeErrorKind kind);

class LinearizeError : public std::runtime_error {
 public:
  LinearizeError(LinearizeErrorKind kind, std::string message, std::size_t position = 0);
  LinearizeErrorKind kind() const { return kind_; }
  // Index of the offending action or line.
  std::size_t position() const { return position_; }

 private:
  LinearizeErrorKind kind_;
  std::size_t position_;
};

LinearizedTree encode(const ConstituencyTree& tree, Strategy strategy);
// Bracket payloads raise TreeError; the other strategies raise LinearizeError.
ConstituencyTree decode(const LinearizedTree& lin);

// ---- transition-based (top-down NT / SHIFT / REDUCE) ----

std::vector<TransitionAction> oracle_transitions(const ConstituencyTree& tree);

// Runs the stack machine. With `buffer` supplied, each SHIFT must consume the
// next buffer word and the buffer must be empty at the end.
ConstituencyTree execute_transitions(std::span<const TransitionAction> actions,
                                     std::optional<std::span<const std::string>> buffer = std::nullopt);

std::string format_action(const TransitionAction& action);
std::string format_actions(std::span<const TransitionAction> actions);
std::vector<TransitionAction> parse_actions(std::string_view text);

// ---- span-based ("A is a B." templates) ----

std::vector<std::string> encode_span(const ConstituencyTree& tree);
// The first line must cover the whole sentence. Each subsequent line is
// anchored at the leftmost token not yet covered by a finished word. When two
// different trees explain the same lines the decode raises AmbiguousSpans.
ConstituencyTree decode_span(std::span<const std::string> lines);

struct SpanLine {
  std::vector<std::string> phrase;
  std::string label;
};
SpanLine parse_span_line(std::string_view line);

std::vector<std::string> split_lines(std::string_view text);

}  // namespace conparse
