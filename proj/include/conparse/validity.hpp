#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "conparse/tree.hpp"

namespace conparse {

// Ordered by reporting precedence.
enum class InvalidKind { BracketUnmatched, MissingWord, MoreThanOneWord, Other };

std::string_view to_string(InvalidKind kind);
InvalidKind parse_invalid_kind(std::string_view name);

struct ValidityError {
  InvalidKind kind = InvalidKind::Other;
  // Offending constituent text ("(NNP )") or "offset N"; empty only for Other.
  std::string location;
  std::string message;

  bool operator==(const ValidityError&) const = default;
};

struct ValidityReport {
  bool valid = true;
  std::vector<ValidityError> errors;

  std::optional<InvalidKind> primary_kind() const;
  bool has(InvalidKind kind) const;
  bool operator==(const ValidityReport&) const = default;
};

// Locates the tree inside model output: from the first '(' to the last ')'
// (or the end of the text when no ')' follows).
std::string_view extract_tree_text(std::string_view raw);

// Structural check of a predicted tree. Every detectable problem is listed,
// sorted BracketUnmatched > MissingWord > MoreThanOneWord > Other.
ValidityReport check_validity(std::string_view raw);

std::string missing_word_message(std::string_view label);
std::string more_than_one_word_message(std::string_view constituent);
std::string bracket_message(std::size_t opens, std::size_t closes);

struct CorruptedSample {
  std::string text;
  std::string annotation;
};

class InapplicableCorruption : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Injects exactly one error of `kind` into the rendered tree. Other is not an
// injectable kind; MoreThanOneWord needs at least two words.
CorruptedSample corrupt_validity(const ConstituencyTree& tree, InvalidKind kind, std::uint64_t seed);

nlohmann::json to_json(const ValidityReport& report);
ValidityReport validity_from_json(const nlohmann::json& j);

}  // namespace conparse
