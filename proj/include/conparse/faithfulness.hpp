#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "conparse/tree.hpp"

namespace conparse {

enum class UnfaithfulKind { OverGeneration, WordMismatch, PredictionFailure };
enum class OverGenerationSub { Repetition, ContinueWriting, Other };

std::string_view to_string(UnfaithfulKind kind);
std::string_view to_string(OverGenerationSub sub);
UnfaithfulKind parse_unfaithful_kind(std::string_view name);
OverGenerationSub parse_overgeneration_sub(std::string_view name);

struct FaithfulnessError {
  UnfaithfulKind kind = UnfaithfulKind::PredictionFailure;
  std::optional<OverGenerationSub> sub;  // set iff kind == OverGeneration
  std::string detail;
  std::vector<std::size_t> positions;

  bool operator==(const FaithfulnessError&) const = default;
};

struct FaithfulnessReport {
  bool faithful = true;
  std::vector<FaithfulnessError> errors;

  std::optional<UnfaithfulKind> primary_kind() const;
  bool operator==(const FaithfulnessReport&) const = default;
};

// Words of a predicted tree, read tolerantly: every word-level group
// "(TAG w1 w2 ...)" contributes its words, even when the tree is invalid.
// Returns nullopt when no word can be found at all.
std::optional<std::vector<std::string>> predicted_yield(std::string_view raw);

// Length check first, then word identity. Token comparison is exact.
FaithfulnessReport check_faithfulness(std::string_view raw, const std::vector<std::string>& sentence);
FaithfulnessReport check_faithfulness(const ConstituencyTree& tree, const std::vector<std::string>& sentence);

// Repetition: a block of >= 3 tokens immediately repeated in `pred` whose
// doubled form does not occur in `gold`. ContinueWriting: gold is a strict
// prefix of pred. Anything else is Other.
OverGenerationSub classify_overgeneration(const std::vector<std::string>& pred, const std::vector<std::string>& gold);

std::string mismatch_detail(std::string_view predicted, std::string_view expected, std::size_t position,
                            const std::vector<std::string>& sentence);

using SubstitutionTable = std::map<std::string, std::string>;

// ~50 near-synonym and digit-swap pairs.
const SubstitutionTable& builtin_substitutions();

struct UnfaithfulSample {
  std::string text;
  std::string annotation;
  std::size_t position = 0;
};

// Replaces exactly one token found in `table`. Throws InapplicableCorruption
// (see validity.hpp) when no token is substitutable.
UnfaithfulSample corrupt_faithfulness(const ConstituencyTree& tree, const SubstitutionTable& table, std::uint64_t seed);

nlohmann::json to_json(const FaithfulnessReport& report);
FaithfulnessReport faithfulness_from_json(const nlohmann::json& j);

}  // namespace conparse
