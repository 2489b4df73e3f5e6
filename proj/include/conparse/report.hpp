#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "conparse/corpus.hpp"
#include "conparse/scoring.hpp"

namespace conparse {

class EmptyInput : public std::invalid_argument {
 public:
  EmptyInput() : std::invalid_argument("no records to report on") {}
};

struct ReportOptions {
  EvalConfig eval;  // only invalid_policy matters; counts are taken from the records
  // Domain whose F1 is the reference for the reduction rate; the other
  // domains form the out-of-domain average.
  std::optional<std::string> in_domain;
  // Explicit reference F1 in percent; overrides in_domain.
  std::optional<double> reference_f1;
  bool by_input_length = false;
  bool by_span_length = false;
  std::size_t span_bucket_width = 5;
};

struct DomainRow {
  std::string domain;
  ScoreReport score;
  // Percent of sentences whose primary unfaithful kind is each kind.
  double overgeneration_rate = 0;
  double word_mismatch_rate = 0;
  double failure_rate = 0;
  std::map<std::string, std::size_t> invalid_kinds;  // primary kind of each invalid record
  std::size_t backend_failures = 0;                  // excluded from every figure above
};

struct BucketRow {
  std::string bucket;
  std::size_t items = 0;  // sentences, or gold spans for span buckets
  double lp = 0;
  double lr = 0;
  double f1 = 0;
};

struct CorpusReport {
  std::vector<DomainRow> rows;  // one per domain, sorted by name
  DomainRow total;              // every record pooled
  std::optional<double> reference_f1;  // percent
  std::optional<double> out_domain_f1;  // percent, mean over non-reference domains
  std::optional<double> delta_f1;       // reduction rate, percent
  std::vector<BucketRow> by_input_length;
  std::vector<BucketRow> by_span_length;
};

// Input-length bucket names: "<=10", "11-20", "21-30", "31-40", ">40".
std::string input_length_bucket(std::size_t length);

CorpusReport build_report(std::span<const ResultRecord> records, const ReportOptions& options);

std::string format_report_text(const CorpusReport& report);
std::string format_report_csv(const CorpusReport& report);
nlohmann::json to_json(const CorpusReport& report);

}  // namespace conparse
