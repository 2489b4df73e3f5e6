#include "conparse/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "conparse/pmc.hpp"

namespace conparse {

namespace {

struct Tally {
  std::size_t items = 0;
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

BucketRow bucket_row(const std::string& name, const Tally& t) {
  BucketRow row;
  row.bucket = name;
  row.items = t.items;
  row.lp = t.predicted == 0 ? (t.matched == 0 ? 1.0 : 0.0) : static_cast<double>(t.matched) / t.predicted;
  row.lr = t.gold == 0 ? (t.matched == 0 ? 1.0 : 0.0) : static_cast<double>(t.matched) / t.gold;
  row.f1 = f1_score(row.lp, row.lr);
  return row;
}

DomainRow domain_row(const std::string& name, const std::vector<const ResultRecord*>& records,
                     const EvalConfig& eval) {
  DomainRow row;
  row.domain = name;
  std::vector<SentenceCounts> counts;
  std::size_t overgen = 0;
  std::size_t mismatch = 0;
  std::size_t failure = 0;
  for (const ResultRecord* r : records) {
    if (!r->backend_error.empty()) {
      ++row.backend_failures;
      continue;
    }
    if (r->counts) counts.push_back(*r->counts);
    if (auto k = r->validity.primary_kind()) ++row.invalid_kinds[std::string(to_string(*k))];
    if (auto k = r->faithfulness.primary_kind()) {
      switch (*k) {
        case UnfaithfulKind::OverGeneration: ++overgen; break;
        case UnfaithfulKind::WordMismatch: ++mismatch; break;
        case UnfaithfulKind::PredictionFailure: ++failure; break;
      }
    }
  }
  if (!counts.empty()) {
    row.score = score_corpus(counts, eval);
    const double n = static_cast<double>(counts.size());
    row.overgeneration_rate = 100.0 * static_cast<double>(overgen) / n;
    row.word_mismatch_rate = 100.0 * static_cast<double>(mismatch) / n;
    row.failure_rate = 100.0 * static_cast<double>(failure) / n;
  }
  return row;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

nlohmann::json row_json(const DomainRow& row) {
  return {{"domain", row.domain},
          {"score", to_json(row.score)},
          {"overgeneration_rate", row.overgeneration_rate},
          {"word_mismatch_rate", row.word_mismatch_rate},
          {"failure_rate", row.failure_rate},
          {"invalid_kinds", row.invalid_kinds},
          {"backend_failures", row.backend_failures}};
}

nlohmann::json bucket_json(const std::vector<BucketRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : rows) {
    out.push_back({{"bucket", b.bucket}, {"items", b.items}, {"LP", b.lp}, {"LR", b.lr}, {"F1", b.f1}});
  }
  return out;
}

void bucket_text(std::ostringstream& os, const std::string& title, const std::vector<BucketRow>& rows) {
  if (rows.empty()) return;
  os << '\n' << title << '\n';
  os << std::left << std::setw(10) << "bucket" << std::right << std::setw(8) << "items" << std::setw(9) << "LP"
     << std::setw(9) << "LR" << std::setw(9) << "F1" << '\n';
  for (const auto& b : rows) {
    os << std::left << std::setw(10) << b.bucket << std::right << std::setw(8) << b.items << std::setw(9)
       << fmt(100 * b.lp) << std::setw(9) << fmt(100 * b.lr) << std::setw(9) << fmt(100 * b.f1) << '\n';
  }
}

}  // namespace

std::string input_length_bucket(std::size_t length) {
  if (length <= 10) return "<=10";
  if (length <= 20) return "11-20";
  if (length <= 30) return "21-30";
  if (length <= 40) return "31-40";
  return ">40";
}

CorpusReport build_report(std::span<const ResultRecord> records, const ReportOptions& options) {
  if (records.empty()) throw EmptyInput();
  if (options.span_bucket_width == 0) throw std::invalid_argument("span bucket width must be >= 1");

  std::map<std::string, std::vector<const ResultRecord*>> by_domain;
  std::vector<const ResultRecord*> all;
  for (const auto& r : records) {
    by_domain[r.domain].push_back(&r);
    all.push_back(&r);
  }

  CorpusReport report;
  for (const auto& [domain, rs] : by_domain) report.rows.push_back(domain_row(domain, rs, options.eval));
  report.total = domain_row("all", all, options.eval);

  if (options.reference_f1) {
    report.reference_f1 = *options.reference_f1;
  } else if (options.in_domain) {
    auto it = std::find_if(report.rows.begin(), report.rows.end(),
                           [&](const DomainRow& row) { return row.domain == *options.in_domain; });
    if (it == report.rows.end()) throw std::invalid_argument("no records for in-domain '" + *options.in_domain + "'");
    report.reference_f1 = 100.0 * it->score.f1;
  }
  if (report.reference_f1) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& row : report.rows) {
      if (options.in_domain && row.domain == *options.in_domain) continue;
      sum += 100.0 * row.score.f1;
      ++n;
    }
    if (n > 0) {
      report.out_domain_f1 = sum / static_cast<double>(n);
      report.delta_f1 = reduction_rate(*report.reference_f1, *report.out_domain_f1);
    }
  }

  if (options.by_input_length) {
    const std::vector<std::string> names = {"<=10", "11-20", "21-30", "31-40", ">40"};
    std::map<std::string, Tally> tallies;
    for (const auto& r : records) {
      if (!r.backend_error.empty() || !r.counts) continue;
      if (r.counts->invalid && options.eval.invalid_policy == InvalidPolicy::SkipInvalid) continue;
      Tally& t = tallies[input_length_bucket(r.sentence.size())];
      ++t.items;
      t.matched += r.counts->matched;
      t.predicted += r.counts->predicted;
      t.gold += r.counts->gold;
    }
    for (const auto& name : names) {
      if (tallies.contains(name)) report.by_input_length.push_back(bucket_row(name, tallies.at(name)));
    }
  }

  if (options.by_span_length) {
    const std::size_t w = options.span_bucket_width;
    std::map<std::size_t, Tally> tallies;
    auto bucket_of = [w](const LabeledSpan& s) { return (s.end - s.start - 1) / w; };
    for (const auto& r : records) {
      if (!r.backend_error.empty() || r.gold.empty()) continue;
      if (!r.valid && options.eval.invalid_policy == InvalidPolicy::SkipInvalid) continue;
      const auto gold = evaluation_spans(parse_bracketed(r.gold), options.eval);
      std::vector<LabeledSpan> pred;
      if (r.valid) {
        const auto bracket = interpret_output(r.prediction_raw, r.strategy).bracket;
        pred = evaluation_spans(parse_bracketed(extract_tree_text(bracket), ParseOptions{true, false, false}),
                                options.eval);
      }
      std::map<std::size_t, std::pair<std::vector<LabeledSpan>, std::vector<LabeledSpan>>> split;
      for (const auto& s : gold) split[bucket_of(s)].first.push_back(s);
      for (const auto& s : pred) split[bucket_of(s)].second.push_back(s);
      for (auto& [b, sides] : split) {
        Tally& t = tallies[b];
        t.items += sides.first.size();
        t.gold += sides.first.size();
        t.predicted += sides.second.size();
        t.matched += multiset_intersection(sides.first, sides.second);
      }
    }
    for (const auto& [b, t] : tallies) {
      report.by_span_length.push_back(
          bucket_row(std::to_string(b * w + 1) + "-" + std::to_string((b + 1) * w), t));
    }
  }
  return report;
}

std::string format_report_text(const CorpusReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "domain" << std::right << std::setw(7) << "sents" << std::setw(10)
     << "ValidF1" << std::setw(11) << "OverallF1" << std::setw(9) << "Invalid" << std::setw(9) << "Unfaith"
     << std::setw(9) << "OverGen" << std::setw(9) << "WordMis" << std::setw(9) << "Failure" << std::setw(8)
     << "errors" << '\n';
  auto line = [&](const DomainRow& row) {
    os << std::left << std::setw(12) << row.domain << std::right << std::setw(7) << row.score.sentences
       << std::setw(10) << fmt(100 * row.score.valid_f1) << std::setw(11) << fmt(100 * row.score.overall_f1)
       << std::setw(9) << fmt(row.score.invalid_rate) << std::setw(9) << fmt(row.score.unfaithful_rate)
       << std::setw(9) << fmt(row.overgeneration_rate) << std::setw(9) << fmt(row.word_mismatch_rate)
       << std::setw(9) << fmt(row.failure_rate) << std::setw(8) << row.backend_failures << '\n';
  };
  for (const auto& row : report.rows) line(row);
  if (report.rows.size() > 1) line(report.total);

  if (!report.total.invalid_kinds.empty()) {
    os << "\nInvalid trees by kind:";
    for (const auto& [kind, n] : report.total.invalid_kinds) os << ' ' << kind << '=' << n;
    os << '\n';
  }
  if (report.delta_f1) {
    os << "\nReference F1 " << fmt(*report.reference_f1) << ", out-of-domain average F1 "
       << fmt(*report.out_domain_f1) << ", reduction " << fmt(*report.delta_f1) << "%\n";
  }
  bucket_text(os, "By input length (sentences):", report.by_input_length);
  bucket_text(os, "By span length (gold spans):", report.by_span_length);
  return os.str();
}

std::string format_report_csv(const CorpusReport& report) {
  std::ostringstream os;
  os << "section,key,items,valid_f1,overall_f1,lp,lr,f1,invalid_rate,unfaithful_rate,overgen_rate,"
        "wordmis_rate,failure_rate,backend_failures\n";
  auto row = [&](const DomainRow& r) {
    os << "domain," << r.domain << ',' << r.score.sentences << ',' << r.score.valid_f1 << ','
       << r.score.overall_f1 << ',' << r.score.lp << ',' << r.score.lr << ',' << r.score.f1 << ','
       << r.score.invalid_rate << ',' << r.score.unfaithful_rate << ',' << r.overgeneration_rate << ','
       << r.word_mismatch_rate << ',' << r.failure_rate << ',' << r.backend_failures << '\n';
  };
  for (const auto& r : report.rows) row(r);
  row(report.total);
  for (const auto& [kind, n] : report.total.invalid_kinds) os << "invalid_kind," << kind << ',' << n << ",,,,,,,,,,,\n";
  auto buckets = [&](const char* section, const std::vector<BucketRow>& rows) {
    for (const auto& b : rows) {
      os << section << ",\"" << b.bucket << "\"," << b.items << ",,," << b.lp << ',' << b.lr << ',' << b.f1
         << ",,,,,,\n";
    }
  };
  buckets("input_length", report.by_input_length);
  buckets("span_length", report.by_span_length);
  if (report.delta_f1) {
    os << "delta_f1,reference=" << *report.reference_f1 << ";out=" << *report.out_domain_f1 << ",,,,,,"
       << *report.delta_f1 << ",,,,,,\n";
  }
  return os.str();
}

nlohmann::json to_json(const CorpusReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  nlohmann::json j = {{"rows", rows}, {"total", row_json(report.total)}};
  if (report.delta_f1) {
    j["reference_f1"] = *report.reference_f1;
    j["out_domain_f1"] = *report.out_domain_f1;
    j["delta_f1"] = *report.delta_f1;
  }
  if (!report.by_input_length.empty()) j["by_input_length"] = bucket_json(report.by_input_length);
  if (!report.by_span_length.empty()) j["by_span_length"] = bucket_json(report.by_span_length);
  return j;
}

}  // namespace conparse
