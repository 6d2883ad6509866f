// Copyright 2026 The Cliniex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Mention-level evaluation: gold loading, pairing, metrics, agreement,
// corpus splits, error tallies and site reports.

#ifndef CLINIEX_EVALUATION_H_
#define CLINIEX_EVALUATION_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cliniex/model.h"

namespace cliniex {

struct GoldAnnotation {
  std::string doc_id;
  Span span;
  std::string concept_type;
  Certainty certainty = Certainty::kPositive;
  std::string annotator;

  friend bool operator==(const GoldAnnotation &,
                         const GoldAnnotation &) = default;
};

// doc_id -> annotations, in file order.
using GoldCorpus = std::map<std::string, std::vector<GoldAnnotation>>;

// Parses one brat standoff .ann file against its text. Throws
// IntegrityError for offsets or text that disagree with `text`,
// VocabularyError for unknown certainty values and ParseError for other
// malformed lines.
std::vector<GoldAnnotation> ParseBratAnnotations(
    const std::string &doc_id, std::string_view text, std::string_view ann,
    const std::string &file_name = "", const std::string &annotator = "");

// Reads every <id>.txt / <id>.ann pair in `dir`. A .txt without .ann is a
// document with no mentions; an .ann without .txt is an error.
GoldCorpus LoadBratCorpus(const std::string &dir,
                          const std::string &annotator = "");

// Serializes annotations as a .ann body (used to build fixtures).
std::string FormatBratAnnotations(const std::vector<GoldAnnotation> &gold,
                                  std::string_view text);

enum class MatchMode { kSpan, kSpanCertainty };

std::string_view MatchModeName(MatchMode m);  // "span", "span+certainty"
std::optional<MatchMode> ParseMatchMode(std::string_view s);

// The evaluation view of a mention, gold or system.
struct EvalMention {
  std::string doc_id;
  Span span;
  std::string concept_type;
  Certainty certainty = Certainty::kPositive;

  static EvalMention From(const GoldAnnotation &g);
  static EvalMention From(const MentionRecord &r);

  friend auto operator<=>(const EvalMention &, const EvalMention &) = default;
};

using EvalCorpus = std::map<std::string, std::vector<EvalMention>>;

EvalCorpus ToEvalCorpus(const GoldCorpus &gold);
EvalCorpus ToEvalCorpus(const std::vector<MentionRecord> &records);

struct MatchResult {
  std::vector<std::pair<EvalMention, EvalMention>> tp;  // (gold, system)
  std::vector<EvalMention> fp;
  std::vector<EvalMention> fn;
  MatchMode mode = MatchMode::kSpan;
};

// Greedy one-to-one pairing within one document. Candidate pairs overlap,
// share the concept and, in SpanCertainty mode, the certainty. They are
// taken in order of gold start, then overlap length (longest first), then
// gold end, system start, system end and list position.
MatchResult MatchMentions(const std::vector<EvalMention> &gold,
                          const std::vector<EvalMention> &system,
                          MatchMode mode);

// Per-document matching over the gold documents. System mentions on
// documents absent from the gold corpus are not scored.
MatchResult MatchCorpus(const EvalCorpus &gold, const EvalCorpus &system,
                        MatchMode mode);

struct Counts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;

  // Fills the ratios from the counts.
  static Counts FromCounts(std::int64_t tp, std::int64_t fp, std::int64_t fn);

  friend bool operator==(const Counts &, const Counts &) = default;
};

struct MetricsReport {
  MatchMode mode = MatchMode::kSpan;
  Counts overall;
  std::map<std::string, Counts> per_concept;

  friend bool operator==(const MetricsReport &,
                         const MetricsReport &) = default;
};

MetricsReport ComputeMetrics(const MatchResult &mr);

// 2pr/(p+r); absent when both are zero.
std::optional<double> F1FromPr(double p, double r);

// Mean of the two directional span F1 scores. Both corpora must cover the
// same documents (InputError otherwise). Absent when neither corpus has a
// mention.
std::optional<double> ComputeIaa(const EvalCorpus &a, const EvalCorpus &b);

struct SplitSpec {
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::size_t>> part_sizes;
};

// Seeded Fisher-Yates shuffle over mt19937_64 followed by a contiguous
// partition in part order. Identical on every platform for the same input.
std::map<std::string, std::vector<std::string>> SplitCorpus(
    const std::vector<std::string> &doc_ids, const SplitSpec &spec);
// "dev=101,val=105,test=107"
SplitSpec ParseSplitSizes(std::string_view sizes, std::uint64_t seed);

enum class ErrorCategory {
  kMissingAnnotation,
  kHardToJudge,
  kNotCovidInstructionEducation,
  kNotCovidAdverseEventIndication,
  kNotCovidGoalPrecaution,
  kNotCovidTemplate,
  kNotCovidOther,
  kNlpNotPrecise,
  kNlpNotComplete,
  kAnnotationError,
  kTokenizationError,
  kTemplate,
};

enum class ErrorSide { kFalsePositive, kFalseNegative };

std::string_view ErrorCategoryName(ErrorCategory c);
std::optional<ErrorCategory> ParseErrorCategory(std::string_view s);
ErrorSide SideOf(ErrorCategory c);
const std::vector<ErrorCategory> &AllErrorCategories();

struct ErrorLabel {
  std::string doc_id;
  std::string concept_type;
  Span span;
  ErrorSide side;
  ErrorCategory category;
};

// Tab-separated doc_id, concept, start, end, side (fp|fn), category.
std::vector<ErrorLabel> ParseErrorLabels(std::string_view contents,
                                         const std::string &file_name = "");

struct ErrorTally {
  std::int64_t count = 0;
  // count / total errors on the category's side, half-up to whole percent.
  int percent = 0;

  friend bool operator==(const ErrorTally &, const ErrorTally &) = default;
};

int WholePercent(std::int64_t count, std::int64_t total);

// Throws InputError when a label matches no FP/FN of `mr`, names the wrong
// side for its category, or labels one error twice.
std::map<ErrorCategory, ErrorTally> CategorizeErrors(
    const MatchResult &mr, const std::vector<ErrorLabel> &labels);

struct SiteReport {
  std::string site;
  std::string dataset;
  MetricsReport metrics_span;
  MetricsReport metrics_span_certainty;
  std::map<ErrorCategory, std::int64_t> error_tallies;
};

nlohmann::json MetricsToJson(const MetricsReport &m);
MetricsReport MetricsFromJson(const nlohmann::json &j);
nlohmann::json SiteReportToJson(const SiteReport &r);
// Rejects unknown or missing keys.
SiteReport SiteReportFromJson(const nlohmann::json &j);

struct AggregateRow {
  std::string site;
  std::string dataset;
  MatchMode mode;
  Counts counts;
};

// One row per (site, dataset, mode) carrying the reported figures, then
// one pooled row per mode recomputed from the summed counts (site
// "pooled", dataset "all"). Duplicate (site, dataset) is an InputError.
std::vector<AggregateRow> AggregateSiteReports(
    const std::vector<SiteReport> &reports);

std::string FormatAggregateTable(const std::vector<AggregateRow> &rows);
std::string FormatAggregateTsv(const std::vector<AggregateRow> &rows);
std::string FormatMetricsTable(const MetricsReport &m);
std::string FormatMetricsTsv(const MetricsReport &m);

// Canonical mention file (detected by its header) or NOTE_NLP output.
std::vector<MentionRecord> LoadSystemMentions(const std::string &path);

}  // namespace cliniex

#endif  // CLINIEX_EVALUATION_H_
