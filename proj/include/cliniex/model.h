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

// Domain types shared by the engine, the pipeline and the evaluator.

#ifndef CLINIEX_MODEL_H_
#define CLINIEX_MODEL_H_

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cliniex/text.h"

namespace cliniex {

// Half-open range [start, end) of Unicode scalar values in a document.
// Empty and reversed spans cannot be constructed.
class Span {
 public:
  Span(std::size_t start, std::size_t end);

  std::size_t start() const { return start_; }
  std::size_t end() const { return end_; }
  std::size_t length() const { return end_ - start_; }

  bool Contains(const Span &other) const {
    return start_ <= other.start_ && other.end_ <= end_;
  }

  friend auto operator<=>(const Span &, const Span &) = default;

 private:
  std::size_t start_;
  std::size_t end_;
};

bool SpanOverlaps(const Span &a, const Span &b);

// Characters shared by two spans; 0 when they do not overlap.
std::size_t OverlapLength(const Span &a, const Span &b);

enum class Certainty { kPositive, kNegated, kHypothetical, kPossible };
enum class Experiencer { kPatient, kOther };

// Lowercase names: "positive", "negated", "hypothetical", "possible".
std::string_view CertaintyName(Certainty c);
// Case-insensitive inverse of CertaintyName.
std::optional<Certainty> ParseCertainty(std::string_view s);
std::string_view ExperiencerName(Experiencer e);
std::optional<Experiencer> ParseExperiencer(std::string_view s);

struct ConceptMention {
  Span span;
  std::string concept_type;
  Certainty certainty = Certainty::kPositive;
  // Verbatim slice of the document text covered by `span`.
  std::string matched_text;
  Experiencer experiencer = Experiencer::kPatient;
  std::optional<Date> normalized_date;
  std::string rule_id;

  friend bool operator==(const ConceptMention &,
                         const ConceptMention &) = default;
};

class Document {
 public:
  // Throws InputError when doc_id is empty.
  Document(std::string doc_id, std::string text,
           std::optional<Date> doc_date = std::nullopt);

  const std::string &doc_id() const { return doc_id_; }
  const std::string &text() const { return text_; }
  const std::optional<Date> &doc_date() const { return doc_date_; }

 private:
  std::string doc_id_;
  std::string text_;
  std::optional<Date> doc_date_;
};

// Text from window characters before the span to window characters after
// it, clipped to the text. Throws std::out_of_range if the span exceeds the
// text.
std::string Snippet(std::string_view text, const Span &span,
                    std::size_t window);

// Every invariant a mention violates against `doc`; empty means valid. When
// `concepts` is given the mention's concept must belong to it.
std::vector<std::string> ValidateMention(
    const ConceptMention &m, const Document &doc,
    const std::set<std::string> *concepts = nullptr);

// Canonical serialization: one record per mention, in tab-separated and JSON
// forms. Columns: doc_id, concept, start, end, certainty, experiencer,
// matched_text, normalized_date, rule_id.
struct MentionRecord {
  std::string doc_id;
  ConceptMention mention;

  friend bool operator==(const MentionRecord &,
                         const MentionRecord &) = default;
};

extern const char kMentionTsvHeader[];

std::string FormatMentionTsv(const MentionRecord &r);
// Throws ParseError (file "", given line) on malformed input.
MentionRecord ParseMentionTsv(std::string_view line, int line_number = 0);

nlohmann::json MentionToJson(const MentionRecord &r);
MentionRecord MentionFromJson(const nlohmann::json &j);

// Whole-file forms. The TSV file starts with kMentionTsvHeader.
std::string FormatMentionFile(const std::vector<MentionRecord> &records);
std::vector<MentionRecord> ParseMentionFile(std::string_view contents,
                                            const std::string &file_name = "");

}  // namespace cliniex

#endif  // CLINIEX_MODEL_H_
