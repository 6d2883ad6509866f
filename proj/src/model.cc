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

#include "cliniex/model.h"

#include <algorithm>
#include <charconv>

#include "cliniex/errors.h"
#include "cliniex/utf8.h"

namespace cliniex {

Span::Span(std::size_t start, std::size_t end) : start_(start), end_(end) {
  if (end <= start) {
    throw InputError("invalid span [" + std::to_string(start) + "," +
                     std::to_string(end) + ")");
  }
}

bool SpanOverlaps(const Span &a, const Span &b) {
  return a.start() < b.end() && b.start() < a.end();
}

std::size_t OverlapLength(const Span &a, const Span &b) {
  if (!SpanOverlaps(a, b)) return 0;
  return std::min(a.end(), b.end()) - std::max(a.start(), b.start());
}

std::string_view CertaintyName(Certainty c) {
  switch (c) {
    case Certainty::kPositive: return "positive";
    case Certainty::kNegated: return "negated";
    case Certainty::kHypothetical: return "hypothetical";
    case Certainty::kPossible: return "possible";
  }
  return "positive";
}

std::optional<Certainty> ParseCertainty(std::string_view s) {
  const std::string lower = ToLowerAscii(Trim(s));
  for (auto c : {Certainty::kPositive, Certainty::kNegated,
                 Certainty::kHypothetical, Certainty::kPossible}) {
    if (lower == CertaintyName(c)) return c;
  }
  return std::nullopt;
}

std::string_view ExperiencerName(Experiencer e) {
  return e == Experiencer::kPatient ? "patient" : "other";
}

std::optional<Experiencer> ParseExperiencer(std::string_view s) {
  const std::string lower = ToLowerAscii(Trim(s));
  if (lower == "patient") return Experiencer::kPatient;
  if (lower == "other") return Experiencer::kOther;
  return std::nullopt;
}

Document::Document(std::string doc_id, std::string text,
                   std::optional<Date> doc_date)
    : doc_id_(std::move(doc_id)),
      text_(std::move(text)),
      doc_date_(doc_date) {
  if (doc_id_.empty()) throw InputError("document id must not be empty");
}

std::string Snippet(std::string_view text, const Span &span,
                    std::size_t window) {
  const std::size_t length = utf8::Length(text);
  if (span.end() > length) {
    throw std::out_of_range("span [" + std::to_string(span.start()) + "," +
                            std::to_string(span.end()) +
                            ") exceeds text length " + std::to_string(length));
  }
  const std::size_t begin = span.start() > window ? span.start() - window : 0;
  const std::size_t end = std::min(length, span.end() + window);
  return utf8::Slice(text, begin, end);
}

std::vector<std::string> ValidateMention(const ConceptMention &m,
                                         const Document &doc,
                                         const std::set<std::string> *concepts) {
  std::vector<std::string> violations;
  if (m.span.end() > utf8::Length(doc.text())) {
    violations.emplace_back("span out of bounds");
  } else if (utf8::Slice(doc.text(), m.span.start(), m.span.end()) !=
             m.matched_text) {
    violations.emplace_back("text mismatch");
  }
  if (m.concept_type.empty()) {
    violations.emplace_back("empty concept");
  } else if (concepts != nullptr && !concepts->contains(m.concept_type)) {
    violations.emplace_back("unknown concept " + m.concept_type);
  }
  return violations;
}

const char kMentionTsvHeader[] =
    "doc_id\tconcept\tstart\tend\tcertainty\texperiencer\tmatched_text\t"
    "normalized_date\trule_id";

std::string FormatMentionTsv(const MentionRecord &r) {
  const ConceptMention &m = r.mention;
  std::string line = EscapeField(r.doc_id);
  auto add = [&line](std::string_view field) {
    line.push_back('\t');
    line += field;
  };
  add(EscapeField(m.concept_type));
  add(std::to_string(m.span.start()));
  add(std::to_string(m.span.end()));
  add(CertaintyName(m.certainty));
  add(ExperiencerName(m.experiencer));
  add(EscapeField(m.matched_text));
  add(m.normalized_date ? FormatIsoDate(*m.normalized_date) : "");
  add(EscapeField(m.rule_id));
  return line;
}

namespace {

std::size_t ParseOffset(const std::string &field, int line_number,
                        const std::string &file_name) {
  std::size_t value = 0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() ||
      field.empty()) {
    throw ParseError(file_name, line_number, "bad offset '" + field + "'");
  }
  return value;
}

MentionRecord MakeRecord(std::string doc_id, std::string concept_type,
                         std::size_t start, std::size_t end,
                         std::string_view certainty,
                         std::string_view experiencer, std::string text,
                         std::string_view date, std::string rule_id,
                         int line_number, const std::string &file_name) {
  if (end <= start) {
    throw ParseError(file_name, line_number, "empty or reversed span");
  }
  auto c = ParseCertainty(certainty);
  if (!c) {
    throw VocabularyError(file_name, line_number,
                          "unknown certainty '" + std::string(certainty) + "'");
  }
  auto e = ParseExperiencer(experiencer);
  if (!e) {
    throw VocabularyError(
        file_name, line_number,
        "unknown experiencer '" + std::string(experiencer) + "'");
  }
  std::optional<Date> normalized;
  if (!date.empty()) {
    normalized = ParseIsoDate(date);
    if (!normalized) {
      throw ParseError(file_name, line_number,
                       "bad date '" + std::string(date) + "'");
    }
  }
  return MentionRecord{std::move(doc_id),
                       ConceptMention{Span(start, end), std::move(concept_type), *c,
                                      std::move(text), *e, normalized,
                                      std::move(rule_id)}};
}

MentionRecord ParseMentionLine(std::string_view line, int line_number,
                               const std::string &file_name) {
  auto fields = Split(line, '\t');
  if (fields.size() != 9) {
    throw ParseError(file_name, line_number,
                     "expected 9 fields, found " +
                         std::to_string(fields.size()));
  }
  return MakeRecord(UnescapeField(fields[0]), UnescapeField(fields[1]),
                    ParseOffset(fields[2], line_number, file_name),
                    ParseOffset(fields[3], line_number, file_name), fields[4],
                    fields[5], UnescapeField(fields[6]), fields[7],
                    UnescapeField(fields[8]), line_number, file_name);
}

}  // namespace

MentionRecord ParseMentionTsv(std::string_view line, int line_number) {
  return ParseMentionLine(line, line_number, "");
}

nlohmann::json MentionToJson(const MentionRecord &r) {
  const ConceptMention &m = r.mention;
  return nlohmann::json{
      {"doc_id", r.doc_id},
      {"concept", m.concept_type},
      {"start", m.span.start()},
      {"end", m.span.end()},
      {"certainty", CertaintyName(m.certainty)},
      {"experiencer", ExperiencerName(m.experiencer)},
      {"matched_text", m.matched_text},
      {"normalized_date",
       m.normalized_date ? FormatIsoDate(*m.normalized_date) : ""},
      {"rule_id", m.rule_id},
  };
}

MentionRecord MentionFromJson(const nlohmann::json &j) {
  try {
    return MakeRecord(j.at("doc_id").get<std::string>(),
                      j.at("concept").get<std::string>(),
                      j.at("start").get<std::size_t>(),
                      j.at("end").get<std::size_t>(),
                      j.at("certainty").get<std::string>(),
                      j.value("experiencer", std::string("patient")),
                      j.at("matched_text").get<std::string>(),
                      j.value("normalized_date", std::string()),
                      j.value("rule_id", std::string()), 0, "");
  } catch (const nlohmann::json::exception &e) {
    throw ParseError("", 0, std::string("bad mention JSON: ") + e.what());
  }
}

std::string FormatMentionFile(const std::vector<MentionRecord> &records) {
  std::string out = kMentionTsvHeader;
  out.push_back('\n');
  for (const auto &r : records) {
    out += FormatMentionTsv(r);
    out.push_back('\n');
  }
  return out;
}

std::vector<MentionRecord> ParseMentionFile(std::string_view contents,
                                            const std::string &file_name) {
  std::vector<MentionRecord> records;
  auto lines = Split(contents, '\n');
  int line_number = 0;
  for (auto &line : lines) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_number == 1 && line == kMentionTsvHeader) continue;
    records.push_back(ParseMentionLine(line, line_number, file_name));
  }
  return records;
}

}  // namespace cliniex
