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

// The extraction engine. Annotate() runs
//
//   segment -> tokenize -> match concepts -> apply context -> attach dates
//
// and is pure: the same document and matchers always give the same output,
// and one CompiledMatchers may serve any number of concurrent calls.

#ifndef CLINIEX_ENGINE_H_
#define CLINIEX_ENGINE_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cliniex/model.h"
#include "cliniex/ruleset.h"

namespace cliniex {

struct SentenceSpan {
  Span span;
  std::size_t index;

  friend bool operator==(const SentenceSpan &, const SentenceSpan &) = default;
};

struct TokenSpan {
  Span span;
  std::size_t sentence_index;

  friend bool operator==(const TokenSpan &, const TokenSpan &) = default;
};

enum class TemporalKind { kAbsoluteDate, kRelativeExpression };

struct TemporalMention {
  Span span;
  TemporalKind kind;
  // Always set for absolute dates; set for relative expressions only when
  // the document date is known.
  std::optional<Date> resolved;
  std::string text;

  friend bool operator==(const TemporalMention &,
                         const TemporalMention &) = default;
};

struct SegmenterOptions {
  // Lowercase tokens, including their final period, that never end a
  // sentence.
  std::vector<std::string> abbreviations = {"dr.", "mr.", "mrs.", "ms.",
                                            "e.g.", "i.e.", "vs."};
};

// Splits after '.', '!' or '?' when followed by whitespace and then an
// uppercase letter or a digit, and at blank lines. Sentences are trimmed of
// surrounding whitespace.
std::vector<SentenceSpan> SegmentSentences(std::string_view text,
                                           const SegmenterOptions &options = {});

// Maximal runs of word characters; every other non-space character is a
// token of its own.
std::vector<TokenSpan> Tokenize(std::string_view text,
                                const std::vector<SentenceSpan> &sentences);

// Concept mentions before context: literal matches on token boundaries
// plus regex matches, with overlapping same-concept matches reduced to the
// longest. All mentions are Positive/Patient.
std::vector<ConceptMention> MatchConcepts(const Document &doc,
                                          const CompiledMatchers &matchers);

// Assigns certainty and experiencer from the context rules. Never adds or
// removes mentions.
std::vector<ConceptMention> ApplyContext(
    const Document &doc, const std::vector<SentenceSpan> &sentences,
    std::vector<ConceptMention> mentions, const CompiledMatchers &matchers);

std::vector<TemporalMention> ExtractTemporal(
    const Document &doc, const std::vector<SentenceSpan> &sentences);

struct Annotation {
  std::vector<ConceptMention> mentions;
  std::vector<TemporalMention> temporal;
};

// Full pipeline; mentions sorted by (start, end, concept).
Annotation AnnotateDocument(const Document &doc,
                            const CompiledMatchers &matchers);
std::vector<ConceptMention> Annotate(const Document &doc,
                                     const CompiledMatchers &matchers);

nlohmann::json TemporalToJson(const TemporalMention &t);

}  // namespace cliniex

#endif  // CLINIEX_ENGINE_H_
