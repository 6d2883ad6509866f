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

#include "cliniex/engine.h"

#include <algorithm>
#include <charconv>
#include <limits>
#include <map>
#include <regex>
#include <tuple>

#include "cliniex/utf8.h"

namespace cliniex {
namespace {

// Character-level view of a document shared by the matching stages.
struct TextIndex {
  std::u32string chars;
  std::vector<std::size_t> byte_offsets;  // chars.size() + 1 entries
  std::vector<bool> token_start;          // chars.size() + 1 entries
  std::vector<bool> token_end;
  // Case-folded text with whitespace runs collapsed to one space; each
  // normalized character remembers its position in `chars`.
  std::u32string normalized;
  std::vector<std::size_t> normalized_to_char;

  TextIndex(std::string_view text, const std::vector<TokenSpan> &tokens)
      : chars(utf8::Decode(text)),
        byte_offsets(utf8::ByteOffsets(text)),
        token_start(chars.size() + 1, false),
        token_end(chars.size() + 1, false) {
    for (const auto &t : tokens) {
      token_start[t.span.start()] = true;
      token_end[t.span.end()] = true;
    }
    normalized.reserve(chars.size());
    normalized_to_char.reserve(chars.size());
    bool pending_space = false;
    std::size_t space_at = 0;
    for (std::size_t i = 0; i < chars.size(); ++i) {
      if (utf8::IsSpace(chars[i])) {
        if (!pending_space) space_at = i;
        pending_space = !normalized.empty();
        continue;
      }
      if (pending_space) {
        normalized.push_back(U' ');
        normalized_to_char.push_back(space_at);
        pending_space = false;
      }
      normalized.push_back(utf8::FoldCase(chars[i]));
      normalized_to_char.push_back(i);
    }
  }

  // Token-aligned literal hits as character spans.
  template <typename Fn>
  void ForEachLiteral(const AhoCorasick &automaton, Fn &&fn) const {
    for (const auto &m : automaton.FindAll(normalized)) {
      const std::size_t start = normalized_to_char[m.begin];
      const std::size_t end = normalized_to_char[m.end - 1] + 1;
      if (token_start[start] && token_end[end]) fn(Span(start, end), m.value);
    }
  }

  // Non-empty regex hits as character spans.
  template <typename Fn>
  void ForEachRegex(std::string_view text, const std::regex &re,
                    Fn &&fn) const {
    for (std::cregex_iterator it(text.data(), text.data() + text.size(), re),
         end;
         it != end; ++it) {
      if (it->length(0) == 0) continue;
      const auto b = static_cast<std::size_t>(it->position(0));
      const auto e = b + static_cast<std::size_t>(it->length(0));
      const std::size_t start = CharAtOrBefore(b);
      std::size_t stop = CharAtOrBefore(e);
      if (byte_offsets[stop] != e) ++stop;
      if (stop > start) fn(Span(start, stop));
    }
  }

  std::size_t CharAtOrBefore(std::size_t byte) const {
    auto it = std::upper_bound(byte_offsets.begin(), byte_offsets.end(), byte);
    return static_cast<std::size_t>(it - byte_offsets.begin()) - 1;
  }
};

bool MentionLess(const ConceptMention &a, const ConceptMention &b) {
  return std::tie(a.span, a.concept_type) < std::tie(b.span, b.concept_type);
}

std::size_t SentenceOf(const std::vector<SentenceSpan> &sentences,
                       std::size_t pos) {
  auto it = std::upper_bound(
      sentences.begin(), sentences.end(), pos,
      [](std::size_t p, const SentenceSpan &s) { return p < s.span.start(); });
  if (it == sentences.begin()) return 0;
  return static_cast<std::size_t>(it - sentences.begin()) - 1;
}

std::vector<ConceptMention> MatchIndexed(std::string_view text,
                                         const TextIndex &index,
                                         const CompiledMatchers &matchers) {
  struct Candidate {
    Span span;
    int order;
    const std::string *concept_type;
    const std::string *rule_id;
  };
  std::map<std::string, std::vector<Candidate>> by_concept;

  const auto &targets = matchers.literal_targets();
  index.ForEachLiteral(matchers.literals(), [&](Span span, int value) {
    const auto &t = targets[static_cast<std::size_t>(value)];
    by_concept[t.concept_type].push_back(
        {span, t.order, &t.concept_type, &t.rule_id});
  });
  for (const auto &r : matchers.regexes()) {
    index.ForEachRegex(text, r.regex, [&](Span span) {
      by_concept[r.concept_type].push_back(
          {span, r.order, &r.concept_type, &r.rule_id});
    });
  }

  std::vector<ConceptMention> mentions;
  for (auto &[concept_type, candidates] : by_concept) {
    // Longest first, then leftmost, then earliest-declared rule.
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate &a, const Candidate &b) {
                if (a.span.length() != b.span.length()) {
                  return a.span.length() > b.span.length();
                }
                if (a.span.start() != b.span.start()) {
                  return a.span.start() < b.span.start();
                }
                return a.order < b.order;
              });
    // Selected spans keyed by start; kept disjoint.
    std::map<std::size_t, std::size_t> taken;
    for (const auto &c : candidates) {
      auto next = taken.lower_bound(c.span.start());
      if (next != taken.end() && next->first < c.span.end()) continue;
      if (next != taken.begin() && std::prev(next)->second > c.span.start()) {
        continue;
      }
      taken.emplace(c.span.start(), c.span.end());
      const std::size_t b = index.byte_offsets[c.span.start()];
      const std::size_t e = index.byte_offsets[c.span.end()];
      ConceptMention m{c.span, *c.concept_type, Certainty::kPositive,
                       std::string(text.substr(b, e - b)), Experiencer::kPatient,
                       std::nullopt, *c.rule_id};
      mentions.push_back(std::move(m));
    }
  }
  std::sort(mentions.begin(), mentions.end(), MentionLess);
  return mentions;
}

struct TriggerHit {
  Span span;
  int rule;
};

std::vector<ConceptMention> ContextIndexed(
    std::string_view text, const TextIndex &index,
    const std::vector<SentenceSpan> &sentences,
    std::vector<ConceptMention> mentions, const CompiledMatchers &matchers) {
  if (mentions.empty() || sentences.empty()) return mentions;
  const auto &rules = matchers.context_rules();

  std::vector<TriggerHit> hits;
  index.ForEachLiteral(matchers.trigger_literals(),
                       [&](Span span, int rule) { hits.push_back({span, rule}); });
  for (const auto &t : matchers.trigger_regexes()) {
    index.ForEachRegex(text, t.regex,
                       [&](Span span) { hits.push_back({span, t.rule}); });
  }
  std::sort(hits.begin(), hits.end(), [](const TriggerHit &a, const TriggerHit &b) {
    return std::tie(a.span, a.rule) < std::tie(b.span, b.rule);
  });
  hits.erase(std::unique(hits.begin(), hits.end(),
                         [](const TriggerHit &a, const TriggerHit &b) {
                           return a.span == b.span && a.rule == b.rule;
                         }),
             hits.end());

  auto rule_of = [&rules](const TriggerHit &h) -> const ContextRule & {
    return rules[static_cast<std::size_t>(h.rule)];
  };

  // Pseudo triggers suppress the triggers they contain.
  std::vector<TriggerHit> pseudo;
  for (const auto &h : hits) {
    if (rule_of(h).direction == Direction::kPseudo) pseudo.push_back(h);
  }
  std::vector<TriggerHit> terminators, pre, post;
  for (const auto &h : hits) {
    const ContextRule &r = rule_of(h);
    if (r.direction == Direction::kPseudo || r.modifier == Modifier::kHist) {
      continue;
    }
    const bool blocked = std::any_of(
        pseudo.begin(), pseudo.end(), [&](const TriggerHit &p) {
          return p.span.Contains(h.span) && rule_of(p).modifier == r.modifier;
        });
    if (blocked) continue;
    if (r.modifier == Modifier::kTermin) {
      terminators.push_back(h);
    } else if (r.direction == Direction::kPre) {
      pre.push_back(h);
    } else {
      post.push_back(h);
    }
  }

  struct Claim {
    int priority = 0;
    std::size_t distance = 0;
    int rule = 0;
    std::size_t trigger_start = 0;
    bool set = false;

    bool BeatenBy(const Claim &o) const {
      if (!set) return true;
      if (o.priority != priority) return o.priority > priority;
      if (o.distance != distance) return o.distance < distance;
      if (o.rule != rule) return o.rule < rule;
      return o.trigger_start < trigger_start;
    }
  };
  std::vector<Claim> certainty_claims(mentions.size());
  std::vector<Certainty> certainty(mentions.size(), Certainty::kPositive);
  std::vector<Claim> experiencer_claims(mentions.size());

  auto claim = [&](const TriggerHit &h, std::size_t scope_start,
                   std::size_t scope_end) {
    const ContextRule &r = rule_of(h);
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      const Span &s = mentions[i].span;
      if (s.start() < scope_start || s.end() > scope_end) continue;
      Claim c;
      c.priority = r.priority;
      c.distance = r.direction == Direction::kPre ? s.start() - h.span.end()
                                                  : h.span.start() - s.end();
      c.rule = h.rule;
      c.trigger_start = h.span.start();
      c.set = true;
      if (r.modifier == Modifier::kExpOther) {
        if (experiencer_claims[i].BeatenBy(c)) experiencer_claims[i] = c;
        continue;
      }
      if (!certainty_claims[i].BeatenBy(c)) continue;
      certainty_claims[i] = c;
      certainty[i] = r.modifier == Modifier::kNeg    ? Certainty::kNegated
                     : r.modifier == Modifier::kPoss ? Certainty::kPossible
                                                     : Certainty::kHypothetical;
    }
  };

  const std::size_t last_sentence = sentences.size() - 1;
  for (const auto &h : pre) {
    const std::size_t s = SentenceOf(sentences, h.span.start());
    const std::size_t window =
        static_cast<std::size_t>(rule_of(h).window_sentences);
    std::size_t limit =
        sentences[std::min(last_sentence, s + window - 1)].span.end();
    for (const auto *group : {&terminators, &pre}) {
      for (const auto &t : *group) {
        if (&t != &h && t.span.start() >= h.span.end()) {
          limit = std::min(limit, t.span.start());
        }
      }
    }
    if (limit > h.span.end()) claim(h, h.span.end(), limit);
  }
  for (const auto &h : post) {
    const std::size_t s = SentenceOf(sentences, h.span.end() - 1);
    const std::size_t window =
        static_cast<std::size_t>(rule_of(h).window_sentences);
    std::size_t lower = sentences[s >= window - 1 ? s - (window - 1) : 0].span.start();
    for (const auto *group : {&terminators, &post}) {
      for (const auto &t : *group) {
        if (&t != &h && t.span.end() <= h.span.start()) {
          lower = std::max(lower, t.span.end());
        }
      }
    }
    if (h.span.start() > lower) claim(h, lower, h.span.start());
  }

  for (std::size_t i = 0; i < mentions.size(); ++i) {
    mentions[i].certainty = certainty[i];
    mentions[i].experiencer = experiencer_claims[i].set ? Experiencer::kOther
                                                        : Experiencer::kPatient;
  }
  return mentions;
}

int NumberWord(std::string_view word) {
  static const char *kWords[] = {"one", "two", "three", "four", "five",
                                 "six", "seven", "eight", "nine", "ten"};
  const std::string lower = ToLowerAscii(word);
  for (int i = 0; i < 10; ++i) {
    if (lower == kWords[i]) return i + 1;
  }
  int value = -1;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc() || ptr != word.data() + word.size()) return -1;
  return value;
}

std::vector<TemporalMention> TemporalIndexed(std::string_view text,
                                             const TextIndex &index,
                                             const std::optional<Date> &doc_date) {
  static const std::regex kIso(R"(\b(\d{4})-(\d{2})-(\d{2})\b)");
  static const std::regex kUs(R"(\b(\d{1,2})/(\d{1,2})/(\d{4})\b)");
  static const std::regex kRelative(
      R"(\b(today|yesterday|last\s+week|(\d{1,4}|one|two|three|four|five|six|seven|eight|nine|ten)\s+(days?|weeks?)\s+ago)\b)",
      std::regex::ECMAScript | std::regex::icase);

  std::vector<TemporalMention> found;
  auto add = [&](const std::cmatch &m, TemporalKind kind,
                 std::optional<Date> resolved) {
    const auto b = static_cast<std::size_t>(m.position(0));
    const auto e = b + static_cast<std::size_t>(m.length(0));
    const Span span(index.CharAtOrBefore(b), index.CharAtOrBefore(e));
    found.push_back({span, kind, resolved, m.str(0)});
  };
  auto to_int = [](const std::csub_match &s) { return std::stoi(s.str()); };

  const char *begin = text.data();
  const char *end = text.data() + text.size();
  for (std::cregex_iterator it(begin, end, kIso), stop; it != stop; ++it) {
    const std::chrono::year_month_day d{
        std::chrono::year{to_int((*it)[1])},
        std::chrono::month{static_cast<unsigned>(to_int((*it)[2]))},
        std::chrono::day{static_cast<unsigned>(to_int((*it)[3]))}};
    if (d.ok()) add(*it, TemporalKind::kAbsoluteDate, d);
  }
  for (std::cregex_iterator it(begin, end, kUs), stop; it != stop; ++it) {
    const std::chrono::year_month_day d{
        std::chrono::year{to_int((*it)[3])},
        std::chrono::month{static_cast<unsigned>(to_int((*it)[1]))},
        std::chrono::day{static_cast<unsigned>(to_int((*it)[2]))}};
    if (d.ok()) add(*it, TemporalKind::kAbsoluteDate, d);
  }
  for (std::cregex_iterator it(begin, end, kRelative), stop; it != stop; ++it) {
    const std::string phrase = ToLowerAscii(it->str(1));
    int offset_days;
    if (phrase == "today") {
      offset_days = 0;
    } else if (phrase == "yesterday") {
      offset_days = -1;
    } else if (StartsWith(phrase, "last")) {
      offset_days = -7;
    } else {
      const int n = NumberWord(it->str(2));
      const bool weeks = ToLowerAscii(it->str(3))[0] == 'w';
      offset_days = -n * (weeks ? 7 : 1);
    }
    std::optional<Date> resolved;
    if (doc_date) resolved = AddDays(*doc_date, offset_days);
    add(*it, TemporalKind::kRelativeExpression, resolved);
  }

  std::sort(found.begin(), found.end(),
            [](const TemporalMention &a, const TemporalMention &b) {
              if (a.span.start() != b.span.start()) {
                return a.span.start() < b.span.start();
              }
              return a.span.length() > b.span.length();
            });
  std::vector<TemporalMention> out;
  for (auto &t : found) {
    if (!out.empty() && SpanOverlaps(out.back().span, t.span)) continue;
    out.push_back(std::move(t));
  }
  return out;
}

void AttachDates(const std::vector<SentenceSpan> &sentences,
                 const std::vector<TemporalMention> &temporal,
                 std::vector<ConceptMention> &mentions) {
  for (auto &m : mentions) {
    const std::size_t s = SentenceOf(sentences, m.span.start());
    std::size_t best_gap = std::numeric_limits<std::size_t>::max();
    for (const auto &t : temporal) {
      if (!t.resolved || SentenceOf(sentences, t.span.start()) != s) continue;
      std::size_t gap = 0;
      if (t.span.start() >= m.span.end()) {
        gap = t.span.start() - m.span.end();
      } else if (m.span.start() >= t.span.end()) {
        gap = m.span.start() - t.span.end();
      }
      // Strict comparison keeps the earlier expression on ties.
      if (gap < best_gap) {
        best_gap = gap;
        m.normalized_date = t.resolved;
      }
    }
  }
}

}  // namespace

std::vector<SentenceSpan> SegmentSentences(std::string_view text,
                                           const SegmenterOptions &options) {
  const std::u32string chars = utf8::Decode(text);
  const std::size_t n = chars.size();
  std::vector<std::size_t> cuts;

  auto is_closer = [](char32_t c) {
    return c == '.' || c == '!' || c == '?' || c == '"' || c == '\'' ||
           c == ')' || c == ']' || c == 0x201D || c == 0x2019;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const char32_t c = chars[i];
    if (c == '\n') {
      std::size_t j = i + 1;
      while (j < n && chars[j] != '\n' && utf8::IsSpace(chars[j])) ++j;
      if (j < n && chars[j] == '\n') cuts.push_back(i);
      continue;
    }
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t e = i + 1;
    while (e < n && is_closer(chars[e])) ++e;
    if (e >= n || !utf8::IsSpace(chars[e])) continue;
    std::size_t m = e;
    while (m < n && utf8::IsSpace(chars[m])) ++m;
    if (m >= n) continue;
    if (!utf8::IsUpper(chars[m]) && !utf8::IsDigit(chars[m])) continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > 0 && !utf8::IsSpace(chars[w - 1])) --w;
      const std::string word =
          ToLowerAscii(utf8::Encode(std::u32string_view(chars).substr(w, i + 1 - w)));
      if (std::find(options.abbreviations.begin(), options.abbreviations.end(),
                    word) != options.abbreviations.end()) {
        continue;
      }
    }
    cuts.push_back(e);
    i = e - 1;
  }
  cuts.push_back(n);

  std::vector<SentenceSpan> sentences;
  std::size_t begin = 0;
  for (std::size_t cut : cuts) {
    std::size_t b = begin;
    std::size_t e = cut;
    while (b < e && utf8::IsSpace(chars[b])) ++b;
    while (e > b && utf8::IsSpace(chars[e - 1])) --e;
    if (e > b) sentences.push_back({Span(b, e), sentences.size()});
    begin = cut;
  }
  return sentences;
}

std::vector<TokenSpan> Tokenize(std::string_view text,
                                const std::vector<SentenceSpan> &sentences) {
  const std::u32string chars = utf8::Decode(text);
  std::vector<TokenSpan> tokens;
  for (const auto &s : sentences) {
    std::size_t i = s.span.start();
    while (i < s.span.end()) {
      if (utf8::IsSpace(chars[i])) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      if (utf8::IsWordChar(chars[i])) {
        while (j < s.span.end() && utf8::IsWordChar(chars[j])) ++j;
      }
      tokens.push_back({Span(i, j), s.index});
      i = j;
    }
  }
  return tokens;
}

std::vector<ConceptMention> MatchConcepts(const Document &doc,
                                          const CompiledMatchers &matchers) {
  const auto sentences = SegmentSentences(doc.text());
  const TextIndex index(doc.text(), Tokenize(doc.text(), sentences));
  return MatchIndexed(doc.text(), index, matchers);
}

std::vector<ConceptMention> ApplyContext(
    const Document &doc, const std::vector<SentenceSpan> &sentences,
    std::vector<ConceptMention> mentions, const CompiledMatchers &matchers) {
  const TextIndex index(doc.text(), Tokenize(doc.text(), sentences));
  return ContextIndexed(doc.text(), index, sentences, std::move(mentions),
                        matchers);
}

std::vector<TemporalMention> ExtractTemporal(
    const Document &doc, const std::vector<SentenceSpan> &sentences) {
  const TextIndex index(doc.text(), Tokenize(doc.text(), sentences));
  return TemporalIndexed(doc.text(), index, doc.doc_date());
}

Annotation AnnotateDocument(const Document &doc,
                            const CompiledMatchers &matchers) {
  Annotation result;
  const auto sentences = SegmentSentences(doc.text());
  const TextIndex index(doc.text(), Tokenize(doc.text(), sentences));
  auto mentions = MatchIndexed(doc.text(), index, matchers);
  mentions = ContextIndexed(doc.text(), index, sentences, std::move(mentions),
                            matchers);
  result.temporal = TemporalIndexed(doc.text(), index, doc.doc_date());
  AttachDates(sentences, result.temporal, mentions);
  std::sort(mentions.begin(), mentions.end(), MentionLess);
  result.mentions = std::move(mentions);
  return result;
}

std::vector<ConceptMention> Annotate(const Document &doc,
                                     const CompiledMatchers &matchers) {
  return AnnotateDocument(doc, matchers).mentions;
}

nlohmann::json TemporalToJson(const TemporalMention &t) {
  return nlohmann::json{
      {"start", t.span.start()},
      {"end", t.span.end()},
      {"kind", t.kind == TemporalKind::kAbsoluteDate ? "absolute_date"
                                                     : "relative_expression"},
      {"resolved", t.resolved ? nlohmann::json(FormatIsoDate(*t.resolved))
                              : nlohmann::json(nullptr)},
      {"text", t.text},
  };
}

}  // namespace cliniex
