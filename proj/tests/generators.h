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

// Random valid rule packages for round-trip properties.

#ifndef CLINIEX_TESTS_GENERATORS_H_
#define CLINIEX_TESTS_GENERATORS_H_

#include <random>
#include <string>
#include <vector>

#include "cliniex/ruleset.h"
#include "cliniex/utf8.h"

namespace cliniex::testing {

inline RulePackage RandomRulePackage(std::mt19937_64 &rng) {
  auto roll = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto pick = [&](const std::vector<std::string> &v) {
    return v[static_cast<std::size_t>(roll(0, static_cast<int>(v.size()) - 1))];
  };
  static const std::vector<std::string> kPieces = {
      "fever", "dry", " ", "\t", "\\", "#", "\xC3\xA9", "-", "regex:",
      "literal:", "shortness of breath", "\\b", "x", "\"", ","};
  static const std::vector<std::string> kRegexes = {
      "\\bfev(er)?\\b", "a\tb", "do not see(\\s+\\S+){1,3}", "#x", "[0-9]+",
      "caf\xC3\xA9", "\\\\t", "regex:literal"};
  auto phrase = [&] {
    std::string s;
    do {
      s.clear();
      for (int i = roll(1, 4); i > 0; --i) s += pick(kPieces);
    } while (NormalizeLiteral(utf8::Decode(s)).empty() ||
             Trim(s).size() != s.size());
    return s;
  };
  auto pattern = [&] {
    Pattern p;
    if (roll(0, 3) == 0) {
      p.kind = PatternKind::kRegex;
      p.body = pick(kRegexes);
    } else {
      p.body = phrase();
    }
    return p;
  };

  RulePackage pkg;
  pkg.name = "pkg_" + std::to_string(roll(0, 999));
  pkg.version = std::to_string(roll(0, 9)) + "." + std::to_string(roll(0, 9));
  std::vector<std::string> concepts;
  for (int i = roll(0, 5); i > 0; --i) {
    std::string c = "C" + std::to_string(roll(0, 30));
    if (roll(0, 1)) c += "_X";
    if (pkg.concepts.insert(c).second) concepts.push_back(c);
  }
  if (!concepts.empty()) {
    std::set<std::pair<std::u32string, std::string>> seen;
    for (int i = roll(0, 8); i > 0; --i) {
      DictionaryEntry e;
      e.term = phrase();
      e.concept_type = pick(concepts);
      if (!seen.insert({NormalizeLiteral(utf8::Decode(e.term)), e.concept_type})
               .second) {
        continue;
      }
      if (roll(0, 1)) e.source_code = "HP:" + std::to_string(roll(1000, 9999));
      if (roll(0, 1)) e.source_ontology = roll(0, 1) ? "HPO" : "a\tb#";
      pkg.dictionary.push_back(e);
    }
    for (const auto &c : concepts) {
      if (roll(0, 2) == 0) continue;
      ConceptRule rule;
      rule.concept_type = c;
      for (int i = roll(1, 4); i > 0; --i) rule.patterns.push_back(pattern());
      pkg.concept_rules.push_back(rule);
    }
  }
  for (int i = roll(0, 6); i > 0; --i) {
    ContextRule r;
    r.trigger = pattern();
    r.direction = static_cast<Direction>(roll(0, 2));
    r.modifier = static_cast<Modifier>(roll(0, 5));
    if (r.direction == Direction::kPseudo && r.modifier == Modifier::kTermin) {
      r.modifier = Modifier::kNeg;
    }
    r.priority = roll(1, 5);
    r.window_sentences = roll(1, 3);
    pkg.context_rules.push_back(r);
  }
  return pkg;
}

// A NOTE-shaped delimited file with `n` synthetic notes. Text mixes
// baseline symptom terms, context triggers, dates, quotes, commas, line
// breaks and non-ASCII characters so that quoting and offsets are exercised.
inline std::string SyntheticNotesCsv(std::mt19937_64 &rng, int n) {
  static const std::vector<std::string> kSentences = {
      "The patient had a dry cough and fever or chills yesterday.",
      "He is also experiencing new loss of taste today and three days ago.",
      "Denies shortness of breath, chest pain or \"palpitations\".",
      "Mother has headache; no nausea.",
      "Possible myalgia since 2021-02-10.",
      "Caf\xC3\xA9 visit: sore throat, r\xC3\xA9sum\xC3\xA9 reviewed.",
      "If vomiting develops, call.",
      "Fatigue but no diarrhea.",
      "Follow up in 2 weeks.\n\nPlan:",
      "Temp 38.5 on 2/14/2021, SOB improving.",
      "Complications include cyanosis.",
      "Loss of smell noted one week ago."};
  std::string out = "note_id,person_id,note_date,note_title,note_text\n";
  for (int i = 0; i < n; ++i) {
    std::string text;
    const int k = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int s = 0; s < k; ++s) {
      if (s > 0) text += " ";
      text += kSentences[rng() % kSentences.size()];
    }
    std::string quoted = "\"";
    for (char c : text) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += "\"";
    // Ids are shuffled so the sink order depends on sorting, not input.
    const long id = 1 + ((static_cast<long>(i) * 7919) % (n * 3 + 1));
    out += std::to_string(id) + "," + std::to_string(100 + i % 17) +
           ",2021-02-" + std::to_string(10 + i % 19) + ",Office Visit," +
           quoted + "\n";
  }
  return out;
}

}  // namespace cliniex::testing

#endif  // CLINIEX_TESTS_GENERATORS_H_
