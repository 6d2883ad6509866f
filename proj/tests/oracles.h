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

// Reference implementations used by the property and acceptance tests.
// They are deliberately naive and share no code with the library beyond
// the value types.

#ifndef CLINIEX_TESTS_ORACLES_H_
#define CLINIEX_TESTS_ORACLES_H_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "cliniex/model.h"
#include "cliniex/ruleset.h"

namespace cliniex::testing {

// ---------------------------------------------------------------------------
// Literal matching.

// A minimal UTF-8 decoder good enough for the generated test alphabet.
inline std::u32string OracleDecode(const std::string &s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    if (b < 0x80) {
      out.push_back(b);
      i += 1;
    } else if ((b >> 5) == 0x6) {
      out.push_back(((b & 0x1F) << 6) | (s[i + 1] & 0x3F));
      i += 2;
    } else if ((b >> 4) == 0xE) {
      out.push_back(((b & 0x0F) << 12) | ((s[i + 1] & 0x3F) << 6) |
                    (s[i + 2] & 0x3F));
      i += 3;
    } else {
      out.push_back(((b & 0x07) << 18) | ((s[i + 1] & 0x3F) << 12) |
                    ((s[i + 2] & 0x3F) << 6) | (s[i + 3] & 0x3F));
      i += 4;
    }
  }
  return out;
}

inline bool OracleSpace(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

inline bool OracleWord(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == U'é' || c == U'É' || c == U'ü';
}

inline char32_t OracleFold(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c == U'É') return U'é';
  return c;
}

// Folds case, turns whitespace runs into one space, trims.
inline std::u32string OracleNormalize(std::u32string_view s) {
  std::u32string out;
  bool gap = false;
  for (char32_t c : s) {
    if (OracleSpace(c)) {
      gap = true;
      continue;
    }
    if (gap && !out.empty()) out.push_back(' ');
    gap = false;
    out.push_back(OracleFold(c));
  }
  return out;
}

struct OracleLiteral {
  std::string body;
  std::string concept_type;
  std::string rule_id;
  int order;
};

// Every token-aligned substring whose normalized form equals a pattern's,
// then same-concept overlaps reduced by repeatedly taking the longest
// (leftmost, earliest pattern) remaining candidate.
inline std::vector<ConceptMention> BruteForceMatch(
    const std::string &text, const std::vector<OracleLiteral> &patterns) {
  const std::u32string chars = OracleDecode(text);
  const std::size_t n = chars.size();
  auto starts_token = [&](std::size_t i) {
    if (OracleSpace(chars[i])) return false;
    if (!OracleWord(chars[i])) return true;
    return i == 0 || !OracleWord(chars[i - 1]);
  };
  auto ends_token = [&](std::size_t j) {
    if (OracleSpace(chars[j - 1])) return false;
    if (!OracleWord(chars[j - 1])) return true;
    return j == n || !OracleWord(chars[j]);
  };

  struct Cand {
    std::size_t start, end;
    int order;
    std::string concept_type, rule_id;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < n; ++i) {
    if (!starts_token(i)) continue;
    for (std::size_t j = i + 1; j <= n; ++j) {
      if (!ends_token(j)) continue;
      const std::u32string norm =
          OracleNormalize(std::u32string_view(chars).substr(i, j - i));
      for (const auto &p : patterns) {
        if (OracleNormalize(OracleDecode(p.body)) == norm) {
          cands.push_back({i, j, p.order, p.concept_type, p.rule_id});
        }
      }
    }
  }

  std::vector<Cand> chosen;
  std::vector<bool> used(cands.size(), false);
  while (true) {
    int best = -1;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      if (used[k]) continue;
      const Cand &c = cands[k];
      bool clash = false;
      for (const auto &s : chosen) {
        if (s.concept_type == c.concept_type && c.start < s.end &&
            s.start < c.end) {
          clash = true;
        }
      }
      if (clash) {
        used[k] = true;
        continue;
      }
      if (best < 0) {
        best = static_cast<int>(k);
        continue;
      }
      const Cand &b = cands[static_cast<std::size_t>(best)];
      const auto key = [](const Cand &x) {
        return std::make_tuple(-static_cast<long>(x.end - x.start), x.start,
                               x.order);
      };
      if (key(c) < key(b)) best = static_cast<int>(k);
    }
    if (best < 0) break;
    used[static_cast<std::size_t>(best)] = true;
    chosen.push_back(cands[static_cast<std::size_t>(best)]);
  }

  std::vector<ConceptMention> out;
  std::vector<std::size_t> byte_at(n + 1, 0);
  {
    std::size_t b = 0, k = 0;
    while (k < n) {
      byte_at[k] = b;
      const auto lead = static_cast<unsigned char>(text[b]);
      b += lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3 : 4;
      ++k;
    }
    byte_at[n] = text.size();
  }
  for (const auto &c : chosen) {
    ConceptMention m{Span(c.start, c.end), c.concept_type,
                     Certainty::kPositive,
                     text.substr(byte_at[c.start], byte_at[c.end] - byte_at[c.start]),
                     Experiencer::kPatient, std::nullopt, c.rule_id};
    out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
    return std::tie(a.span, a.concept_type) < std::tie(b.span, b.concept_type);
  });
  return out;
}

// Random (document, literal package) instance over a small alphabet so that
// matches, overlaps and case/whitespace variants are common.
struct MatcherInstance {
  std::string text;
  RulePackage package;
  std::vector<OracleLiteral> literals;
};

inline MatcherInstance RandomMatcherInstance(std::mt19937_64 &rng) {
  static const std::vector<std::string> kWords = {
      "a", "ab", "b", "ba", "A", "Ab", "é", "É", "ü", "a1", ",", ".", "-"};
  static const std::vector<std::string> kGaps = {" ", " ", "", "  ", "\n",
                                                 "\t "};
  static const std::vector<std::string> kConcepts = {"C_ONE", "C_TWO",
                                                     "C_THREE"};
  auto pick = [&](const auto &v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  MatcherInstance inst;
  const int doc_words = std::uniform_int_distribution<int>(0, 60)(rng);
  for (int i = 0; i < doc_words; ++i) {
    std::string next = pick(kWords) + pick(kGaps);
    if (OracleDecode(inst.text + next).size() > 200) break;
    inst.text += next;
  }

  inst.package.name = "random";
  inst.package.version = "1";
  const int n_patterns = std::uniform_int_distribution<int>(1, 5)(rng);
  std::map<std::string, ConceptRule> rules;
  for (int i = 0; i < n_patterns; ++i) {
    std::string body;
    const int words = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int w = 0; w < words; ++w) {
      if (w > 0) body += std::uniform_int_distribution<int>(0, 3)(rng) ? " " : "  ";
      body += pick(kWords);
    }
    const std::string concept_type = pick(kConcepts);
    inst.package.concepts.insert(concept_type);
    if (std::uniform_int_distribution<int>(0, 1)(rng)) {
      DictionaryEntry e;
      e.term = body;
      e.concept_type = concept_type;
      inst.package.dictionary.push_back(e);
    } else {
      auto &rule = rules[concept_type];
      rule.concept_type = concept_type;
      Pattern p;
      p.body = body;
      rule.patterns.push_back(p);
    }
  }
  // Ids and orders as documented: rule patterns first, in rule order, then
  // dictionary entries.
  int order = 0;
  for (auto &[c, rule] : rules) {
    for (std::size_t k = 0; k < rule.patterns.size(); ++k) {
      inst.literals.push_back({rule.patterns[k].body, c,
                               c + ":" + std::to_string(k + 1), order++});
    }
    inst.package.concept_rules.push_back(rule);
  }
  for (std::size_t k = 0; k < inst.package.dictionary.size(); ++k) {
    const auto &e = inst.package.dictionary[k];
    inst.literals.push_back(
        {e.term, e.concept_type, "dict:" + std::to_string(k + 1), order++});
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Metrics.

struct PlantedMention {
  std::string doc_id;
  std::size_t start, end;
  std::string concept_type;
  Certainty certainty;
};

struct PlantedCorpus {
  std::vector<PlantedMention> gold;
  std::vector<PlantedMention> system;
  // Expected counts, known by construction.
  int span_tp = 0, span_fp = 0, span_fn = 0;
  int cert_tp = 0, cert_fp = 0, cert_fn = 0;
  std::map<std::string, std::tuple<int, int, int>> span_per_concept;
};

// Builds a corpus where each gold mention is isolated in its own slot of
// the document, so the outcome of every slot is known without running any
// pairing algorithm.
inline PlantedCorpus PlantCorpus(std::mt19937_64 &rng, int notes) {
  static const std::vector<std::string> kConcepts = {"FEVER", "DRY_COUGH",
                                                     "CHILL", "NAUSEA"};
  static const std::vector<Certainty> kCert = {
      Certainty::kPositive, Certainty::kNegated, Certainty::kHypothetical,
      Certainty::kPossible};
  auto roll = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  PlantedCorpus c;
  auto tally = [&](const std::string &concept_type, int tp, int fp, int fn) {
    auto &t = c.span_per_concept[concept_type];
    std::get<0>(t) += tp;
    std::get<1>(t) += fp;
    std::get<2>(t) += fn;
  };
  for (int d = 0; d < notes; ++d) {
    const std::string doc = "note" + std::to_string(d);
    const int slots = 3 + roll(8);
    for (int s = 0; s < slots; ++s) {
      const std::size_t base = static_cast<std::size_t>(s) * 100;
      const std::string concept_type = kConcepts[static_cast<std::size_t>(roll(4))];
      const Certainty cert = kCert[static_cast<std::size_t>(roll(4))];
      const PlantedMention g{doc, base + 10, base + 20, concept_type, cert};
      switch (roll(5)) {
        case 0: {  // exact hit, maybe wrong certainty
          PlantedMention m = g;
          if (roll(2)) m.certainty = kCert[static_cast<std::size_t>(roll(4))];
          c.gold.push_back(g);
          c.system.push_back(m);
          c.span_tp++;
          tally(concept_type, 1, 0, 0);
          if (m.certainty == g.certainty) {
            c.cert_tp++;
          } else {
            c.cert_fp++;
            c.cert_fn++;
          }
          break;
        }
        case 1: {  // shifted partial overlap, same certainty
          PlantedMention m = g;
          m.start = base + 15;
          m.end = base + 30;
          c.gold.push_back(g);
          c.system.push_back(m);
          c.span_tp++;
          c.cert_tp++;
          tally(concept_type, 1, 0, 0);
          break;
        }
        case 2: {  // miss
          c.gold.push_back(g);
          c.span_fn++;
          c.cert_fn++;
          tally(concept_type, 0, 0, 1);
          break;
        }
        case 3: {  // spurious system mention
          PlantedMention m = g;
          c.system.push_back(m);
          c.span_fp++;
          c.cert_fp++;
          tally(concept_type, 0, 1, 0);
          break;
        }
        default: {  // overlapping but different concept
          PlantedMention m = g;
          m.concept_type = kConcepts[(static_cast<std::size_t>(roll(3)) + 1 +
                                      static_cast<std::size_t>(std::find(kConcepts.begin(), kConcepts.end(), concept_type) - kConcepts.begin())) % 4];
          c.gold.push_back(g);
          c.system.push_back(m);
          c.span_fn++;
          c.span_fp++;
          c.cert_fn++;
          c.cert_fp++;
          tally(concept_type, 0, 0, 1);
          tally(m.concept_type, 0, 1, 0);
          break;
        }
      }
    }
  }
  return c;
}

// Maximum bipartite matching size by augmenting paths.
inline int MaxBipartite(const std::vector<std::vector<bool>> &edge) {
  const std::size_t g = edge.size();
  const std::size_t s = g ? edge[0].size() : 0;
  std::vector<int> owner(s, -1);
  int total = 0;
  for (std::size_t i = 0; i < g; ++i) {
    std::vector<bool> seen(s, false);
    std::function<bool(std::size_t)> augment = [&](std::size_t u) {
      for (std::size_t v = 0; v < s; ++v) {
        if (!edge[u][v] || seen[v]) continue;
        seen[v] = true;
        if (owner[v] < 0 || augment(static_cast<std::size_t>(owner[v]))) {
          owner[v] = static_cast<int>(u);
          return true;
        }
      }
      return false;
    };
    if (augment(i)) ++total;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Context placements.

struct ExpectedLabel {
  Span span;
  Certainty certainty;
  Experiencer experiencer;
};

struct ContextCase {
  std::string text;
  RulePackage package;
  std::vector<ExpectedLabel> expected;
};

inline Certainty OracleCertainty(Modifier m) {
  switch (m) {
    case Modifier::kNeg: return Certainty::kNegated;
    case Modifier::kPoss: return Certainty::kPossible;
    case Modifier::kHypo: return Certainty::kHypothetical;
    default: return Certainty::kPositive;
  }
}

inline RulePackage FeverPackage() {
  RulePackage p;
  p.name = "placement";
  p.version = "1";
  p.concepts = {"FEVER"};
  p.concept_rules.push_back(
      {"FEVER", {Pattern{PatternKind::kLiteral, "fever", {}}}});
  return p;
}

// Several sentences, one single-sentence trigger, several "fever" mentions.
// Only mentions in the trigger's sentence on the trigger's side may change.
inline ContextCase ScopeLocalityCase(std::mt19937_64 &rng) {
  static const std::vector<std::string> kFiller = {
      "patient", "reports", "mild", "the", "on", "exam", "since", "had"};
  static const std::vector<Modifier> kModifiers = {
      Modifier::kNeg, Modifier::kPoss, Modifier::kHypo, Modifier::kExpOther};
  auto roll = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  ContextCase c;
  c.package = FeverPackage();
  ContextRule rule;
  rule.trigger = Pattern{PatternKind::kLiteral, "zorblat", {}};
  rule.direction = roll(0, 1) ? Direction::kPre : Direction::kPost;
  rule.modifier = kModifiers[static_cast<std::size_t>(roll(0, 3))];
  rule.priority = roll(1, 3);
  rule.window_sentences = 1;
  c.package.context_rules.push_back(rule);

  const int sentences = roll(2, 5);
  const int trigger_sentence = roll(0, sentences - 1);
  struct Placed {
    std::size_t start;
    int sentence;
  };
  std::vector<Placed> fevers;
  std::size_t trigger_start = 0;
  for (int s = 0; s < sentences; ++s) {
    const int words = roll(2, 8);
    const int trigger_at = s == trigger_sentence ? roll(0, words - 1) : -1;
    for (int w = 0; w < words; ++w) {
      std::string word;
      if (w == trigger_at) {
        trigger_start = c.text.size();
        word = "zorblat";
      } else if (roll(0, 3) == 0) {
        fevers.push_back({c.text.size(), s});
        word = "fever";
      } else {
        word = kFiller[static_cast<std::size_t>(roll(0, 7))];
      }
      if (w == 0) word[0] = static_cast<char>(word[0] - 32);
      c.text += word;
      c.text += w + 1 == words ? ". " : " ";
    }
  }
  const std::size_t trigger_end = trigger_start + 7;
  for (const auto &f : fevers) {
    ExpectedLabel e{Span(f.start, f.start + 5), Certainty::kPositive,
                    Experiencer::kPatient};
    const bool in_scope =
        f.sentence == trigger_sentence &&
        (rule.direction == Direction::kPre ? f.start >= trigger_end
                                           : f.start + 5 <= trigger_start);
    if (in_scope) {
      if (rule.modifier == Modifier::kExpOther) {
        e.experiencer = Experiencer::kOther;
      } else {
        e.certainty = OracleCertainty(rule.modifier);
      }
    }
    c.expected.push_back(e);
  }
  return c;
}

// One mention claimed by a pre trigger on its left and a post trigger on
// its right with different certainty modifiers. The winner follows
// priority, then distance, then declaration order.
inline ContextCase PriorityTieCase(std::mt19937_64 &rng) {
  static const std::vector<std::string> kFiller = {"mild", "some", "recent",
                                                   "on", "x"};
  static const std::vector<Modifier> kModifiers = {
      Modifier::kNeg, Modifier::kPoss, Modifier::kHypo};
  auto roll = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto filler = [&](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) {
      s += kFiller[static_cast<std::size_t>(roll(0, 4))] + " ";
    }
    return s;
  };

  ContextCase c;
  c.package = FeverPackage();
  ContextRule pre, post;
  pre.trigger = Pattern{PatternKind::kLiteral, "zorblat", {}};
  pre.direction = Direction::kPre;
  post.trigger = Pattern{PatternKind::kLiteral, "quibble", {}};
  post.direction = Direction::kPost;
  const int a = roll(0, 2);
  const int b = (a + roll(1, 2)) % 3;
  pre.modifier = kModifiers[static_cast<std::size_t>(a)];
  post.modifier = kModifiers[static_cast<std::size_t>(b)];
  // Ties are frequent on purpose.
  pre.priority = roll(1, 2);
  post.priority = roll(1, 2);
  const bool pre_first = roll(0, 1);
  if (pre_first) {
    c.package.context_rules = {pre, post};
  } else {
    c.package.context_rules = {post, pre};
  }

  c.text = "Patient " + filler(roll(0, 2)) + "zorblat ";
  const std::size_t pre_end = c.text.size() - 1;
  c.text += filler(roll(0, 3));
  const std::size_t start = c.text.size();
  c.text += "fever ";
  c.text += filler(roll(0, 3));
  const std::size_t post_start = c.text.size();
  c.text += "quibble " + filler(roll(0, 2)) + "today.";

  const std::size_t d_pre = start - pre_end;
  const std::size_t d_post = post_start - (start + 5);
  bool pre_wins;
  if (pre.priority != post.priority) {
    pre_wins = pre.priority > post.priority;
  } else if (d_pre != d_post) {
    pre_wins = d_pre < d_post;
  } else {
    pre_wins = pre_first;
  }
  c.expected.push_back({Span(start, start + 5),
                        OracleCertainty(pre_wins ? pre.modifier : post.modifier),
                        Experiencer::kPatient});
  return c;
}

}  // namespace cliniex::testing

#endif  // CLINIEX_TESTS_ORACLES_H_
