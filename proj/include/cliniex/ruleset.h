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

// Rule packages: dictionary terms, per-concept patterns and context rules.
//
// On disk a package is a directory (or a zip of one):
//
//   manifest.json      {"name": ..., "version": ..., "concepts": [...]}
//   dict.tsv           term, concept[, source_code[, source_ontology]]
//   rules/<CONCEPT>.txt  one pattern per line, '#' starts a comment line
//   context.tsv        trigger, direction, modifier, priority, window
//
// Patterns prefixed with "regex:" are regular expressions (ECMAScript,
// case-insensitive); everything else is a literal phrase. A "literal:"
// prefix forces a literal. Fields use backslash escapes for tab, CR, LF,
// backslash and a leading '#'.

#ifndef CLINIEX_RULESET_H_
#define CLINIEX_RULESET_H_

#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cliniex/aho_corasick.h"
#include "cliniex/archive.h"

namespace cliniex {

// Where a rule came from. Not part of rule equality.
struct SourceLocation {
  std::string file;
  int line = 0;

  std::string ToString() const;
};

enum class PatternKind { kLiteral, kRegex };

struct Pattern {
  PatternKind kind = PatternKind::kLiteral;
  std::string body;
  SourceLocation origin;

  // Applies the "regex:" / "literal:" prefix convention to an unescaped
  // field.
  static Pattern FromField(std::string_view field);
  // Inverse of FromField, escaped for writing into a line-oriented file.
  std::string ToField() const;

  friend bool operator==(const Pattern &a, const Pattern &b) {
    return a.kind == b.kind && a.body == b.body;
  }
};

struct DictionaryEntry {
  std::string term;
  std::string concept_type;
  std::optional<std::string> source_code;
  std::optional<std::string> source_ontology;
  SourceLocation origin;

  friend bool operator==(const DictionaryEntry &a, const DictionaryEntry &b) {
    return a.term == b.term && a.concept_type == b.concept_type &&
           a.source_code == b.source_code &&
           a.source_ontology == b.source_ontology;
  }
};

struct ConceptRule {
  std::string concept_type;
  std::vector<Pattern> patterns;

  friend bool operator==(const ConceptRule &, const ConceptRule &) = default;
};

enum class Direction { kPre, kPost, kPseudo };
// Hist is accepted in files but has no effect on annotation.
enum class Modifier { kNeg, kPoss, kHypo, kExpOther, kTermin, kHist };

std::string_view DirectionName(Direction d);
std::optional<Direction> ParseDirection(std::string_view s);
std::string_view ModifierName(Modifier m);
std::optional<Modifier> ParseModifier(std::string_view s);

struct ContextRule {
  Pattern trigger;
  Direction direction = Direction::kPre;
  Modifier modifier = Modifier::kNeg;
  // Higher wins when several rules claim one mention.
  int priority = 1;
  // 1 = the trigger's own sentence only.
  int window_sentences = 1;
  SourceLocation origin;

  friend bool operator==(const ContextRule &a, const ContextRule &b) {
    return a.trigger == b.trigger && a.direction == b.direction &&
           a.modifier == b.modifier && a.priority == b.priority &&
           a.window_sentences == b.window_sentences;
  }
};

struct RulePackage {
  std::string name;
  std::string version;
  std::set<std::string> concepts;
  std::vector<DictionaryEntry> dictionary;
  // One rule per concept; order is not significant.
  std::vector<ConceptRule> concept_rules;
  std::vector<ContextRule> context_rules;

  friend bool operator==(const RulePackage &a, const RulePackage &b);
};

// Concept identifiers are uppercase letters, digits and underscores,
// starting with a letter.
bool IsValidConceptName(std::string_view name);

// Throws ParseError (with file and line), PatternError for regexes that do
// not compile, VocabularyError for unknown direction/modifier tokens.
RulePackage ParseRulePackage(const FileTree &files);
// Zip bytes or a path; paths may name a directory or a .zip file.
RulePackage ParseRulePackageArchive(std::string_view zip_bytes);
RulePackage LoadRulePackage(const std::string &path);

FileTree SerializeRulePackage(const RulePackage &package);
std::string SerializeRulePackageArchive(const RulePackage &package);
void SaveRulePackage(const RulePackage &package, const std::string &dir);

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

ValidationReport ValidateRulePackage(const RulePackage &package);

// Case-folded, whitespace-collapsed, trimmed form used for literal
// matching.
std::u32string NormalizeLiteral(std::u32string_view text);

// Immutable matching artifact built from a package. Safe to share between
// threads.
class CompiledMatchers {
 public:
  struct LiteralTarget {
    std::string concept_type;
    std::string rule_id;
    // Lower wins when several patterns yield the same span and concept.
    int order;
  };

  struct RegexTarget {
    std::regex regex;
    std::string concept_type;
    std::string rule_id;
    int order;
  };

  struct TriggerRegex {
    std::regex regex;
    int rule;
  };

  const std::string &name() const { return name_; }
  const std::string &version() const { return version_; }
  const std::set<std::string> &concepts() const { return concepts_; }

  const AhoCorasick &literals() const { return literals_; }
  const std::vector<LiteralTarget> &literal_targets() const {
    return literal_targets_;
  }
  const std::vector<RegexTarget> &regexes() const { return regexes_; }

  // Package context rules followed by the built-in terminators.
  const std::vector<ContextRule> &context_rules() const {
    return context_rules_;
  }
  // Values are indices into context_rules().
  const AhoCorasick &trigger_literals() const { return trigger_literals_; }
  const std::vector<TriggerRegex> &trigger_regexes() const {
    return trigger_regexes_;
  }

 private:
  friend std::shared_ptr<const CompiledMatchers> CompileRulePackage(
      const RulePackage &);

  std::string name_;
  std::string version_;
  std::set<std::string> concepts_;
  AhoCorasick literals_;
  std::vector<LiteralTarget> literal_targets_;
  std::vector<RegexTarget> regexes_;
  std::vector<ContextRule> context_rules_;
  AhoCorasick trigger_literals_;
  std::vector<TriggerRegex> trigger_regexes_;
};

// Scope terminators every compiled package carries in addition to its own
// termin rules.
const std::vector<std::string> &BuiltinTerminators();

// Throws PatternError naming the rule when a regex does not compile.
std::shared_ptr<const CompiledMatchers> CompileRulePackage(
    const RulePackage &package);

}  // namespace cliniex

#endif  // CLINIEX_RULESET_H_
