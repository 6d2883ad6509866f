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

#include "cliniex/ruleset.h"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <map>

#include <nlohmann/json.hpp>

#include "cliniex/errors.h"
#include "cliniex/text.h"
#include "cliniex/utf8.h"

namespace cliniex {
namespace {

constexpr std::string_view kRegexPrefix = "regex:";
constexpr std::string_view kLiteralPrefix = "literal:";
constexpr char kManifest[] = "manifest.json";
constexpr char kDictionary[] = "dict.tsv";
constexpr char kContext[] = "context.tsv";
constexpr char kRulesDir[] = "rules/";

struct Line {
  int number;
  std::string text;
};

// Non-blank, non-comment lines with their 1-based line numbers.
std::vector<Line> ContentLines(std::string_view contents) {
  std::vector<Line> lines;
  int number = 0;
  for (auto &text : Split(contents, '\n')) {
    ++number;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (Trim(text).empty() || text.front() == '#') continue;
    lines.push_back(Line{number, std::move(text)});
  }
  return lines;
}

int ParsePositive(const std::string &field, const SourceLocation &where,
                  const char *what) {
  int value = 0;
  std::string_view f = Trim(field);
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
  if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
    throw ParseError(where.file, where.line,
                     std::string("bad ") + what + " '" + field + "'");
  }
  return value;
}

void CheckRegex(const Pattern &p, const std::string &rule) {
  if (p.kind != PatternKind::kRegex) return;
  try {
    std::regex re(p.body, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error &e) {
    throw PatternError(p.origin.file, p.origin.line,
                       "regex in " + rule + " does not compile: " + e.what());
  }
}

std::string RuleFileName(const std::string &concept_type) {
  return std::string(kRulesDir) + concept_type + ".txt";
}

// Accepts a zip of a single top-level folder by stripping that folder.
FileTree StripCommonRoot(const FileTree &files) {
  if (files.empty() || files.contains(kManifest)) return files;
  std::string root;
  for (const auto &[name, contents] : files) {
    if (name.ends_with(std::string("/") + kManifest) &&
        std::count(name.begin(), name.end(), '/') == 1) {
      root = name.substr(0, name.find('/') + 1);
    }
  }
  if (root.empty()) return files;
  FileTree stripped;
  for (const auto &[name, contents] : files) {
    if (StartsWith(name, root)) stripped[name.substr(root.size())] = contents;
  }
  return stripped;
}

std::vector<ConceptRule> SortedRules(std::vector<ConceptRule> rules) {
  std::stable_sort(rules.begin(), rules.end(),
                   [](const ConceptRule &a, const ConceptRule &b) {
                     return a.concept_type < b.concept_type;
                   });
  return rules;
}

}  // namespace

std::string SourceLocation::ToString() const {
  if (line > 0) return file + ":" + std::to_string(line);
  return file;
}

Pattern Pattern::FromField(std::string_view field) {
  if (StartsWith(field, kRegexPrefix)) {
    return Pattern{PatternKind::kRegex,
                   UnescapeField(field.substr(kRegexPrefix.size())), {}};
  }
  if (StartsWith(field, kLiteralPrefix)) {
    field.remove_prefix(kLiteralPrefix.size());
  }
  return Pattern{PatternKind::kLiteral, UnescapeField(field), {}};
}

std::string Pattern::ToField() const {
  if (kind == PatternKind::kRegex) {
    return std::string(kRegexPrefix) + EscapeField(body);
  }
  if (StartsWith(body, kRegexPrefix) || StartsWith(body, kLiteralPrefix)) {
    return std::string(kLiteralPrefix) + EscapeField(body);
  }
  return EscapeField(body);
}

std::string_view DirectionName(Direction d) {
  switch (d) {
    case Direction::kPre: return "pre";
    case Direction::kPost: return "post";
    case Direction::kPseudo: return "pseudo";
  }
  return "pre";
}

std::optional<Direction> ParseDirection(std::string_view s) {
  const std::string lower = ToLowerAscii(Trim(s));
  for (auto d : {Direction::kPre, Direction::kPost, Direction::kPseudo}) {
    if (lower == DirectionName(d)) return d;
  }
  return std::nullopt;
}

std::string_view ModifierName(Modifier m) {
  switch (m) {
    case Modifier::kNeg: return "neg";
    case Modifier::kPoss: return "poss";
    case Modifier::kHypo: return "hypo";
    case Modifier::kExpOther: return "exp_other";
    case Modifier::kTermin: return "termin";
    case Modifier::kHist: return "hist";
  }
  return "neg";
}

std::optional<Modifier> ParseModifier(std::string_view s) {
  const std::string lower = ToLowerAscii(Trim(s));
  for (auto m : {Modifier::kNeg, Modifier::kPoss, Modifier::kHypo,
                 Modifier::kExpOther, Modifier::kTermin, Modifier::kHist}) {
    if (lower == ModifierName(m)) return m;
  }
  return std::nullopt;
}

bool operator==(const RulePackage &a, const RulePackage &b) {
  return a.name == b.name && a.version == b.version &&
         a.concepts == b.concepts && a.dictionary == b.dictionary &&
         a.context_rules == b.context_rules &&
         SortedRules(a.concept_rules) == SortedRules(b.concept_rules);
}

bool IsValidConceptName(std::string_view name) {
  if (name.empty() || !(name[0] >= 'A' && name[0] <= 'Z')) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

RulePackage ParseRulePackage(const FileTree &input) {
  const FileTree files = StripCommonRoot(input);
  RulePackage package;

  if (auto it = files.find(kManifest); it != files.end()) {
    nlohmann::json manifest;
    try {
      manifest = nlohmann::json::parse(it->second);
      package.name = manifest.value("name", std::string());
      package.version = manifest.value("version", std::string());
      for (const auto &c : manifest.value("concepts", nlohmann::json::array())) {
        package.concepts.insert(c.get<std::string>());
      }
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(kManifest, 0, std::string("bad manifest: ") + e.what());
    }
  } else if (!files.empty()) {
    throw ParseError(kManifest, 0, "missing manifest.json");
  }

  if (auto it = files.find(kDictionary); it != files.end()) {
    for (const auto &line : ContentLines(it->second)) {
      const SourceLocation where{kDictionary, line.number};
      auto fields = Split(line.text, '\t');
      if (fields.size() < 2 || fields.size() > 4) {
        throw ParseError(where.file, where.line,
                         "expected 2-4 tab-separated fields, found " +
                             std::to_string(fields.size()));
      }
      DictionaryEntry entry;
      entry.term = UnescapeField(fields[0]);
      entry.concept_type = std::string(Trim(fields[1]));
      if (fields.size() > 2 && !fields[2].empty()) {
        entry.source_code = UnescapeField(fields[2]);
      }
      if (fields.size() > 3 && !fields[3].empty()) {
        entry.source_ontology = UnescapeField(fields[3]);
      }
      entry.origin = where;
      package.dictionary.push_back(std::move(entry));
    }
  }

  for (const auto &[name, contents] : files) {
    if (!StartsWith(name, kRulesDir) || !name.ends_with(".txt")) continue;
    ConceptRule rule;
    rule.concept_type =
        name.substr(sizeof(kRulesDir) - 1,
                    name.size() - (sizeof(kRulesDir) - 1) - 4);
    for (const auto &line : ContentLines(contents)) {
      Pattern p = Pattern::FromField(line.text);
      p.origin = SourceLocation{name, line.number};
      CheckRegex(p, name);
      rule.patterns.push_back(std::move(p));
    }
    package.concept_rules.push_back(std::move(rule));
  }

  if (auto it = files.find(kContext); it != files.end()) {
    for (const auto &line : ContentLines(it->second)) {
      const SourceLocation where{kContext, line.number};
      auto fields = Split(line.text, '\t');
      if (fields.size() != 5) {
        throw ParseError(where.file, where.line,
                         "expected 5 tab-separated fields, found " +
                             std::to_string(fields.size()));
      }
      ContextRule rule;
      rule.trigger = Pattern::FromField(fields[0]);
      rule.trigger.origin = where;
      CheckRegex(rule.trigger, kContext);
      auto direction = ParseDirection(fields[1]);
      if (!direction) {
        throw VocabularyError(where.file, where.line,
                              "unknown direction '" + fields[1] + "'");
      }
      auto modifier = ParseModifier(fields[2]);
      if (!modifier) {
        throw VocabularyError(where.file, where.line,
                              "unknown modifier '" + fields[2] + "'");
      }
      rule.direction = *direction;
      rule.modifier = *modifier;
      rule.priority = ParsePositive(fields[3], where, "priority");
      rule.window_sentences = ParsePositive(fields[4], where, "window");
      rule.origin = where;
      package.context_rules.push_back(std::move(rule));
    }
  }
  return package;
}

RulePackage ParseRulePackageArchive(std::string_view zip_bytes) {
  return ParseRulePackage(archive::ReadZip(zip_bytes));
}

RulePackage LoadRulePackage(const std::string &path) {
  if (std::filesystem::is_directory(path)) {
    return ParseRulePackage(archive::ReadDirectory(path));
  }
  return ParseRulePackageArchive(ReadFile(path));
}

FileTree SerializeRulePackage(const RulePackage &package) {
  FileTree files;
  nlohmann::json manifest{
      {"name", package.name},
      {"version", package.version},
      {"concepts", package.concepts},
  };
  files[kManifest] = manifest.dump(2) + "\n";

  if (!package.dictionary.empty()) {
    std::string dict;
    for (const auto &e : package.dictionary) {
      dict += EscapeField(e.term) + "\t" + e.concept_type;
      if (e.source_code || e.source_ontology) {
        dict += "\t" + EscapeField(e.source_code.value_or(""));
      }
      if (e.source_ontology) dict += "\t" + EscapeField(*e.source_ontology);
      dict += "\n";
    }
    files[kDictionary] = std::move(dict);
  }

  for (const auto &rule : package.concept_rules) {
    std::string &out = files[RuleFileName(rule.concept_type)];
    for (const auto &p : rule.patterns) out += p.ToField() + "\n";
  }

  if (!package.context_rules.empty()) {
    std::string context;
    for (const auto &r : package.context_rules) {
      context += r.trigger.ToField();
      context += "\t";
      context += DirectionName(r.direction);
      context += "\t";
      context += ModifierName(r.modifier);
      context += "\t" + std::to_string(r.priority) + "\t" +
                 std::to_string(r.window_sentences) + "\n";
    }
    files[kContext] = std::move(context);
  }
  return files;
}

std::string SerializeRulePackageArchive(const RulePackage &package) {
  return archive::WriteZip(SerializeRulePackage(package));
}

void SaveRulePackage(const RulePackage &package, const std::string &dir) {
  archive::WriteDirectory(SerializeRulePackage(package), dir);
}

std::u32string NormalizeLiteral(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t c : text) {
    if (utf8::IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(utf8::FoldCase(c));
  }
  return out;
}

ValidationReport ValidateRulePackage(const RulePackage &package) {
  ValidationReport report;
  auto violation = [&report](const std::string &where, const std::string &what) {
    report.violations.push_back(where.empty() ? what : where + ": " + what);
  };

  for (const auto &c : package.concepts) {
    if (!IsValidConceptName(c)) {
      violation("manifest.json", "concept name '" + c +
                                     "' must be uppercase letters, digits "
                                     "and underscores");
    }
  }

  auto check_pattern = [&](const Pattern &p, const std::string &where) {
    if (p.kind == PatternKind::kLiteral) {
      if (NormalizeLiteral(utf8::Decode(p.body)).empty()) {
        violation(where, "empty literal pattern");
      }
      return;
    }
    if (p.body.empty()) {
      violation(where, "empty regex pattern");
      return;
    }
    try {
      std::regex re(p.body, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error &e) {
      violation(where, std::string("regex does not compile: ") + e.what());
    }
  };

  std::map<std::pair<std::u32string, std::string>, std::size_t> seen_terms;
  for (std::size_t i = 0; i < package.dictionary.size(); ++i) {
    const auto &e = package.dictionary[i];
    const std::string where = e.origin.file.empty()
                                  ? "dictionary entry " + std::to_string(i + 1)
                                  : e.origin.ToString();
    const std::u32string term = NormalizeLiteral(utf8::Decode(e.term));
    if (term.empty()) violation(where, "empty term");
    if (e.concept_type.empty()) {
      violation(where, "empty concept");
    } else if (!package.concepts.contains(e.concept_type)) {
      violation(where, "concept " + e.concept_type + " not declared");
    }
    if (e.source_code && e.source_code->empty()) {
      violation(where, "empty source_code");
    }
    if (e.source_ontology && e.source_ontology->empty()) {
      violation(where, "empty source_ontology");
    }
    auto [it, inserted] = seen_terms.emplace(std::pair{term, e.concept_type}, i);
    if (!inserted && !term.empty()) {
      report.warnings.push_back(where + ": duplicate term '" + e.term +
                                "' for " + e.concept_type);
    }
  }

  std::set<std::string> ruled;
  for (const auto &rule : package.concept_rules) {
    const std::string file = RuleFileName(rule.concept_type);
    if (!package.concepts.contains(rule.concept_type)) {
      violation(file, "concept " + rule.concept_type + " not declared");
    }
    if (!ruled.insert(rule.concept_type).second) {
      violation(file, "more than one rule for concept " + rule.concept_type);
    }
    if (rule.patterns.empty()) violation(file, "rule has no patterns");
    for (std::size_t i = 0; i < rule.patterns.size(); ++i) {
      const auto &p = rule.patterns[i];
      check_pattern(p, p.origin.file.empty()
                           ? file + " pattern " + std::to_string(i + 1)
                           : p.origin.ToString());
    }
  }

  for (std::size_t i = 0; i < package.context_rules.size(); ++i) {
    const auto &r = package.context_rules[i];
    const std::string where = r.origin.file.empty()
                                  ? "context rule " + std::to_string(i + 1)
                                  : r.origin.ToString();
    check_pattern(r.trigger, where);
    if (r.priority < 1) violation(where, "priority must be >= 1");
    if (r.window_sentences < 1) violation(where, "window must be >= 1");
    if (r.direction == Direction::kPseudo && r.modifier == Modifier::kTermin) {
      violation(where, "pseudo rule must name the modifier it neutralizes");
    }
  }
  return report;
}

const std::vector<std::string> &BuiltinTerminators() {
  static const std::vector<std::string> kTerminators = {"but", "however", ";"};
  return kTerminators;
}

std::shared_ptr<const CompiledMatchers> CompileRulePackage(
    const RulePackage &package) {
  auto compiled = std::make_shared<CompiledMatchers>();
  compiled->name_ = package.name;
  compiled->version_ = package.version;
  compiled->concepts_ = package.concepts;
  constexpr auto kFlags =
      std::regex::ECMAScript | std::regex::icase | std::regex::optimize;

  auto compile_regex = [&](const Pattern &p, const std::string &rule) {
    try {
      return std::regex(p.body, kFlags);
    } catch (const std::regex_error &e) {
      const std::string where =
          p.origin.file.empty() ? rule : p.origin.ToString();
      throw PatternError(p.origin.file.empty() ? rule : p.origin.file,
                         p.origin.line,
                         "regex in " + where + " does not compile: " + e.what());
    }
  };

  int order = 0;
  for (const auto &rule : SortedRules(package.concept_rules)) {
    for (std::size_t i = 0; i < rule.patterns.size(); ++i) {
      const Pattern &p = rule.patterns[i];
      std::string rule_id = rule.concept_type + ":" + std::to_string(i + 1);
      if (p.kind == PatternKind::kRegex) {
        compiled->regexes_.push_back(
            {compile_regex(p, RuleFileName(rule.concept_type)),
             rule.concept_type, std::move(rule_id), order++});
      } else {
        compiled->literals_.Add(NormalizeLiteral(utf8::Decode(p.body)),
                                static_cast<int>(compiled->literal_targets_.size()));
        compiled->literal_targets_.push_back(
            {rule.concept_type, std::move(rule_id), order++});
      }
    }
  }
  for (std::size_t i = 0; i < package.dictionary.size(); ++i) {
    const auto &e = package.dictionary[i];
    compiled->literals_.Add(NormalizeLiteral(utf8::Decode(e.term)),
                            static_cast<int>(compiled->literal_targets_.size()));
    compiled->literal_targets_.push_back(
        {e.concept_type, "dict:" + std::to_string(i + 1), order++});
  }
  compiled->literals_.Build();

  compiled->context_rules_ = package.context_rules;
  for (const auto &term : BuiltinTerminators()) {
    ContextRule r;
    r.trigger = Pattern{PatternKind::kLiteral, term, {"builtin", 0}};
    r.modifier = Modifier::kTermin;
    compiled->context_rules_.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < compiled->context_rules_.size(); ++i) {
    const auto &r = compiled->context_rules_[i];
    if (r.trigger.kind == PatternKind::kRegex) {
      compiled->trigger_regexes_.push_back(
          {compile_regex(r.trigger, kContext), static_cast<int>(i)});
    } else {
      compiled->trigger_literals_.Add(
          NormalizeLiteral(utf8::Decode(r.trigger.body)), static_cast<int>(i));
    }
  }
  compiled->trigger_literals_.Build();
  return compiled;
}

}  // namespace cliniex
