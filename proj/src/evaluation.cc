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

#include "cliniex/evaluation.h"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "cliniex/backbone.h"
#include "cliniex/errors.h"
#include "cliniex/utf8.h"

namespace cliniex {

namespace fs = std::filesystem;

namespace {

std::optional<std::int64_t> ToInt(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

std::vector<std::string> SplitSpaces(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string Capitalized(std::string_view s) {
  std::string out(s);
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] -= 32;
  return out;
}

std::string Flatten(std::string s) {
  for (char &c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

std::vector<GoldAnnotation> ParseBratAnnotations(const std::string &doc_id,
                                                 std::string_view text,
                                                 std::string_view ann,
                                                 const std::string &file_name,
                                                 const std::string &annotator) {
  const std::size_t length = utf8::Length(text);
  std::vector<GoldAnnotation> out;
  std::map<std::string, std::size_t> by_id;
  struct Attribute {
    int line;
    std::string target;
    std::string value;
  };
  std::vector<Attribute> attributes;

  int number = 0;
  for (auto &line : Split(ann, '\n')) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    const char kind = line[0];
    auto fields = Split(line, '\t');
    if (kind == 'T') {
      if (fields.size() < 3) {
        throw ParseError(file_name, number, "expected id, type/offsets and text");
      }
      if (fields[1].find(';') != std::string::npos) {
        throw ParseError(file_name, number, "discontinuous spans are not supported");
      }
      auto parts = SplitSpaces(fields[1]);
      if (parts.size() != 3) {
        throw ParseError(file_name, number, "expected '<type> <start> <end>'");
      }
      auto start = ToInt(parts[1]);
      auto end = ToInt(parts[2]);
      if (!start || !end || *start < 0 || *end <= *start) {
        throw ParseError(file_name, number, "bad offsets '" + fields[1] + "'");
      }
      if (static_cast<std::size_t>(*end) > length) {
        throw IntegrityError(
            file_name, number,
            fmt::format("{}: span [{},{}) exceeds document length {}", doc_id,
                        *start, *end, length));
      }
      const Span span(static_cast<std::size_t>(*start),
                      static_cast<std::size_t>(*end));
      std::string quoted = fields[2];
      for (std::size_t k = 3; k < fields.size(); ++k) quoted += "\t" + fields[k];
      const std::string slice = utf8::Slice(text, span.start(), span.end());
      if (Flatten(slice) != Flatten(quoted)) {
        throw IntegrityError(file_name, number,
                             doc_id + ": text '" + quoted +
                                 "' does not match document text '" + slice +
                                 "'");
      }
      if (!by_id.emplace(fields[0], out.size()).second) {
        throw ParseError(file_name, number, "duplicate id " + fields[0]);
      }
      out.push_back({doc_id, span, parts[0], Certainty::kPositive, annotator});
    } else if (kind == 'A' || kind == 'M') {
      if (fields.size() < 2) throw ParseError(file_name, number, "malformed attribute");
      auto parts = SplitSpaces(fields[1]);
      if (parts.size() < 2) throw ParseError(file_name, number, "malformed attribute");
      if (ToLowerAscii(parts[0]) != "certainty") continue;
      if (parts.size() != 3) {
        throw ParseError(file_name, number, "certainty attribute needs a value");
      }
      attributes.push_back({number, parts[1], parts[2]});
    } else if (kind == '#' || kind == 'R' || kind == 'E' || kind == 'N' ||
               kind == '*') {
      continue;
    } else {
      throw ParseError(file_name, number, "unrecognized annotation line");
    }
  }
  for (const auto &a : attributes) {
    auto it = by_id.find(a.target);
    if (it == by_id.end()) {
      throw ParseError(file_name, a.line,
                       "attribute refers to unknown annotation " + a.target);
    }
    auto c = ParseCertainty(ToLowerAscii(a.value));
    if (!c) {
      throw VocabularyError(file_name, a.line,
                            "unknown certainty '" + a.value + "'");
    }
    out[it->second].certainty = *c;
  }
  return out;
}

GoldCorpus LoadBratCorpus(const std::string &dir, const std::string &annotator) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  std::set<std::string> texts, anns;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".txt") texts.insert(entry.path().stem().string());
    if (ext == ".ann") anns.insert(entry.path().stem().string());
  }
  for (const auto &id : anns) {
    if (!texts.contains(id)) {
      throw IntegrityError(id + ".ann", 0, "no matching " + id + ".txt");
    }
  }
  GoldCorpus corpus;
  for (const auto &id : texts) {
    const fs::path base = fs::path(dir) / id;
    const std::string text = ReadFile(base.string() + ".txt");
    std::string ann;
    if (anns.contains(id)) ann = ReadFile(base.string() + ".ann");
    corpus[id] = ParseBratAnnotations(id, text, ann, id + ".ann", annotator);
  }
  return corpus;
}

std::string FormatBratAnnotations(const std::vector<GoldAnnotation> &gold,
                                  std::string_view text) {
  std::string out;
  int attr = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto &g = gold[i];
    out += fmt::format("T{}\t{} {} {}\t{}\n", i + 1, g.concept_type,
                       g.span.start(), g.span.end(),
                       Flatten(utf8::Slice(text, g.span.start(), g.span.end())));
    if (g.certainty != Certainty::kPositive) {
      out += fmt::format("A{}\tCertainty T{} {}\n", ++attr, i + 1,
                         Capitalized(CertaintyName(g.certainty)));
    }
  }
  return out;
}

std::string_view MatchModeName(MatchMode m) {
  return m == MatchMode::kSpan ? "span" : "span+certainty";
}

std::optional<MatchMode> ParseMatchMode(std::string_view s) {
  const std::string lower = ToLowerAscii(Trim(s));
  if (lower == "span") return MatchMode::kSpan;
  if (lower == "span+certainty" || lower == "span_certainty") {
    return MatchMode::kSpanCertainty;
  }
  return std::nullopt;
}

EvalMention EvalMention::From(const GoldAnnotation &g) {
  return {g.doc_id, g.span, g.concept_type, g.certainty};
}

EvalMention EvalMention::From(const MentionRecord &r) {
  return {r.doc_id, r.mention.span, r.mention.concept_type,
          r.mention.certainty};
}

EvalCorpus ToEvalCorpus(const GoldCorpus &gold) {
  EvalCorpus out;
  for (const auto &[doc, list] : gold) {
    auto &dst = out[doc];
    for (const auto &g : list) dst.push_back(EvalMention::From(g));
  }
  return out;
}

EvalCorpus ToEvalCorpus(const std::vector<MentionRecord> &records) {
  EvalCorpus out;
  for (const auto &r : records) out[r.doc_id].push_back(EvalMention::From(r));
  return out;
}

MatchResult MatchMentions(const std::vector<EvalMention> &gold,
                          const std::vector<EvalMention> &system,
                          MatchMode mode) {
  struct Candidate {
    std::size_t g, s, overlap;
  };
  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    for (std::size_t s = 0; s < system.size(); ++s) {
      const auto &a = gold[g];
      const auto &b = system[s];
      if (!SpanOverlaps(a.span, b.span) || a.concept_type != b.concept_type) {
        continue;
      }
      if (mode == MatchMode::kSpanCertainty && a.certainty != b.certainty) {
        continue;
      }
      candidates.push_back({g, s, OverlapLength(a.span, b.span)});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](const Candidate &x, const Candidate &y) {
              const auto key = [&](const Candidate &c) {
                return std::make_tuple(gold[c.g].span.start(),
                                       std::numeric_limits<std::size_t>::max() - c.overlap,
                                       gold[c.g].span.end(),
                                       system[c.s].span.start(),
                                       system[c.s].span.end(), c.g, c.s);
              };
              return key(x) < key(y);
            });
  std::vector<bool> gold_used(gold.size(), false);
  std::vector<bool> system_used(system.size(), false);
  MatchResult mr;
  mr.mode = mode;
  for (const auto &c : candidates) {
    if (gold_used[c.g] || system_used[c.s]) continue;
    gold_used[c.g] = system_used[c.s] = true;
    mr.tp.emplace_back(gold[c.g], system[c.s]);
  }
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (!gold_used[g]) mr.fn.push_back(gold[g]);
  }
  for (std::size_t s = 0; s < system.size(); ++s) {
    if (!system_used[s]) mr.fp.push_back(system[s]);
  }
  return mr;
}

MatchResult MatchCorpus(const EvalCorpus &gold, const EvalCorpus &system,
                        MatchMode mode) {
  MatchResult all;
  all.mode = mode;
  static const std::vector<EvalMention> kNone;
  for (const auto &[doc, g] : gold) {
    auto it = system.find(doc);
    auto mr = MatchMentions(g, it == system.end() ? kNone : it->second, mode);
    all.tp.insert(all.tp.end(), mr.tp.begin(), mr.tp.end());
    all.fp.insert(all.fp.end(), mr.fp.begin(), mr.fp.end());
    all.fn.insert(all.fn.end(), mr.fn.begin(), mr.fn.end());
  }
  return all;
}

std::optional<double> F1FromPr(double p, double r) {
  if (p + r == 0) return std::nullopt;
  return 2 * p * r / (p + r);
}

Counts Counts::FromCounts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  Counts c;
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  if (tp + fp > 0) c.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) c.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (c.precision && c.recall) {
    // Both defined but zero: no true positives among existing mentions.
    c.f1 = F1FromPr(*c.precision, *c.recall).value_or(0.0);
  }
  return c;
}

MetricsReport ComputeMetrics(const MatchResult &mr) {
  MetricsReport report;
  report.mode = mr.mode;
  std::map<std::string, std::array<std::int64_t, 3>> per;
  for (const auto &[g, s] : mr.tp) per[g.concept_type][0]++;
  for (const auto &s : mr.fp) per[s.concept_type][1]++;
  for (const auto &g : mr.fn) per[g.concept_type][2]++;
  for (const auto &[concept_type, c] : per) {
    report.per_concept[concept_type] = Counts::FromCounts(c[0], c[1], c[2]);
  }
  report.overall = Counts::FromCounts(static_cast<std::int64_t>(mr.tp.size()),
                                      static_cast<std::int64_t>(mr.fp.size()),
                                      static_cast<std::int64_t>(mr.fn.size()));
  return report;
}

std::optional<double> ComputeIaa(const EvalCorpus &a, const EvalCorpus &b) {
  std::set<std::string> docs_a, docs_b;
  for (const auto &[d, _] : a) docs_a.insert(d);
  for (const auto &[d, _] : b) docs_b.insert(d);
  if (docs_a != docs_b) {
    throw InputError("annotator corpora cover different documents");
  }
  auto ab = ComputeMetrics(MatchCorpus(a, b, MatchMode::kSpan)).overall.f1;
  auto ba = ComputeMetrics(MatchCorpus(b, a, MatchMode::kSpan)).overall.f1;
  if (!ab || !ba) {
    // Only possible when both corpora are empty.
    return std::nullopt;
  }
  return (*ab + *ba) / 2;
}

namespace {

// Uniform integer in [0, bound) by rejection, independent of the standard
// library's distribution implementation.
std::uint64_t Bounded(std::mt19937_64 &rng, std::uint64_t bound) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::map<std::string, std::vector<std::string>> SplitCorpus(
    const std::vector<std::string> &doc_ids, const SplitSpec &spec) {
  std::size_t total = 0;
  std::set<std::string> labels;
  for (const auto &[label, size] : spec.part_sizes) {
    if (!labels.insert(label).second) {
      throw InputError("duplicate split label '" + label + "'");
    }
    total += size;
  }
  if (total != doc_ids.size()) {
    throw InputError(fmt::format("split sizes sum to {} but there are {} ids",
                                 total, doc_ids.size()));
  }
  if (std::set<std::string>(doc_ids.begin(), doc_ids.end()).size() !=
      doc_ids.size()) {
    throw InputError("duplicate document ids");
  }
  std::vector<std::string> ids = doc_ids;
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::swap(ids[i - 1], ids[Bounded(rng, i)]);
  }
  std::map<std::string, std::vector<std::string>> parts;
  std::size_t at = 0;
  for (const auto &[label, size] : spec.part_sizes) {
    parts[label].assign(ids.begin() + static_cast<std::ptrdiff_t>(at),
                        ids.begin() + static_cast<std::ptrdiff_t>(at + size));
    at += size;
  }
  return parts;
}

SplitSpec ParseSplitSizes(std::string_view sizes, std::uint64_t seed) {
  SplitSpec spec;
  spec.seed = seed;
  if (Trim(sizes).empty()) return spec;
  for (const auto &part : Split(sizes, ',')) {
    const auto eq = part.find('=');
    auto size = eq == std::string::npos
                    ? std::nullopt
                    : ToInt(Trim(std::string_view(part).substr(eq + 1)));
    if (!size || *size < 0 || Trim(part.substr(0, eq)).empty()) {
      throw InputError("bad split size '" + part + "', expected label=size");
    }
    spec.part_sizes.emplace_back(std::string(Trim(part.substr(0, eq))),
                                 static_cast<std::size_t>(*size));
  }
  return spec;
}

namespace {

struct CategoryInfo {
  ErrorCategory category;
  const char *name;
  ErrorSide side;
};

const CategoryInfo kCategories[] = {
    {ErrorCategory::kMissingAnnotation, "missing_annotation", ErrorSide::kFalsePositive},
    {ErrorCategory::kHardToJudge, "hard_to_judge", ErrorSide::kFalsePositive},
    {ErrorCategory::kNotCovidInstructionEducation,
     "not_covid_instruction_education", ErrorSide::kFalsePositive},
    {ErrorCategory::kNotCovidAdverseEventIndication,
     "not_covid_adverse_event_indication", ErrorSide::kFalsePositive},
    {ErrorCategory::kNotCovidGoalPrecaution, "not_covid_goal_precaution",
     ErrorSide::kFalsePositive},
    {ErrorCategory::kNotCovidTemplate, "not_covid_template", ErrorSide::kFalsePositive},
    {ErrorCategory::kNotCovidOther, "not_covid_other", ErrorSide::kFalsePositive},
    {ErrorCategory::kNlpNotPrecise, "nlp_not_precise", ErrorSide::kFalsePositive},
    {ErrorCategory::kNlpNotComplete, "nlp_not_complete", ErrorSide::kFalseNegative},
    {ErrorCategory::kAnnotationError, "annotation_error", ErrorSide::kFalseNegative},
    {ErrorCategory::kTokenizationError, "tokenization_error", ErrorSide::kFalseNegative},
    {ErrorCategory::kTemplate, "template", ErrorSide::kFalseNegative},
};

const CategoryInfo &Info(ErrorCategory c) {
  return kCategories[static_cast<std::size_t>(c)];
}

}  // namespace

std::string_view ErrorCategoryName(ErrorCategory c) { return Info(c).name; }

std::optional<ErrorCategory> ParseErrorCategory(std::string_view s) {
  const std::string lower = ToLowerAscii(Trim(s));
  for (const auto &info : kCategories) {
    if (lower == info.name) return info.category;
  }
  return std::nullopt;
}

ErrorSide SideOf(ErrorCategory c) { return Info(c).side; }

const std::vector<ErrorCategory> &AllErrorCategories() {
  static const std::vector<ErrorCategory> all = [] {
    std::vector<ErrorCategory> v;
    for (const auto &info : kCategories) v.push_back(info.category);
    return v;
  }();
  return all;
}

std::vector<ErrorLabel> ParseErrorLabels(std::string_view contents,
                                         const std::string &file_name) {
  std::vector<ErrorLabel> labels;
  int number = 0;
  for (auto &line : Split(contents, '\n')) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty() || line[0] == '#') continue;
    auto f = Split(line, '\t');
    if (f.size() != 6) {
      throw ParseError(file_name, number, "expected 6 tab-separated fields");
    }
    if (number == 1 && f[0] == "doc_id") continue;
    auto start = ToInt(Trim(f[2]));
    auto end = ToInt(Trim(f[3]));
    if (!start || !end || *start < 0 || *end <= *start) {
      throw ParseError(file_name, number, "bad span");
    }
    const std::string side = ToLowerAscii(Trim(f[4]));
    if (side != "fp" && side != "fn") {
      throw VocabularyError(file_name, number, "side must be fp or fn");
    }
    auto category = ParseErrorCategory(f[5]);
    if (!category) {
      throw VocabularyError(file_name, number, "unknown category '" + f[5] + "'");
    }
    labels.push_back({f[0], f[1],
                      Span(static_cast<std::size_t>(*start),
                           static_cast<std::size_t>(*end)),
                      side == "fp" ? ErrorSide::kFalsePositive
                                   : ErrorSide::kFalseNegative,
                      *category});
  }
  return labels;
}

int WholePercent(std::int64_t count, std::int64_t total) {
  if (total <= 0) return 0;
  // Half-up on exact integers: floor(100 * count / total + 1/2).
  return static_cast<int>((200 * count + total) / (2 * total));
}

std::map<ErrorCategory, ErrorTally> CategorizeErrors(
    const MatchResult &mr, const std::vector<ErrorLabel> &labels) {
  using Key = std::tuple<std::string, std::string, Span>;
  std::map<Key, int> fp, fn;
  for (const auto &m : mr.fp) fp[{m.doc_id, m.concept_type, m.span}]++;
  for (const auto &m : mr.fn) fn[{m.doc_id, m.concept_type, m.span}]++;

  std::map<ErrorCategory, ErrorTally> tallies;
  for (const auto &l : labels) {
    const Key key{l.doc_id, l.concept_type, l.span};
    const std::string where = fmt::format("{} {} [{},{})", l.doc_id,
                                          l.concept_type, l.span.start(),
                                          l.span.end());
    if (SideOf(l.category) != l.side) {
      throw InputError(where + ": category " +
                       std::string(ErrorCategoryName(l.category)) +
                       " belongs to the other side");
    }
    auto &pool = l.side == ErrorSide::kFalsePositive ? fp : fn;
    auto it = pool.find(key);
    if (it == pool.end()) {
      throw InputError(where + ": not a " +
                       (l.side == ErrorSide::kFalsePositive ? "false positive"
                                                            : "false negative"));
    }
    if (it->second == 0) throw InputError(where + ": labeled more than once");
    --it->second;
    tallies[l.category].count++;
  }
  const auto fp_total = static_cast<std::int64_t>(mr.fp.size());
  const auto fn_total = static_cast<std::int64_t>(mr.fn.size());
  for (auto &[category, tally] : tallies) {
    tally.percent = WholePercent(
        tally.count,
        SideOf(category) == ErrorSide::kFalsePositive ? fp_total : fn_total);
  }
  return tallies;
}

namespace {

nlohmann::json Ratio(const std::optional<double> &v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> RatioFrom(const nlohmann::json &v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

void RequireKeys(const nlohmann::json &j, const std::set<std::string> &keys,
                 const std::string &what) {
  if (!j.is_object()) throw ParseError("", 0, what + " must be an object");
  for (const auto &[k, _] : j.items()) {
    if (!keys.contains(k)) {
      throw ParseError("", 0, what + ": unexpected key '" + k + "'");
    }
  }
  for (const auto &k : keys) {
    if (!j.contains(k)) throw ParseError("", 0, what + ": missing key '" + k + "'");
  }
}

nlohmann::json CountsToJson(const Counts &c) {
  return {{"tp", c.tp},
          {"fp", c.fp},
          {"fn", c.fn},
          {"precision", Ratio(c.precision)},
          {"recall", Ratio(c.recall)},
          {"f1", Ratio(c.f1)}};
}

Counts CountsFromJson(const nlohmann::json &j, const std::string &what) {
  RequireKeys(j, {"tp", "fp", "fn", "precision", "recall", "f1"}, what);
  Counts c;
  c.tp = j["tp"].get<std::int64_t>();
  c.fp = j["fp"].get<std::int64_t>();
  c.fn = j["fn"].get<std::int64_t>();
  if (c.tp < 0 || c.fp < 0 || c.fn < 0) {
    throw ParseError("", 0, what + ": negative count");
  }
  c.precision = RatioFrom(j["precision"]);
  c.recall = RatioFrom(j["recall"]);
  c.f1 = RatioFrom(j["f1"]);
  return c;
}

}  // namespace

nlohmann::json MetricsToJson(const MetricsReport &m) {
  nlohmann::json j = CountsToJson(m.overall);
  j["mode"] = MatchModeName(m.mode);
  nlohmann::json per = nlohmann::json::object();
  for (const auto &[c, counts] : m.per_concept) per[c] = CountsToJson(counts);
  j["per_concept"] = per;
  return j;
}

MetricsReport MetricsFromJson(const nlohmann::json &j) {
  RequireKeys(j,
              {"mode", "tp", "fp", "fn", "precision", "recall", "f1",
               "per_concept"},
              "metrics");
  MetricsReport m;
  auto mode = ParseMatchMode(j["mode"].get<std::string>());
  if (!mode) throw ParseError("", 0, "metrics: unknown mode");
  m.mode = *mode;
  nlohmann::json overall = j;
  overall.erase("mode");
  overall.erase("per_concept");
  m.overall = CountsFromJson(overall, "metrics");
  if (!j["per_concept"].is_object()) {
    throw ParseError("", 0, "metrics: per_concept must be an object");
  }
  for (const auto &[c, v] : j["per_concept"].items()) {
    m.per_concept[c] = CountsFromJson(v, "per_concept." + c);
  }
  return m;
}

nlohmann::json SiteReportToJson(const SiteReport &r) {
  nlohmann::json tallies = nlohmann::json::object();
  for (const auto &[c, n] : r.error_tallies) {
    tallies[std::string(ErrorCategoryName(c))] = n;
  }
  return {{"site", r.site},
          {"dataset", r.dataset},
          {"metrics_span", MetricsToJson(r.metrics_span)},
          {"metrics_span_certainty", MetricsToJson(r.metrics_span_certainty)},
          {"error_tallies", tallies}};
}

SiteReport SiteReportFromJson(const nlohmann::json &j) {
  try {
    RequireKeys(j,
                {"site", "dataset", "metrics_span", "metrics_span_certainty",
                 "error_tallies"},
                "site report");
    SiteReport r;
    r.site = j["site"].get<std::string>();
    r.dataset = j["dataset"].get<std::string>();
    r.metrics_span = MetricsFromJson(j["metrics_span"]);
    r.metrics_span_certainty = MetricsFromJson(j["metrics_span_certainty"]);
    if (r.metrics_span.mode != MatchMode::kSpan ||
        r.metrics_span_certainty.mode != MatchMode::kSpanCertainty) {
      throw ParseError("", 0, "site report: metrics modes are swapped");
    }
    if (!j["error_tallies"].is_object()) {
      throw ParseError("", 0, "site report: error_tallies must be an object");
    }
    for (const auto &[k, v] : j["error_tallies"].items()) {
      auto c = ParseErrorCategory(k);
      if (!c) throw ParseError("", 0, "site report: unknown category '" + k + "'");
      r.error_tallies[*c] = v.get<std::int64_t>();
    }
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError("", 0, std::string("site report: ") + e.what());
  }
}

std::vector<AggregateRow> AggregateSiteReports(
    const std::vector<SiteReport> &reports) {
  if (reports.empty()) throw InputError("no site reports");
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<AggregateRow> rows;
  std::array<std::array<std::int64_t, 3>, 2> sums{};
  for (const auto &r : reports) {
    if (!seen.insert({r.site, r.dataset}).second) {
      throw InputError("duplicate report for site '" + r.site +
                       "', dataset '" + r.dataset + "'");
    }
    int k = 0;
    for (const auto *m : {&r.metrics_span, &r.metrics_span_certainty}) {
      rows.push_back({r.site, r.dataset, m->mode, m->overall});
      sums[k][0] += m->overall.tp;
      sums[k][1] += m->overall.fp;
      sums[k][2] += m->overall.fn;
      ++k;
    }
  }
  rows.push_back({"pooled", "all", MatchMode::kSpan,
                  Counts::FromCounts(sums[0][0], sums[0][1], sums[0][2])});
  rows.push_back({"pooled", "all", MatchMode::kSpanCertainty,
                  Counts::FromCounts(sums[1][0], sums[1][1], sums[1][2])});
  return rows;
}

namespace {

std::string Fixed(const std::optional<double> &v) {
  return v ? fmt::format("{:.3f}", *v) : "-";
}

std::string AlignedTable(const std::vector<std::vector<std::string>> &cells) {
  std::vector<std::size_t> width;
  for (const auto &row : cells) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], utf8::Length(row[i]));
    }
  }
  std::string out;
  for (const auto &row : cells) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) line += "  ";
      line += row[i];
      if (i + 1 < row.size()) line.append(width[i] - utf8::Length(row[i]), ' ');
    }
    out += line + "\n";
  }
  return out;
}

std::string Tsv(const std::vector<std::vector<std::string>> &cells) {
  std::string out;
  for (const auto &row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += "\t";
      out += EscapeField(row[i]);
    }
    out += "\n";
  }
  return out;
}

std::vector<std::vector<std::string>> AggregateCells(
    const std::vector<AggregateRow> &rows) {
  std::vector<std::vector<std::string>> cells = {
      {"site", "dataset", "mode", "tp", "fp", "fn", "precision", "recall", "f1"}};
  for (const auto &r : rows) {
    cells.push_back({r.site, r.dataset, std::string(MatchModeName(r.mode)),
                     std::to_string(r.counts.tp), std::to_string(r.counts.fp),
                     std::to_string(r.counts.fn), Fixed(r.counts.precision),
                     Fixed(r.counts.recall), Fixed(r.counts.f1)});
  }
  return cells;
}

std::vector<std::vector<std::string>> MetricsCells(const MetricsReport &m) {
  std::vector<std::vector<std::string>> cells = {
      {"concept", "tp", "fp", "fn", "precision", "recall", "f1"}};
  auto add = [&](const std::string &name, const Counts &c) {
    cells.push_back({name, std::to_string(c.tp), std::to_string(c.fp),
                     std::to_string(c.fn), Fixed(c.precision), Fixed(c.recall),
                     Fixed(c.f1)});
  };
  for (const auto &[c, counts] : m.per_concept) add(c, counts);
  add("ALL", m.overall);
  return cells;
}

}  // namespace

std::string FormatAggregateTable(const std::vector<AggregateRow> &rows) {
  return AlignedTable(AggregateCells(rows));
}

std::string FormatAggregateTsv(const std::vector<AggregateRow> &rows) {
  return Tsv(AggregateCells(rows));
}

std::string FormatMetricsTable(const MetricsReport &m) {
  return AlignedTable(MetricsCells(m));
}

std::string FormatMetricsTsv(const MetricsReport &m) {
  return Tsv(MetricsCells(m));
}

std::vector<MentionRecord> LoadSystemMentions(const std::string &path) {
  const std::string contents = ReadFile(path);
  const std::string name = fs::path(path).filename().string();
  if (StartsWith(contents, kMentionTsvHeader)) {
    return ParseMentionFile(contents, name);
  }
  return ParseNoteNlpFile(contents, name);
}

}  // namespace cliniex
