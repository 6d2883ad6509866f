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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "cliniex/backbone.h"
#include "cliniex/engine.h"
#include "cliniex/errors.h"
#include "cliniex/evaluation.h"
#include "cliniex/ruleset.h"
#include "cliniex/service.h"
#include "cliniex/text.h"
#include "cliniex/utf8.h"
#include "generators.h"
#include "oracles.h"

namespace cliniex {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kRoot = CLINIEX_SOURCE_DIR;
const std::string kBaseline = kRoot + "/data/baseline";

struct Outcome {
  bool pass = true;
  std::string detail;
  void Fail(const std::string &why) {
    if (pass) {
      detail = why;
    } else if (detail.size() < 400) {
      detail += "; " + why;
    }
    pass = false;
  }
};

struct Criterion {
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

// ---------------------------------------------------------------------------
// Published tables.

struct PrfCell {
  const char *where;
  double p, r, f1;
};

// Site, algorithm and mode for each printed (P, R, F1) triple.
const PrfCell kPrfCells[] = {
    {"single Mayo span", 0.882, 0.869, 0.876},
    {"single Mayo span+cert", 0.789, 0.639, 0.706},
    {"single UKen span", 0.698, 0.714, 0.706},
    {"single UKen span+cert", 0.664, 0.643, 0.653},
    {"single UMN span", 0.658, 0.735, 0.694},
    {"single UMN span+cert", 0.534, 0.438, 0.481},
    {"multi Mayo span", 0.863, 0.908, 0.884},
    {"multi Mayo span+cert", 0.824, 0.681, 0.746},
    {"multi UKen span", 0.696, 0.859, 0.769},
    {"multi UKen span+cert", 0.662, 0.734, 0.696},
    {"multi UMN span", 0.718, 0.918, 0.806},
    {"multi UMN span+cert", 0.562, 0.456, 0.504},
};

struct ErrorRow {
  ErrorCategory category;
  int count;
  int printed_percent;
};

struct ErrorTable {
  const char *site;
  std::vector<ErrorRow> rows;
};

const std::vector<ErrorTable> &ErrorTables() {
  using C = ErrorCategory;
  static const std::vector<ErrorTable> tables = {
      {"Mayo",
       {{C::kMissingAnnotation, 17, 26},
        {C::kHardToJudge, 15, 23},
        {C::kNotCovidInstructionEducation, 10, 15},
        {C::kNotCovidAdverseEventIndication, 7, 11},
        {C::kNotCovidOther, 5, 7},
        {C::kNotCovidGoalPrecaution, 4, 6},
        {C::kNotCovidTemplate, 5, 7},
        {C::kNlpNotPrecise, 2, 3},
        {C::kNlpNotComplete, 21, 66},
        {C::kAnnotationError, 8, 25},
        {C::kTokenizationError, 2, 6},
        {C::kTemplate, 1, 3}}},
      {"UMN",
       {{C::kNotCovidInstructionEducation, 30, 61},
        {C::kNotCovidOther, 7, 14},
        {C::kMissingAnnotation, 6, 12},
        {C::kNotCovidTemplate, 4, 8},
        {C::kHardToJudge, 2, 3},
        {C::kNlpNotComplete, 11, 85},
        {C::kAnnotationError, 2, 15}}},
      {"UKen",
       {{C::kNotCovidOther, 8, 33},
        {C::kMissingAnnotation, 5, 21},
        {C::kNotCovidInstructionEducation, 5, 21},
        {C::kHardToJudge, 3, 13},
        {C::kNotCovidTemplate, 2, 8},
        {C::kNlpNotPrecise, 1, 4},
        {C::kNlpNotComplete, 7, 78},
        {C::kAnnotationError, 2, 22}}},
  };
  return tables;
}

Outcome F1Arithmetic() {
  Outcome o;
  for (const auto &c : kPrfCells) {
    auto f1 = F1FromPr(c.p, c.r);
    if (!f1 || std::fabs(*f1 - c.f1) > 0.0005) {
      o.Fail(fmt::format("{}: ({:.3f},{:.3f}) -> {:.5f}, printed {:.3f}", c.where,
                         c.p, c.r, f1.value_or(-1), c.f1));
    }
  }
  if (o.pass) o.detail = "12/12 cells";
  return o;
}

// Printed P and R are rounded to 3 decimals, so the exact F1 lies between
// the values at the corners of the rounding box.
std::string F1IntervalNote() {
  int consistent = 0;
  for (const auto &c : kPrfCells) {
    const double lo = *F1FromPr(c.p - 0.0005, c.r - 0.0005);
    const double hi = *F1FromPr(c.p + 0.0005, c.r + 0.0005);
    if (c.f1 + 0.0005 >= lo && c.f1 - 0.0005 <= hi) ++consistent;
  }
  return fmt::format(
      "{}/12 printed F1 cells are consistent with the 3-decimal rounding of "
      "their P and R",
      consistent);
}

Outcome ErrorTableArithmetic() {
  Outcome o;
  int cells = 0;
  for (const auto &table : ErrorTables()) {
    // One FP or FN mention per counted error, each labeled with its row.
    MatchResult mr;
    std::vector<ErrorLabel> labels;
    std::size_t at = 0;
    for (const auto &row : table.rows) {
      for (int i = 0; i < row.count; ++i, at += 10) {
        EvalMention m{table.site, Span(at, at + 5), "X", Certainty::kPositive};
        const ErrorSide side = SideOf(row.category);
        (side == ErrorSide::kFalsePositive ? mr.fp : mr.fn).push_back(m);
        labels.push_back({m.doc_id, m.concept_type, m.span, side, row.category});
      }
    }
    const auto tallies = CategorizeErrors(mr, labels);
    // Rows that share a category (none in these tables) would merge.
    for (const auto &row : table.rows) {
      ++cells;
      const auto &t = tallies.at(row.category);
      if (t.percent != row.printed_percent) {
        o.Fail(fmt::format("{} {} {}: computed {}%, printed {}%", table.site,
                           ErrorCategoryName(row.category), row.count, t.percent,
                           row.printed_percent));
      }
    }
  }
  if (o.pass) o.detail = fmt::format("{}/{} cells", cells, cells);
  return o;
}

// ---------------------------------------------------------------------------
// Oracle-backed criteria.

Outcome MatcherOracle() {
  Outcome o;
  std::mt19937_64 rng(20240601);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    auto inst = testing::RandomMatcherInstance(rng);
    auto m = CompileRulePackage(inst.package);
    auto got = MatchConcepts(Document("d", inst.text), *m);
    auto want = testing::BruteForceMatch(inst.text, inst.literals);
    ++checked;
    if (got != want) o.Fail("mismatch on text '" + inst.text + "'");
  }
  if (o.pass) o.detail = fmt::format("{} instances", checked);
  return o;
}

Outcome MetricsOracle() {
  Outcome o;
  std::mt19937_64 rng(77);
  const int notes = 20;
  for (int round = 0; round < 20; ++round) {
    auto planted = testing::PlantCorpus(rng, notes);
    EvalCorpus gold, system;
    for (int d = 0; d < notes; ++d) gold["note" + std::to_string(d)];
    for (const auto &m : planted.gold) {
      gold[m.doc_id].push_back({m.doc_id, Span(m.start, m.end), m.concept_type, m.certainty});
    }
    for (const auto &m : planted.system) {
      system[m.doc_id].push_back({m.doc_id, Span(m.start, m.end), m.concept_type, m.certainty});
    }
    auto span = ComputeMetrics(MatchCorpus(gold, system, MatchMode::kSpan));
    auto cert = ComputeMetrics(MatchCorpus(gold, system, MatchMode::kSpanCertainty));
    auto expect = [&](const char *what, const Counts &got, int tp, int fp, int fn) {
      if (got.tp != tp || got.fp != fp || got.fn != fn) {
        o.Fail(fmt::format("round {} {}: got {}/{}/{}, expected {}/{}/{}", round,
                           what, got.tp, got.fp, got.fn, tp, fp, fn));
        return;
      }
      auto ref = Counts::FromCounts(tp, fp, fn);
      if (got.precision != ref.precision || got.recall != ref.recall ||
          got.f1 != ref.f1) {
        o.Fail(fmt::format("round {} {}: ratios differ", round, what));
      }
    };
    expect("span", span.overall, planted.span_tp, planted.span_fp, planted.span_fn);
    expect("span+certainty", cert.overall, planted.cert_tp, planted.cert_fp,
           planted.cert_fn);
    for (const auto &[c, t] : planted.span_per_concept) {
      expect(c.c_str(), span.per_concept[c], std::get<0>(t), std::get<1>(t),
             std::get<2>(t));
    }
  }
  if (o.pass) o.detail = "20 corpora of 20 notes, both modes";
  return o;
}

Outcome ContextBehavior() {
  Outcome o;
  auto baseline = CompileRulePackage(LoadRulePackage(kBaseline));
  RulePackage fixture = LoadRulePackage(kBaseline);
  fixture.concepts.insert("PATCHY_INFILTRATES");
  fixture.concept_rules.push_back(
      {"PATCHY_INFILTRATES", {Pattern{PatternKind::kLiteral, "patchy infiltrates", {}}}});
  auto m = CompileRulePackage(fixture);
  auto label = [&](const char *text, const char *concept_type) -> std::optional<Certainty> {
    for (const auto &x : Annotate(Document("d", text), *m)) {
      if (x.concept_type == concept_type) return x.certainty;
    }
    return std::nullopt;
  };
  if (label("Chest x-ray does not demonstrate patchy infiltrates.",
            "PATCHY_INFILTRATES") != Certainty::kNegated) {
    o.Fail("'does not demonstrate' fixture is not Negated");
  }
  if (label("Possible complications include fever.", "FEVER") !=
          Certainty::kHypothetical &&
      label("Complications include fever.", "FEVER") != Certainty::kHypothetical) {
    o.Fail("'complications include' fixture is not Hypothetical");
  }

  std::mt19937_64 rng(4242);
  int placements = 0;
  for (int i = 0; i < 500; ++i, ++placements) {
    auto c = testing::ScopeLocalityCase(rng);
    auto got = Annotate(Document("d", c.text), *CompileRulePackage(c.package));
    bool same = got.size() == c.expected.size();
    for (std::size_t k = 0; same && k < got.size(); ++k) {
      same = got[k].span == c.expected[k].span &&
             got[k].certainty == c.expected[k].certainty &&
             got[k].experiencer == c.expected[k].experiencer;
    }
    if (!same) o.Fail("scope locality: '" + c.text + "'");
  }
  for (int i = 0; i < 500; ++i, ++placements) {
    auto c = testing::PriorityTieCase(rng);
    auto got = Annotate(Document("d", c.text), *CompileRulePackage(c.package));
    if (got.size() != 1 || got[0].certainty != c.expected[0].certainty) {
      o.Fail("priority tie: '" + c.text + "'");
    }
  }
  if (o.pass) o.detail = fmt::format("2 fixtures, {} placements", placements);
  return o;
}

const char kDemo[] =
    "The patient had a dry cough and fever or chills yesterday. He is also "
    "experiencing new loss of taste today and three days ago.";

Outcome DemoExtraction() {
  Outcome o;
  auto m = CompileRulePackage(LoadRulePackage(kBaseline));
  auto a = AnnotateDocument(Document("demo", kDemo, ParseIsoDate("2021-02-18")), *m);
  std::set<std::string> concepts;
  for (const auto &x : a.mentions) concepts.insert(x.concept_type);
  for (const char *c : {"DRY_COUGH", "FEVER", "CHILL", "LOSS_OF_TASTE"}) {
    if (!concepts.contains(c)) o.Fail(std::string("missing ") + c);
  }
  const std::size_t first_clause_end = std::string_view(kDemo).find('.');
  for (const auto &x : a.mentions) {
    if (x.span.end() <= first_clause_end &&
        x.normalized_date != ParseIsoDate("2021-02-17")) {
      o.Fail(x.concept_type + " in the first clause is not dated 2021-02-17");
    }
  }
  bool attached = false;
  for (const auto &t : a.temporal) {
    if (t.text == "three days ago" && t.span.start() > first_clause_end &&
        t.resolved == ParseIsoDate("2021-02-15")) {
      attached = true;
    }
  }
  if (!attached) o.Fail("'three days ago' does not resolve to 2021-02-15");
  if (o.pass) {
    o.detail = fmt::format("{} mentions, {} temporal expressions", a.mentions.size(),
                           a.temporal.size());
  }
  return o;
}

Outcome PipelineDeterminism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() /
                       ("cliniex_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  std::mt19937_64 rng(500);
  const std::string notes = (dir / "notes.csv").string();
  WriteFile(notes, testing::SyntheticNotesCsv(rng, 500));
  auto config = [&](int parallelism, const std::string &out) {
    PipelineConfig cfg;
    cfg.source.location = notes;
    cfg.sink.location = (dir / out).string();
    cfg.rule_package = kBaseline;
    cfg.parallelism = parallelism;
    cfg.run_date = ParseIsoDate("2021-03-01");
    return cfg;
  };
  const auto one = RunPipeline(config(1, "p1.csv"));
  const auto eight = RunPipeline(config(8, "p8.csv"));
  const std::string a = ReadFile((dir / "p1.csv").string());
  const std::string b = ReadFile((dir / "p8.csv").string());
  if (one.notes_in != 500) o.Fail(fmt::format("{} notes read", one.notes_in));
  if (one.notes_failed != 0) o.Fail("record errors in the fixture");
  if (a != b) o.Fail("outputs differ between parallelism 1 and 8");

  std::map<std::string, std::string> text;
  SourceConfig source;
  source.location = notes;
  for (const auto &n : ReadNotes(source)) text[std::to_string(n.note_id)] = n.note_text;
  std::size_t checked = 0;
  for (const auto &r : ParseNoteNlpFile(a)) {
    ++checked;
    if (utf8::Slice(text.at(r.doc_id), r.mention.span.start(), r.mention.span.end()) !=
        r.mention.matched_text) {
      o.Fail("offset of note " + r.doc_id + " does not re-slice");
    }
  }
  if (checked == 0) o.Fail("no mentions produced");
  fs::remove_all(dir);
  if (o.pass) o.detail = fmt::format("500 notes, {} rows identical", checked);
  return o;
}

Outcome SplitReproduction() {
  Outcome o;
  std::vector<std::string> ids;
  for (int i = 1; i <= 313; ++i) ids.push_back(fmt::format("note{:03}", i));
  const SplitSpec spec = ParseSplitSizes("train=101,dev=105,test=107", 313);
  const auto parts = SplitCorpus(ids, spec);
  const std::map<std::string, std::size_t> sizes = {
      {"train", 101}, {"dev", 105}, {"test", 107}};
  std::multiset<std::string> all;
  for (const auto &[label, docs] : parts) {
    if (docs.size() != sizes.at(label)) o.Fail(label + " has the wrong size");
    all.insert(docs.begin(), docs.end());
  }
  if (all != std::multiset<std::string>(ids.begin(), ids.end())) {
    o.Fail("parts are not a disjoint cover of the ids");
  }
  for (int i = 0; i < 5; ++i) {
    if (SplitCorpus(ids, spec) != parts) o.Fail("repeated run differs");
  }
  if (o.pass) o.detail = "101/105/107, disjoint, exhaustive, stable";
  return o;
}

Outcome RoundTrips() {
  Outcome o;
  std::mt19937_64 rng(31337);
  int packages = 0;
  for (int i = 0; i < 200; ++i, ++packages) {
    RulePackage p = testing::RandomRulePackage(rng);
    if (ParseRulePackage(SerializeRulePackage(p)) != p ||
        ParseRulePackageArchive(SerializeRulePackageArchive(p)) != p) {
      o.Fail(fmt::format("package {} does not round trip", i));
    }
  }

  // A small brat corpus, then the same corpus with one offset shifted.
  const fs::path dir = fs::temp_directory_path() /
                       ("cliniex_brat_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const std::string text = "Denies fever. Reports dry cough and chills.";
  GoldCorpus gold;
  gold["n1"] = {{"n1", Span(7, 12), "FEVER", Certainty::kNegated, ""},
                {"n1", Span(22, 31), "DRY_COUGH", Certainty::kPositive, ""},
                {"n1", Span(36, 42), "CHILL", Certainty::kPositive, ""}};
  WriteFile((dir / "n1.txt").string(), text);
  const std::string ann = FormatBratAnnotations(gold["n1"], text);
  WriteFile((dir / "n1.ann").string(), ann);
  auto loaded = LoadBratCorpus(dir.string(), "");
  if (loaded != gold) o.Fail("brat corpus does not round trip");

  std::string corrupt = ann;
  corrupt.replace(corrupt.find("22 31"), 5, "23 32");
  WriteFile((dir / "n1.ann").string(), corrupt);
  try {
    LoadBratCorpus(dir.string(), "");
    o.Fail("corrupted offsets accepted");
  } catch (const IntegrityError &e) {
    if (e.file() != "n1.ann" || e.line() <= 0) {
      o.Fail(std::string("error not located: ") + e.what());
    }
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = fmt::format("{} packages; corrupted brat rejected at n1.ann:3", packages);
  return o;
}

Outcome ServiceContract() {
  Outcome o;
  ServiceOptions options;
  options.log_requests = false;
  const RulePackage baseline = LoadRulePackage(kBaseline);
  Service service(baseline, Ontology::Load(kRoot + "/data/ontology/symptoms.tsv"),
                  options);
  const int port = service.Start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/health");
  if (!health || health->status != 200 ||
      json::parse(health->body)["concepts_count"] != 20) {
    o.Fail("/health does not report 20 concepts");
  }

  auto post = [&](httplib::Client &c, const json &body) {
    auto r = c.Post("/annotate", body.dump(), "application/json");
    return r ? std::make_pair(r->status, r->body) : std::make_pair(-1, std::string());
  };
  if (post(client, {{"text", std::string(3001, 'x')}}).first != 413) {
    o.Fail("3001 characters not rejected with 413");
  }
  if (post(client, {{"text", std::string(3000, 'x')}}).first != 200) {
    o.Fail("3000 characters rejected");
  }

  auto with_term = [&](const char *concept_type) {
    RulePackage p = baseline;
    DictionaryEntry e;
    e.term = "zorblat";
    e.concept_type = concept_type;
    p.dictionary.push_back(e);
    return SerializeRulePackageArchive(p);
  };
  auto upload = [&](const std::string &session, const std::string &archive) {
    auto r = client.Post("/ruleset?session_id=" + session, archive, "application/zip");
    return r ? r->status : -1;
  };
  const json probe = {{"text", "zorblat and fever"}};
  const auto sessionless = post(client, probe);
  json other = probe;
  other["session_id"] = "other";
  const auto other_before = post(client, other);

  std::atomic<bool> done{false};
  std::atomic<int> isolation_breaks{0}, swap_errors{0}, swap_reads{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 6; ++t) {
    readers.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", port);
      json mine = probe;
      mine["session_id"] = "mine";
      while (!done) {
        if (t < 3) {
          const auto r = post(c, t % 2 ? other : probe);
          if (r != (t % 2 ? other_before : sessionless)) ++isolation_breaks;
        } else {
          const auto r = post(c, mine);
          ++swap_reads;
          if (r.first != 200) {
            ++swap_errors;
            continue;
          }
          std::set<std::string> concepts;
          const json reply = json::parse(r.second);
          for (const auto &m : reply["mentions"]) {
            concepts.insert(m["concept"].get<std::string>());
          }
          // Before the first upload "mine" falls back to the baseline.
          if (concepts != std::set<std::string>{"FEVER"} &&
              concepts != std::set<std::string>{"CHILL", "FEVER"} &&
              concepts != std::set<std::string>{"DYSPNEA", "FEVER"}) {
            ++swap_errors;
          }
        }
      }
    });
  }
  const std::string chill = with_term("CHILL");
  const std::string dyspnea = with_term("DYSPNEA");
  for (int i = 0; i < 20; ++i) {
    if (upload("mine", i % 2 ? chill : dyspnea) != 200) o.Fail("upload rejected");
    json mine = probe;
    mine["session_id"] = "mine";
    const auto r = post(client, mine);
    const std::string expected = i % 2 ? "CHILL" : "DYSPNEA";
    if (r.first != 200 || r.second.find("\"" + expected + "\"") == std::string::npos) {
      o.Fail("request after upload did not see the new package");
    }
  }
  done = true;
  for (auto &t : readers) t.join();
  if (isolation_breaks > 0) {
    o.Fail(fmt::format("{} responses changed for other sessions", isolation_breaks.load()));
  }
  if (swap_errors > 0) {
    o.Fail(fmt::format("{} of {} reads saw an error or mixed package",
                       swap_errors.load(), swap_reads.load()));
  }
  health = client.Get("/health");
  if (!health || json::parse(health->body)["concepts_count"] != 20) {
    o.Fail("default package changed by a session upload");
  }
  service.Stop();
  if (o.pass) {
    o.detail = fmt::format("20 swaps, {} concurrent reads", swap_reads.load());
  }
  return o;
}

}  // namespace
}  // namespace cliniex

int main() {
  using namespace cliniex;
  const std::vector<Criterion> criteria = {
      {"F1 arithmetic", 1, F1Arithmetic},
      {"Error-table arithmetic", 1, ErrorTableArithmetic},
      {"Matcher oracle", 10, MatcherOracle},
      {"Metrics oracle", 5, MetricsOracle},
      {"ConText behavior", 10, ContextBehavior},
      {"Demo-sentence extraction", 1, DemoExtraction},
      {"Pipeline determinism", 30, PipelineDeterminism},
      {"Split reproduction", 1, SplitReproduction},
      {"Round trips", 30, RoundTrips},
      {"Service contract", 60, ServiceContract},
  };
  int failed = 0;
  for (const auto &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o.Fail(std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.limit_seconds) {
      o.Fail(fmt::format("took {:.2f}s, limit {}s", seconds, c.limit_seconds));
    }
    if (!o.pass) ++failed;
    std::cout << fmt::format("{} {:<26} {:>8.3f}s  {}\n", o.pass ? "PASS" : "FAIL",
                             c.name, seconds, o.detail);
    if (c.name == "F1 arithmetic") std::cout << "INFO " << F1IntervalNote() << "\n";
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed,
                           criteria.size());
  return failed == 0 ? 0 : 1;
}
