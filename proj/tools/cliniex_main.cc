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

// Command-line entry point: pipeline, eval, serve, annotate and rules.

#include <csignal>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cliniex/backbone.h"
#include "cliniex/engine.h"
#include "cliniex/errors.h"
#include "cliniex/evaluation.h"
#include "cliniex/ruleset.h"
#include "cliniex/service.h"
#include "cliniex/text.h"

namespace fs = std::filesystem;
using namespace cliniex;

namespace {

constexpr int kOk = 0;
constexpr int kFatal = 1;
constexpr int kPartial = 2;

std::vector<std::string> ReadLines(const std::string &path) {
  std::vector<std::string> out;
  for (auto &line : Split(ReadFile(path), '\n')) {
    auto t = Trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

int PipelineRun(const std::string &config) {
  const PipelineConfig cfg = LoadPipelineConfig(config);
  const RunSummary summary = RunPipeline(cfg);
  std::cout << summary.ToJson().dump(2) << "\n";
  for (const auto &e : summary.errors) std::cerr << e.unit << ": " << e.message << "\n";
  return summary.notes_failed == 0 ? kOk : kPartial;
}

int PipelineValidate(const std::string &config) {
  const auto problems = ValidatePipelineConfig(LoadPipelineConfig(config));
  for (const auto &p : problems) std::cerr << p << "\n";
  if (problems.empty()) std::cout << "ok\n";
  return problems.empty() ? kOk : kFatal;
}

struct EvalRunArgs {
  std::string gold, system, mode = "span", labels, out, site = "site",
                                dataset = "test";
};

int EvalRun(const EvalRunArgs &a) {
  auto mode = ParseMatchMode(a.mode);
  if (!mode) throw InputError("unknown mode '" + a.mode + "'");
  const EvalCorpus gold = ToEvalCorpus(LoadBratCorpus(a.gold, "gold"));
  const EvalCorpus system = ToEvalCorpus(LoadSystemMentions(a.system));

  SiteReport report;
  report.site = a.site;
  report.dataset = a.dataset;
  const MatchResult span = MatchCorpus(gold, system, MatchMode::kSpan);
  const MatchResult cert = MatchCorpus(gold, system, MatchMode::kSpanCertainty);
  report.metrics_span = ComputeMetrics(span);
  report.metrics_span_certainty = ComputeMetrics(cert);
  const MatchResult &chosen = *mode == MatchMode::kSpan ? span : cert;
  const MetricsReport &metrics =
      *mode == MatchMode::kSpan ? report.metrics_span : report.metrics_span_certainty;

  std::cout << "mode: " << MatchModeName(*mode) << "\n" << FormatMetricsTable(metrics);

  std::string errors_tsv;
  if (!a.labels.empty()) {
    const auto tallies = CategorizeErrors(
        chosen, ParseErrorLabels(ReadFile(a.labels), fs::path(a.labels).filename()));
    errors_tsv = "side\tcategory\tcount\tpercent\n";
    std::cout << "\nerrors (" << chosen.fp.size() << " fp, " << chosen.fn.size()
              << " fn)\n";
    for (auto c : AllErrorCategories()) {
      auto it = tallies.find(c);
      if (it == tallies.end()) continue;
      const char *side = SideOf(c) == ErrorSide::kFalsePositive ? "fp" : "fn";
      std::cout << fmt::format("  {}  {:<36} {:>4} ({}%)\n", side, ErrorCategoryName(c),
                               it->second.count, it->second.percent);
      errors_tsv += fmt::format("{}\t{}\t{}\t{}\n", side, ErrorCategoryName(c),
                                it->second.count, it->second.percent);
      report.error_tallies[c] = it->second.count;
    }
  }
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    WriteFile((fs::path(a.out) / "metrics.tsv").string(), FormatMetricsTsv(metrics));
    if (!errors_tsv.empty()) {
      WriteFile((fs::path(a.out) / "errors.tsv").string(), errors_tsv);
    }
    WriteFile((fs::path(a.out) / "site_report.json").string(),
              SiteReportToJson(report).dump(2) + "\n");
  }
  return kOk;
}

int EvalIaa(const std::string &a, const std::string &b) {
  auto f1 = ComputeIaa(ToEvalCorpus(LoadBratCorpus(a, "a")),
                       ToEvalCorpus(LoadBratCorpus(b, "b")));
  std::cout << "iaa_f1\t" << (f1 ? fmt::format("{:.4f}", *f1) : "undefined") << "\n";
  return kOk;
}

int EvalSplit(const std::string &ids, std::uint64_t seed, const std::string &sizes,
              const std::string &out) {
  const auto parts = SplitCorpus(ReadLines(ids), ParseSplitSizes(sizes, seed));
  std::string tsv = "label\tdoc_id\n";
  for (const auto &[label, docs] : parts) {
    for (const auto &d : docs) tsv += label + "\t" + d + "\n";
  }
  if (out.empty()) {
    std::cout << tsv;
    return kOk;
  }
  WriteFile(out, tsv);
  for (const auto &[label, docs] : parts) {
    std::cout << fmt::format("{:<12} {}\n", label, docs.size());
  }
  return kOk;
}

int EvalAggregate(const std::string &dir, const std::string &out) {
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SiteReport> reports;
  for (const auto &f : files) {
    try {
      reports.push_back(SiteReportFromJson(nlohmann::json::parse(ReadFile(f.string()))));
    } catch (const std::exception &e) {
      throw InputError(f.filename().string() + ": " + e.what());
    }
  }
  const auto rows = AggregateSiteReports(reports);
  std::cout << FormatAggregateTable(rows);
  if (!out.empty()) WriteFile(out, FormatAggregateTsv(rows));
  return kOk;
}

Service *g_service = nullptr;

void HandleSignal(int) {
  if (g_service) g_service->Stop();
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string rules, ontology, token, static_dir, spill_dir;
  int threads = 8;
};

int Serve(const ServeArgs &a) {
  Ontology ontology;
  if (!a.ontology.empty()) ontology = Ontology::Load(a.ontology);
  ServiceOptions options;
  options.token = a.token;
  options.threads = a.threads;
  if (!a.static_dir.empty()) options.static_dir = a.static_dir;
  if (!a.spill_dir.empty()) options.spill_dir = a.spill_dir;
  Service service(LoadRulePackage(a.rules), std::move(ontology), options);
  g_service = &service;
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  std::cerr << fmt::format("listening on {}:{}\n", a.host, a.port);
  service.Run(a.host, a.port);
  g_service = nullptr;
  return kOk;
}

int AnnotateText(const std::string &rules, const std::string &file,
                 const std::string &text, const std::string &date) {
  const auto matchers = CompileRulePackage(LoadRulePackage(rules));
  std::optional<Date> doc_date;
  if (!date.empty()) {
    doc_date = ParseIsoDate(date);
    if (!doc_date) throw InputError("date must be YYYY-MM-DD");
  }
  const std::string id = file.empty() ? "text" : fs::path(file).stem().string();
  const Document doc(id, file.empty() ? text : ReadFile(file), doc_date);
  std::vector<MentionRecord> records;
  for (auto &m : Annotate(doc, *matchers)) records.push_back({id, std::move(m)});
  std::cout << FormatMentionFile(records);
  return kOk;
}

int RulesValidate(const std::string &path) {
  const RulePackage p = LoadRulePackage(path);
  const auto report = ValidateRulePackage(p);
  for (const auto &w : report.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto &v : report.violations) std::cerr << "error: " << v << "\n";
  if (!report.violations.empty()) return kFatal;
  CompileRulePackage(p);
  std::cout << fmt::format("{} {}: {} concepts, {} dictionary entries, {} context rules\n",
                           p.name, p.version, p.concepts.size(), p.dictionary.size(),
                           p.context_rules.size());
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Rule-based clinical concept extraction"};
  app.require_subcommand(1);
  int code = kOk;
  std::function<int()> action;

  auto *pipeline = app.add_subcommand("pipeline", "Batch extraction over note sources");
  pipeline->require_subcommand(1);
  std::string config;
  auto *run = pipeline->add_subcommand("run", "Run a pipeline config");
  run->add_option("--config", config, "Pipeline config (JSON)")->required();
  run->callback([&] { action = [&] { return PipelineRun(config); }; });
  auto *validate = pipeline->add_subcommand("validate-config", "Check a pipeline config");
  validate->add_option("path", config, "Pipeline config (JSON)")->required();
  validate->callback([&] { action = [&] { return PipelineValidate(config); }; });

  auto *eval = app.add_subcommand("eval", "Mention-level evaluation");
  eval->require_subcommand(1);
  EvalRunArgs er;
  auto *eval_run = eval->add_subcommand("run", "Score system mentions against gold");
  eval_run->add_option("--gold", er.gold, "Directory of .txt/.ann pairs")->required();
  eval_run->add_option("--system", er.system, "Mention TSV or NOTE_NLP file")->required();
  eval_run->add_option("--mode", er.mode, "span | span+certainty");
  eval_run->add_option("--labels", er.labels, "Error category labels (TSV)");
  eval_run->add_option("--out", er.out, "Directory for metrics.tsv, errors.tsv, site_report.json");
  eval_run->add_option("--site", er.site, "Site name for the report");
  eval_run->add_option("--dataset", er.dataset, "Dataset name for the report");
  eval_run->callback([&] { action = [&] { return EvalRun(er); }; });

  std::string iaa_a, iaa_b;
  auto *iaa = eval->add_subcommand("iaa", "Agreement between two annotators");
  iaa->add_option("--a", iaa_a, "First annotator directory")->required();
  iaa->add_option("--b", iaa_b, "Second annotator directory")->required();
  iaa->callback([&] { action = [&] { return EvalIaa(iaa_a, iaa_b); }; });

  std::string ids, sizes, split_out;
  std::uint64_t seed = 0;
  auto *split = eval->add_subcommand("split", "Seeded corpus split");
  split->add_option("--ids", ids, "File with one document id per line")->required();
  split->add_option("--seed", seed, "Shuffle seed")->required();
  split->add_option("--sizes", sizes, "label=size,...")->required();
  split->add_option("--out", split_out, "Write label<TAB>doc_id rows here");
  split->callback([&] { action = [&] { return EvalSplit(ids, seed, sizes, split_out); }; });

  std::string reports, aggregate_out;
  auto *aggregate = eval->add_subcommand("aggregate", "Pool site reports");
  aggregate->add_option("--reports", reports, "Directory of site report JSON files")->required();
  aggregate->add_option("--out", aggregate_out, "Write the table as TSV here");
  aggregate->callback([&] { action = [&] { return EvalAggregate(reports, aggregate_out); }; });

  ServeArgs sa;
  auto *serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", sa.port, "Port")->required();
  serve->add_option("--rules", sa.rules, "Default rule package (directory or zip)")->required();
  serve->add_option("--ontology", sa.ontology, "Ontology TSV");
  serve->add_option("--token", sa.token, "Bearer token for uploads");
  serve->add_option("--host", sa.host, "Bind address");
  serve->add_option("--static", sa.static_dir, "Directory served at /");
  serve->add_option("--spill-dir", sa.spill_dir, "Persist uploaded session packages here");
  serve->add_option("--threads", sa.threads, "Worker threads");
  serve->callback([&] { action = [&] { return Serve(sa); }; });

  std::string rules, file, text, date;
  auto *annotate = app.add_subcommand("annotate", "Annotate one text and print mentions");
  annotate->add_option("--rules", rules, "Rule package")->required();
  auto *file_opt = annotate->add_option("--file", file, "Text file");
  annotate->add_option("--text", text, "Inline text")->excludes(file_opt);
  annotate->add_option("--date", date, "Document date (YYYY-MM-DD)");
  annotate->callback([&] { action = [&] { return AnnotateText(rules, file, text, date); }; });

  std::string rules_path;
  auto *rules_cmd = app.add_subcommand("rules", "Rule package tools");
  rules_cmd->require_subcommand(1);
  auto *rules_validate = rules_cmd->add_subcommand("validate", "Parse, validate and compile");
  rules_validate->add_option("path", rules_path, "Package directory or zip")->required();
  rules_validate->callback([&] { action = [&] { return RulesValidate(rules_path); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? kOk : kFatal;
  }
  try {
    code = action();
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kFatal;
  }
  return code;
}
