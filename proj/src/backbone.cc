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

#include "cliniex/backbone.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "cliniex/csv.h"
#include "cliniex/errors.h"
#include "cliniex/utf8.h"

namespace cliniex {

namespace fs = std::filesystem;

const std::vector<std::string> kNoteColumns = {
    "note_id", "person_id", "note_date", "note_title", "note_text"};

const std::vector<std::string> kNoteNlpColumns = {
    "note_nlp_id",   "note_id",
    "section_concept_id", "snippet",
    "offset",        "lexical_variant",
    "note_nlp_concept", "note_nlp_source_concept_id",
    "nlp_system",    "nlp_date",
    "nlp_datetime",  "term_exists",
    "term_temporal", "term_modifiers"};

namespace {

constexpr std::size_t kSnippetWindow = 40;

std::optional<std::int64_t> ParseInt(std::string_view s) {
  s = Trim(s);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return value;
}

// Collects the raw field values of one source unit and turns them into a
// note, applying defaults.
class NoteBuilder {
 public:
  explicit NoteBuilder(const SourceConfig &cfg) : cfg_(cfg) {}

  // Returns an error message, or nullopt when `note` was filled in.
  std::optional<std::string> Build(
      const std::function<std::optional<std::string>(const std::string &)>
          &lookup,
      NoteRecord &note, std::optional<Date> &anchor) const {
    auto value = [&](const std::string &field) -> std::optional<std::string> {
      auto v = lookup(Column(field));
      if (v && !v->empty()) return v;
      auto d = cfg_.defaults.find(field);
      if (d != cfg_.defaults.end()) return d->second;
      return v;
    };
    auto id = value("note_id");
    if (!id || id->empty()) return "missing note_id";
    auto note_id = ParseInt(*id);
    if (!note_id) return "bad note_id '" + *id + "'";
    note.note_id = *note_id;

    auto person = value("person_id");
    if (!person || person->empty()) return "missing person_id";
    auto person_id = ParseInt(*person);
    if (!person_id) return "bad person_id '" + *person + "'";
    note.person_id = *person_id;

    auto date = value("note_date");
    if (!date || date->empty()) return "missing note_date";
    auto parsed = ParseIsoDate(*date);
    if (!parsed) return "bad note_date '" + *date + "'";
    note.note_date = *parsed;

    note.note_title = value("note_title").value_or("");
    auto text = value("note_text");
    if (!text) return "missing note_text";
    note.note_text = *text;

    anchor.reset();
    if (cfg_.filter.anchor_date_column) {
      if (auto a = lookup(*cfg_.filter.anchor_date_column)) {
        anchor = ParseIsoDate(*a);
      }
    }
    return std::nullopt;
  }

  std::string Column(const std::string &field) const {
    auto it = cfg_.mapping.find(field);
    return it == cfg_.mapping.end() ? field : it->second;
  }

  bool Keep(const NoteRecord &note, const std::optional<Date> &anchor) const {
    const NoteFilter &f = cfg_.filter;
    if (f.min_chars && utf8::Length(note.note_text) < *f.min_chars) {
      return false;
    }
    if (!f.title_allowlist.empty()) {
      const std::string title = ToLowerAscii(Trim(note.note_title));
      bool listed = false;
      for (const auto &t : f.title_allowlist) {
        if (ToLowerAscii(Trim(t)) == title) listed = true;
      }
      if (!listed) return false;
    }
    if (f.anchor_date_column) {
      if (!anchor) return false;
      const int before = DaysBetween(note.note_date, *anchor);
      if (before < 0 || before > f.max_days_before_anchor) return false;
    }
    return true;
  }

 private:
  const SourceConfig &cfg_;
};

// Applies filtering and id uniqueness, then emits.
class Collector {
 public:
  Collector(const NoteBuilder &builder, ReadStats &stats,
            const std::function<void(NoteRecord)> &emit)
      : builder_(builder), stats_(stats), emit_(emit) {}

  void Unit(const std::string &unit,
            const std::function<std::optional<std::string>(const std::string &)>
                &lookup) {
    ++stats_.units;
    NoteRecord note;
    std::optional<Date> anchor;
    if (auto error = builder_.Build(lookup, note, anchor)) {
      Fail(unit, *error);
      return;
    }
    Accept(unit, std::move(note), anchor);
  }

  void Fail(const std::string &unit, const std::string &message) {
    stats_.errors.push_back({unit, message});
  }

  void Accept(const std::string &unit, NoteRecord note,
              const std::optional<Date> &anchor) {
    if (!seen_.insert(note.note_id).second) {
      Fail(unit, "duplicate note_id " + std::to_string(note.note_id));
      return;
    }
    if (!builder_.Keep(note, anchor)) {
      ++stats_.filtered;
      return;
    }
    ++stats_.notes;
    emit_(std::move(note));
  }

 private:
  const NoteBuilder &builder_;
  ReadStats &stats_;
  const std::function<void(NoteRecord)> &emit_;
  std::set<std::int64_t> seen_;
};

void ReadDelimited(const SourceConfig &cfg, const NoteBuilder &builder,
                   Collector &out) {
  std::ifstream in(cfg.location, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + cfg.location);
  CsvReader reader(in, cfg.delimiter);
  std::vector<std::string> header;
  try {
    if (!reader.Next(header)) return;
  } catch (const ParseError &e) {
    throw ParseError(cfg.location, e.line(), e.message());
  }
  if (!header.empty() && StartsWith(header[0], "\xEF\xBB\xBF")) {
    header[0].erase(0, 3);
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    index.emplace(std::string(Trim(header[i])), i);
  }
  for (const auto &field : kNoteColumns) {
    const std::string column = builder.Column(field);
    if (!index.contains(column) && !cfg.defaults.contains(field) &&
        field != "note_title") {
      throw IngestionError(cfg.location + ": missing column '" + column + "'");
    }
  }
  if (cfg.filter.anchor_date_column &&
      !index.contains(*cfg.filter.anchor_date_column)) {
    throw IngestionError(cfg.location + ": missing column '" +
                         *cfg.filter.anchor_date_column + "'");
  }

  std::vector<std::string> row;
  while (true) {
    try {
      if (!reader.Next(row)) break;
    } catch (const ParseError &e) {
      throw ParseError(cfg.location, e.line(), e.message());
    }
    if (row.size() == 1 && Trim(row[0]).empty()) continue;
    const std::string unit = "line " + std::to_string(reader.line());
    if (row.size() != header.size()) {
      out.Fail(unit, fmt::format("expected {} fields, found {}",
                                 header.size(), row.size()));
      continue;
    }
    out.Unit(unit, [&](const std::string &column) -> std::optional<std::string> {
      auto it = index.find(column);
      if (it == index.end()) return std::nullopt;
      return row[it->second];
    });
  }
}

void ReadLineJson(const SourceConfig &cfg, Collector &out) {
  std::ifstream in(cfg.location, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + cfg.location);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (Trim(line).empty()) continue;
    const std::string unit = "line " + std::to_string(number);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      out.Fail(unit, "bad JSON");
      continue;
    }
    if (!j.is_object()) {
      out.Fail(unit, "not a JSON object");
      continue;
    }
    out.Unit(unit, [&](const std::string &key) -> std::optional<std::string> {
      auto it = j.find(key);
      if (it == j.end() || it->is_null()) return std::nullopt;
      if (it->is_string()) return it->get<std::string>();
      return it->dump();
    });
  }
}

void ReadTextDirectory(const SourceConfig &cfg, const NoteBuilder &builder,
                       Collector &out) {
  if (!fs::is_directory(cfg.location)) {
    throw std::runtime_error("not a directory: " + cfg.location);
  }
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(cfg.location)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto &path : files) {
    const std::string name = path.filename().string();
    std::map<std::string, std::string> values;
    values["note_id"] = std::to_string(NoteIdForFileName(name));
    values["note_title"] = path.stem().string();
    values["note_text"] = ReadFile(path.string());
    fs::path sidecar = path;
    sidecar.replace_extension(".date");
    if (fs::exists(sidecar)) {
      values["note_date"] = std::string(Trim(ReadFile(sidecar.string())));
    }
    auto title = cfg.defaults.find("note_title");
    if (title != cfg.defaults.end()) values["note_title"] = title->second;
    // Built-in values are addressed by field name; mapping does not apply.
    out.Unit(name, [&](const std::string &column) -> std::optional<std::string> {
      for (const auto &field : kNoteColumns) {
        if (builder.Column(field) == column) {
          auto it = values.find(field);
          if (it != values.end()) return it->second;
        }
      }
      return std::nullopt;
    });
  }
}

std::string ResolvePath(const std::string &path, const std::string &base) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

SourceKind ParseSourceKind(const std::string &s) {
  if (s == "delimited-file") return SourceKind::kDelimitedFile;
  if (s == "line-json") return SourceKind::kLineJson;
  if (s == "text-directory") return SourceKind::kTextDirectory;
  throw ParseError("config", 0, "unknown source kind '" + s + "'");
}

SinkKind ParseSinkKind(const std::string &s) {
  if (s == "delimited-file") return SinkKind::kDelimitedFile;
  if (s == "line-json") return SinkKind::kLineJson;
  throw ParseError("config", 0, "unknown sink kind '" + s + "'");
}

void CheckKeys(const nlohmann::json &j, const char *section,
               std::initializer_list<const char *> allowed) {
  if (!j.is_object()) {
    throw ParseError("config", 0, std::string(section) + " must be an object");
  }
  for (const auto &[key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char *a) {
          return key == a;
        }) == allowed.end()) {
      throw ParseError("config", 0,
                       "unknown key '" + key + "' in " + section);
    }
  }
}

std::map<std::string, std::string> StringMap(const nlohmann::json &j,
                                             const char *what) {
  std::map<std::string, std::string> out;
  if (j.is_null()) return out;
  if (!j.is_object()) {
    throw ParseError("config", 0, std::string(what) + " must be an object");
  }
  for (const auto &[key, value] : j.items()) {
    if (std::find(kNoteColumns.begin(), kNoteColumns.end(), key) ==
        kNoteColumns.end()) {
      throw ParseError("config", 0,
                       std::string(what) + ": unknown note field '" + key + "'");
    }
    out[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return out;
}

}  // namespace

Document NoteRecord::ToDocument() const {
  return Document(std::to_string(note_id), note_text, note_date);
}

PipelineConfig PipelineConfigFromJson(const nlohmann::json &j,
                                      const std::string &base_dir) {
  PipelineConfig cfg;
  try {
    CheckKeys(j, "config",
              {"source", "sink", "rule_package", "parallelism", "nlp_system",
               "run_date"});
    const auto &src = j.at("source");
    CheckKeys(src, "source",
              {"kind", "location", "delimiter", "mapping", "defaults",
               "filter"});
    cfg.source.kind = ParseSourceKind(src.at("kind").get<std::string>());
    cfg.source.location =
        ResolvePath(src.at("location").get<std::string>(), base_dir);
    if (src.contains("delimiter")) {
      const auto d = src["delimiter"].get<std::string>();
      if (d.size() != 1) {
        throw ParseError("config", 0, "delimiter must be one character");
      }
      cfg.source.delimiter = d[0];
    }
    cfg.source.mapping = StringMap(src.value("mapping", nlohmann::json()), "mapping");
    cfg.source.defaults =
        StringMap(src.value("defaults", nlohmann::json()), "defaults");
    if (src.contains("filter")) {
      const auto &f = src["filter"];
      CheckKeys(f, "filter",
                {"min_chars", "title_allowlist", "anchor_date_column",
                 "max_days_before_anchor"});
      if (f.contains("min_chars")) {
        cfg.source.filter.min_chars = f["min_chars"].get<std::size_t>();
      }
      cfg.source.filter.title_allowlist =
          f.value("title_allowlist", std::vector<std::string>{});
      if (f.contains("anchor_date_column")) {
        cfg.source.filter.anchor_date_column =
            f["anchor_date_column"].get<std::string>();
      }
      cfg.source.filter.max_days_before_anchor =
          f.value("max_days_before_anchor", 14);
    }

    const auto &sink = j.at("sink");
    CheckKeys(sink, "sink", {"kind", "location"});
    cfg.sink.kind = ParseSinkKind(sink.at("kind").get<std::string>());
    cfg.sink.location =
        ResolvePath(sink.at("location").get<std::string>(), base_dir);

    const char *home = std::getenv("OHNLP_RULE_HOME");
    const std::string package = j.value("rule_package", std::string());
    if (package.empty()) {
      cfg.rule_package = home ? home : "";
    } else {
      cfg.rule_package = ResolvePath(package, base_dir);
      if (home && !fs::path(package).is_absolute() &&
          !fs::exists(cfg.rule_package)) {
        cfg.rule_package = (fs::path(home) / package).string();
      }
    }
    cfg.parallelism = j.value("parallelism", 1);
    cfg.nlp_system = j.value("nlp_system", cfg.nlp_system);
    if (j.contains("run_date")) {
      cfg.run_date = ParseIsoDate(j["run_date"].get<std::string>());
      if (!cfg.run_date) throw ParseError("config", 0, "bad run_date");
    }
  } catch (const nlohmann::json::exception &e) {
    throw ParseError("config", 0, e.what());
  }
  return cfg;
}

PipelineConfig LoadPipelineConfig(const std::string &path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(path, 0, e.what());
  }
  try {
    return PipelineConfigFromJson(
        j, fs::absolute(path).parent_path().string());
  } catch (const ParseError &e) {
    throw ParseError(path, 0, e.message());
  }
}

std::vector<std::string> ValidatePipelineConfig(const PipelineConfig &cfg) {
  std::vector<std::string> problems;
  const auto &src = cfg.source;
  if (src.location.empty()) {
    problems.push_back("source.location is empty");
  } else if (src.kind == SourceKind::kTextDirectory
                 ? !fs::is_directory(src.location)
                 : !fs::is_regular_file(src.location)) {
    problems.push_back("source not found: " + src.location);
  } else if (src.kind == SourceKind::kDelimitedFile) {
    std::ifstream in(src.location, std::ios::binary);
    CsvReader reader(in, src.delimiter);
    std::vector<std::string> header;
    try {
      if (reader.Next(header)) {
        NoteBuilder builder(src);
        for (const auto &field : kNoteColumns) {
          const std::string column = builder.Column(field);
          if (std::find(header.begin(), header.end(), column) == header.end() &&
              !src.defaults.contains(field) && field != "note_title") {
            problems.push_back("source has no column '" + column +
                               "' and no default for " + field);
          }
        }
      }
    } catch (const ParseError &e) {
      problems.push_back("source header: " + e.message());
    }
  }
  if (src.kind == SourceKind::kTextDirectory &&
      !src.defaults.contains("person_id")) {
    // Text files carry no person; the default is required.
    problems.push_back("text-directory sources need defaults.person_id");
  }
  if (cfg.sink.location.empty()) {
    problems.push_back("sink.location is empty");
  } else {
    const fs::path parent = fs::absolute(cfg.sink.location).parent_path();
    if (!fs::is_directory(parent)) {
      problems.push_back("sink directory does not exist: " + parent.string());
    }
  }
  if (cfg.rule_package.empty()) {
    problems.push_back("no rule_package and OHNLP_RULE_HOME is not set");
  } else if (!fs::exists(cfg.rule_package)) {
    problems.push_back("rule package not found: " + cfg.rule_package);
  }
  if (cfg.parallelism < 1) problems.push_back("parallelism must be >= 1");
  return problems;
}

ReadStats ReadNotes(const SourceConfig &cfg,
                    const std::function<void(NoteRecord)> &emit) {
  ReadStats stats;
  NoteBuilder builder(cfg);
  Collector out(builder, stats, emit);
  switch (cfg.kind) {
    case SourceKind::kDelimitedFile:
      ReadDelimited(cfg, builder, out);
      break;
    case SourceKind::kLineJson:
      ReadLineJson(cfg, out);
      break;
    case SourceKind::kTextDirectory:
      ReadTextDirectory(cfg, builder, out);
      break;
  }
  return stats;
}

std::vector<NoteRecord> ReadNotes(const SourceConfig &cfg, ReadStats *stats) {
  std::vector<NoteRecord> notes;
  ReadStats s = ReadNotes(cfg, [&](NoteRecord n) { notes.push_back(std::move(n)); });
  if (stats) *stats = std::move(s);
  return notes;
}

std::int64_t NoteIdForFileName(std::string_view file_name) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : file_name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return static_cast<std::int64_t>(h & 0x7FFFFFFFFFFFFFFFull);
}

NoteNlpRecord MentionToNoteNlp(const ConceptMention &m, const NoteRecord &note,
                               std::int64_t seq, const std::string &system_tag,
                               const Date &run_date) {
  NoteNlpRecord r;
  r.note_nlp_id = seq;
  r.note_id = note.note_id;
  r.snippet = Snippet(note.note_text, m.span, kSnippetWindow);
  r.offset = fmt::format("{}-{}", m.span.start(), m.span.end());
  r.lexical_variant = m.matched_text;
  r.note_nlp_concept = m.concept_type;
  r.nlp_system = system_tag;
  r.nlp_date = run_date;
  r.term_exists = m.certainty == Certainty::kPositive &&
                  m.experiencer == Experiencer::kPatient;
  r.term_temporal = m.normalized_date ? FormatIsoDate(*m.normalized_date) : "";
  r.term_modifiers = fmt::format("certainty={};experiencer={}",
                                 CertaintyName(m.certainty),
                                 ExperiencerName(m.experiencer));
  return r;
}

std::string NoteNlpCsvHeader() { return CsvRow(kNoteNlpColumns); }

std::string NoteNlpCsvRow(const NoteNlpRecord &r) {
  return CsvRow({std::to_string(r.note_nlp_id), std::to_string(r.note_id), "",
                 r.snippet, r.offset, r.lexical_variant, r.note_nlp_concept, "",
                 r.nlp_system, FormatIsoDate(r.nlp_date), "",
                 r.term_exists ? "Y" : "N", r.term_temporal,
                 r.term_modifiers});
}

nlohmann::json NoteNlpToJson(const NoteNlpRecord &r) {
  nlohmann::json j;
  j["note_nlp_id"] = r.note_nlp_id;
  j["note_id"] = r.note_id;
  j["section_concept_id"] = nullptr;
  j["snippet"] = r.snippet;
  j["offset"] = r.offset;
  j["lexical_variant"] = r.lexical_variant;
  j["note_nlp_concept"] = r.note_nlp_concept;
  j["note_nlp_source_concept_id"] = nullptr;
  j["nlp_system"] = r.nlp_system;
  j["nlp_date"] = FormatIsoDate(r.nlp_date);
  j["nlp_datetime"] = nullptr;
  j["term_exists"] = r.term_exists;
  j["term_temporal"] = r.term_temporal;
  j["term_modifiers"] = r.term_modifiers;
  return j;
}

std::vector<MentionRecord> ParseNoteNlpFile(std::string_view contents,
                                            const std::string &file_name) {
  std::vector<MentionRecord> out;
  auto add = [&](int line, const std::string &note_id, const std::string &offset,
                 const std::string &lexical, const std::string &concept_type,
                 const std::string &temporal, const std::string &modifiers) {
    const auto dash = offset.find('-');
    std::optional<std::int64_t> start, end;
    if (dash != std::string::npos) {
      start = ParseInt(std::string_view(offset).substr(0, dash));
      end = ParseInt(std::string_view(offset).substr(dash + 1));
    }
    if (!start || !end || *start < 0 || *end <= *start) {
      throw ParseError(file_name, line, "bad offset '" + offset + "'");
    }
    ConceptMention m{Span(static_cast<std::size_t>(*start),
                          static_cast<std::size_t>(*end)),
                     concept_type,     Certainty::kPositive,
                     lexical,          Experiencer::kPatient,
                     std::nullopt,     ""};
    if (!temporal.empty()) {
      m.normalized_date = ParseIsoDate(temporal);
      if (!m.normalized_date) {
        throw ParseError(file_name, line, "bad term_temporal '" + temporal + "'");
      }
    }
    for (const auto &pair : Split(modifiers, ';')) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos) continue;
      const std::string key(Trim(pair.substr(0, eq)));
      const std::string value(Trim(pair.substr(eq + 1)));
      if (key == "certainty") {
        auto c = ParseCertainty(value);
        if (!c) {
          throw VocabularyError(file_name, line,
                                "unknown certainty '" + value + "'");
        }
        m.certainty = *c;
      } else if (key == "experiencer") {
        auto e = ParseExperiencer(value);
        if (!e) {
          throw VocabularyError(file_name, line,
                                "unknown experiencer '" + value + "'");
        }
        m.experiencer = *e;
      }
    }
    out.push_back({note_id, std::move(m)});
  };

  const auto first = contents.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && contents[first] == '{') {
    int number = 0;
    for (const auto &line : Split(contents, '\n')) {
      ++number;
      if (Trim(line).empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        auto str = [&](const char *key) {
          const auto &v = j.at(key);
          return v.is_null() ? std::string()
                 : v.is_string() ? v.get<std::string>()
                                 : v.dump();
        };
        add(number, str("note_id"), str("offset"), str("lexical_variant"),
            str("note_nlp_concept"), str("term_temporal"),
            str("term_modifiers"));
      } catch (const nlohmann::json::exception &e) {
        throw ParseError(file_name, number, e.what());
      }
    }
    return out;
  }

  std::istringstream in{std::string(contents)};
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.Next(header)) return out;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
  for (const char *required : {"note_id", "offset", "lexical_variant",
                               "note_nlp_concept", "term_modifiers"}) {
    if (!index.contains(required)) {
      throw ParseError(file_name, 1,
                       std::string("missing column '") + required + "'");
    }
  }
  std::vector<std::string> row;
  while (reader.Next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) {
      throw ParseError(file_name, reader.line(), "wrong number of fields");
    }
    auto col = [&](const char *name) {
      auto it = index.find(name);
      return it == index.end() ? std::string() : row[it->second];
    };
    add(reader.line(), col("note_id"), col("offset"), col("lexical_variant"),
        col("note_nlp_concept"), col("term_temporal"), col("term_modifiers"));
  }
  return out;
}

nlohmann::json RunSummary::ToJson() const {
  nlohmann::json errs = nlohmann::json::array();
  for (const auto &e : errors) {
    errs.push_back({{"unit", e.unit}, {"message", e.message}});
  }
  return {{"notes_in", notes_in},
          {"notes_failed", notes_failed},
          {"notes_filtered", notes_filtered},
          {"mentions_out", mentions_out},
          {"elapsed_seconds", elapsed_seconds},
          {"errors", errs}};
}

RunSummary RunPipeline(const PipelineConfig &cfg) {
  auto problems = ValidatePipelineConfig(cfg);
  if (!problems.empty()) throw InputError(problems.front());
  auto matchers = CompileRulePackage(LoadRulePackage(cfg.rule_package));
  return RunPipeline(cfg, *matchers);
}

RunSummary RunPipeline(const PipelineConfig &cfg,
                       const CompiledMatchers &matchers) {
  if (cfg.parallelism < 1) throw InputError("parallelism must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const Date run_date = cfg.run_date.value_or(Today());

  ReadStats stats;
  std::vector<NoteRecord> notes = ReadNotes(cfg.source, &stats);

  struct Row {
    std::int64_t note_id;
    ConceptMention mention;
    std::size_t note;
  };
  std::vector<std::vector<Row>> results(notes.size());
  std::vector<std::optional<std::string>> failures(notes.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < notes.size(); i = next++) {
      try {
        for (auto &m : Annotate(notes[i].ToDocument(), matchers)) {
          results[i].push_back({notes[i].note_id, std::move(m), i});
        }
      } catch (const std::exception &e) {
        results[i].clear();
        failures[i] = e.what();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.parallelism), std::max<std::size_t>(1, notes.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto &t : pool) t.join();
  }

  RunSummary summary;
  summary.errors = stats.errors;
  summary.notes_in = stats.notes + stats.filtered;
  summary.notes_failed = stats.errors.size();
  summary.notes_filtered = stats.filtered;
  std::vector<Row> rows;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (failures[i]) {
      --summary.notes_in;
      ++summary.notes_failed;
      summary.errors.push_back(
          {"note " + std::to_string(notes[i].note_id), *failures[i]});
      continue;
    }
    for (auto &r : results[i]) rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(), [](const Row &a, const Row &b) {
    return std::tie(a.note_id, a.mention.span, a.mention.concept_type) <
           std::tie(b.note_id, b.mention.span, b.mention.concept_type);
  });

  const std::string partial = cfg.sink.location + ".partial";
  try {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + partial);
    if (cfg.sink.kind == SinkKind::kDelimitedFile) out << NoteNlpCsvHeader() << "\n";
    std::int64_t seq = 0;
    for (const auto &r : rows) {
      const auto rec =
          MentionToNoteNlp(r.mention, notes[r.note], ++seq, cfg.nlp_system, run_date);
      if (cfg.sink.kind == SinkKind::kDelimitedFile) {
        out << NoteNlpCsvRow(rec) << "\n";
      } else {
        out << NoteNlpToJson(rec).dump() << "\n";
      }
    }
    out.close();
    if (!out) throw std::runtime_error("cannot write " + partial);
    fs::rename(partial, cfg.sink.location);
  } catch (...) {
    std::error_code ignored;
    fs::remove(partial, ignored);
    throw;
  }
  summary.mentions_out = rows.size();
  summary.elapsed_seconds = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
  return summary;
}

}  // namespace cliniex
