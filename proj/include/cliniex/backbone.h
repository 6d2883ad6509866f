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

// Ingestion and persistence around the engine. Notes come in as NOTE-shaped
// records from a delimited file, a line-delimited JSON file or a directory
// of text files; mentions go out as NOTE_NLP-shaped rows.

#ifndef CLINIEX_BACKBONE_H_
#define CLINIEX_BACKBONE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cliniex/engine.h"
#include "cliniex/model.h"

namespace cliniex {

struct NoteRecord {
  std::int64_t note_id = 0;
  std::int64_t person_id = 0;
  Date note_date;
  std::string note_title;
  std::string note_text;

  Document ToDocument() const;

  friend bool operator==(const NoteRecord &, const NoteRecord &) = default;
};

struct NoteNlpRecord {
  std::int64_t note_nlp_id = 0;
  std::int64_t note_id = 0;
  std::string snippet;
  std::string offset;  // "start-end"
  std::string lexical_variant;
  std::string note_nlp_concept;
  std::string nlp_system;
  Date nlp_date;
  bool term_exists = true;
  std::string term_temporal;   // ISO date or empty
  std::string term_modifiers;  // key=value pairs joined by ';'

  friend bool operator==(const NoteNlpRecord &,
                         const NoteNlpRecord &) = default;
};

extern const std::vector<std::string> kNoteColumns;
extern const std::vector<std::string> kNoteNlpColumns;

enum class SourceKind { kDelimitedFile, kLineJson, kTextDirectory };
enum class SinkKind { kDelimitedFile, kLineJson };

// Optional case-study style note selection. Off unless a field is set.
struct NoteFilter {
  std::optional<std::size_t> min_chars;
  // Exact, case-insensitive note_title matches.
  std::vector<std::string> title_allowlist;
  // Keeps notes dated at most `max_days_before_anchor` days before (and not
  // after) the date in this source column.
  std::optional<std::string> anchor_date_column;
  int max_days_before_anchor = 14;

  bool active() const {
    return min_chars || !title_allowlist.empty() || anchor_date_column;
  }
};

struct SourceConfig {
  SourceKind kind = SourceKind::kDelimitedFile;
  std::string location;
  char delimiter = ',';
  // NoteRecord field -> source column (or JSON key). Unmapped fields use
  // the column of the same name.
  std::map<std::string, std::string> mapping;
  // NoteRecord field -> value used when the column is absent or empty.
  std::map<std::string, std::string> defaults;
  NoteFilter filter;
};

struct SinkConfig {
  SinkKind kind = SinkKind::kDelimitedFile;
  std::string location;
};

struct PipelineConfig {
  SourceConfig source;
  SinkConfig sink;
  std::string rule_package;
  int parallelism = 1;
  std::string nlp_system = "cliniex";
  // Stamped into nlp_date; today when absent.
  std::optional<Date> run_date;
};

// Relative paths are resolved against `base_dir`. The rule package falls
// back to $OHNLP_RULE_HOME: a relative name is looked up there, and an
// absent one means the directory itself.
PipelineConfig PipelineConfigFromJson(const nlohmann::json &j,
                                      const std::string &base_dir = "");
PipelineConfig LoadPipelineConfig(const std::string &path);
// Problems that would stop a run, as readable messages.
std::vector<std::string> ValidatePipelineConfig(const PipelineConfig &cfg);

// A source unit that could not be turned into a note.
struct RecordError {
  std::string unit;  // "line 7", a file name...
  std::string message;
};

struct ReadStats {
  std::size_t units = 0;
  std::size_t notes = 0;
  std::size_t filtered = 0;
  std::vector<RecordError> errors;
};

// Streams notes to `emit` in source order. Record-level problems are
// collected in the returned stats and the record skipped; a missing mapped
// column throws IngestionError and an unreadable source std::runtime_error.
ReadStats ReadNotes(const SourceConfig &cfg,
                    const std::function<void(NoteRecord)> &emit);
std::vector<NoteRecord> ReadNotes(const SourceConfig &cfg,
                                  ReadStats *stats = nullptr);

// Stable id for a file in a text directory: 64-bit FNV-1a of the file name,
// cleared top bit.
std::int64_t NoteIdForFileName(std::string_view file_name);

NoteNlpRecord MentionToNoteNlp(const ConceptMention &m, const NoteRecord &note,
                               std::int64_t seq, const std::string &system_tag,
                               const Date &run_date);

std::string NoteNlpCsvHeader();
std::string NoteNlpCsvRow(const NoteNlpRecord &r);
nlohmann::json NoteNlpToJson(const NoteNlpRecord &r);

// NOTE_NLP rows (delimited or line JSON, detected from content) as
// canonical mention records with doc_id = note_id. Certainty and experiencer
// come from term_modifiers.
std::vector<MentionRecord> ParseNoteNlpFile(std::string_view contents,
                                            const std::string &file_name = "");

struct RunSummary {
  std::size_t notes_in = 0;
  std::size_t notes_failed = 0;
  std::size_t notes_filtered = 0;
  std::size_t mentions_out = 0;
  double elapsed_seconds = 0;
  std::vector<RecordError> errors;

  nlohmann::json ToJson() const;
};

// Reads, annotates with `parallelism` workers, sorts by (note_id, start),
// numbers rows from 1 and writes the sink through a temporary file that is
// renamed into place on success and removed on failure.
RunSummary RunPipeline(const PipelineConfig &cfg);
RunSummary RunPipeline(const PipelineConfig &cfg,
                       const CompiledMatchers &matchers);

}  // namespace cliniex

#endif  // CLINIEX_BACKBONE_H_
