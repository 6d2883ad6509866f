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

// HTTP facade over the engine: annotate, per-session rule upload, and the
// ontology-backed dictionary builder.

#ifndef CLINIEX_SERVICE_H_
#define CLINIEX_SERVICE_H_

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cliniex/ruleset.h"

namespace cliniex {

struct OntologyNode {
  std::string id;
  std::string label;
  std::optional<std::string> parent;
  std::vector<std::string> synonyms;
  std::string definition;
  // (ontology, code)
  std::vector<std::pair<std::string, std::string>> xrefs;
};

// A forest of ontology nodes loaded from a tab-separated file with columns
// id, parent_id, label, definition, synonyms ('|'-joined) and xrefs
// ('|'-joined ontology:code). A header row starting with "id" is skipped.
class Ontology {
 public:
  Ontology() = default;

  // Throws ParseError/IntegrityError with file and line on bad rows,
  // duplicate ids, unknown parents and cycles.
  static Ontology FromTsv(std::string_view contents,
                          const std::string &file_name = "");
  static Ontology Load(const std::string &path);

  const OntologyNode *Find(std::string_view id) const;
  // In file order.
  const std::vector<std::string> &Roots() const { return roots_; }
  const std::vector<std::string> &Children(std::string_view id) const;
  // `id` and its descendants in preorder.
  std::vector<std::string> Subtree(std::string_view id) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  std::map<std::string, OntologyNode, std::less<>> nodes_;
  std::map<std::string, std::vector<std::string>, std::less<>> children_;
  std::vector<std::string> roots_;
};

// The node and, while depth > 0, its children nested under "children".
// Every node carries "child_count" so a client can expand lazily.
nlohmann::json OntologyNodeToJson(const Ontology &ontology, std::string_view id,
                                  int depth);

// One entry per label and per synonym of every selected node (with its
// subtree when `descendants` is set), in selection then preorder order.
// Repeated surface forms are emitted once. The first xref fills
// source_ontology/source_code. Throws InputError on an empty selection or
// an invalid concept name, std::out_of_range naming an unknown node.
std::vector<DictionaryEntry> ExtractDictionary(
    const Ontology &ontology, const std::vector<std::string> &node_ids,
    const std::string &concept_type, bool descendants);

nlohmann::json DictionaryEntryToJson(const DictionaryEntry &e);

struct ServiceOptions {
  // When non-empty, POST /ruleset requires "Authorization: Bearer <token>".
  std::string token;
  std::chrono::seconds session_ttl = std::chrono::hours(24);
  // Uploaded archives are written here and reloaded on a session miss.
  std::optional<std::string> spill_dir;
  // Served at / when set.
  std::optional<std::string> static_dir;
  std::size_t max_text_chars = 3000;
  int threads = 8;
  // Request metadata (method, path, status, size, time) to stderr.
  bool log_requests = true;
};

// Session id -> compiled package. Lookups return a snapshot that stays
// valid however long the caller holds it; uploads replace the snapshot in
// one step.
class SessionStore {
 public:
  struct Entry {
    RulePackage package;
    std::shared_ptr<const CompiledMatchers> compiled;
    std::string archive;
    std::chrono::system_clock::time_point updated_at;
  };

  explicit SessionStore(std::chrono::seconds ttl,
                        std::optional<std::string> spill_dir = std::nullopt);

  std::shared_ptr<const Entry> Get(const std::string &session_id);
  void Put(const std::string &session_id, std::shared_ptr<const Entry> entry);
  // Drops sessions idle longer than the TTL; returns how many.
  std::size_t Evict();
  std::size_t size() const;

 private:
  struct Slot {
    std::shared_ptr<const Entry> entry;
    std::chrono::steady_clock::time_point last_used;
  };

  std::chrono::seconds ttl_;
  std::optional<std::string> spill_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, Slot> slots_;
};

// Letters, digits, '-' and '_', 1 to 64 characters.
bool IsValidSessionId(std::string_view id);

// Validates and compiles a parsed package. Throws InputError whose message
// lists the validation violations one per line, or PatternError.
std::shared_ptr<const SessionStore::Entry> BuildSessionEntry(
    RulePackage package, std::vector<std::string> *warnings);

class Service {
 public:
  Service(const RulePackage &default_package, Ontology ontology,
          ServiceOptions options = {});
  ~Service();

  Service(const Service &) = delete;
  Service &operator=(const Service &) = delete;

  // Binds and serves in a background thread; port 0 picks a free port.
  // Returns the bound port. Throws std::runtime_error when binding fails.
  int Start(const std::string &host, int port);
  // Serves on the calling thread until Stop().
  void Run(const std::string &host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cliniex

#endif  // CLINIEX_SERVICE_H_
