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

#include "cliniex/service.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "cliniex/archive.h"
#include "cliniex/engine.h"
#include "cliniex/errors.h"
#include "cliniex/model.h"
#include "cliniex/text.h"
#include "cliniex/utf8.h"

namespace cliniex {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Ontology

Ontology Ontology::FromTsv(std::string_view contents,
                           const std::string &file_name) {
  Ontology o;
  std::map<std::string, int> line_of;
  std::vector<std::string> order;
  int number = 0;
  bool first = true;
  for (auto &line : Split(contents, '\n')) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty() || line[0] == '#') continue;
    auto f = Split(line, '\t');
    if (first && f[0] == "id") {
      first = false;
      continue;
    }
    first = false;
    if (f.size() < 3 || f.size() > 6) {
      throw ParseError(file_name, number, "expected 3 to 6 tab-separated fields");
    }
    f.resize(6);
    OntologyNode node;
    node.id = std::string(Trim(f[0]));
    if (node.id.empty()) throw ParseError(file_name, number, "empty id");
    if (!Trim(f[1]).empty()) node.parent = std::string(Trim(f[1]));
    node.label = std::string(Trim(f[2]));
    if (node.label.empty()) throw ParseError(file_name, number, "empty label");
    node.definition = f[3];
    for (const auto &s : Split(f[4], '|')) {
      if (!Trim(s).empty()) node.synonyms.emplace_back(Trim(s));
    }
    for (const auto &x : Split(f[5], '|')) {
      const auto t = Trim(x);
      if (t.empty()) continue;
      const auto colon = t.find(':');
      if (colon == std::string_view::npos || colon == 0 || colon + 1 == t.size()) {
        throw ParseError(file_name, number,
                         "xref '" + std::string(t) + "' is not ontology:code");
      }
      node.xrefs.emplace_back(std::string(t.substr(0, colon)),
                              std::string(t.substr(colon + 1)));
    }
    if (!line_of.emplace(node.id, number).second) {
      throw IntegrityError(file_name, number, "duplicate id " + node.id);
    }
    // File order decides the order of roots and children.
    order.push_back(node.id);
    o.nodes_.emplace(node.id, std::move(node));
  }
  for (const auto &id : order) {
    const auto &node = o.nodes_.at(id);
    if (!node.parent) {
      o.roots_.push_back(id);
      continue;
    }
    if (!o.nodes_.contains(*node.parent)) {
      throw IntegrityError(file_name, line_of[id],
                           "unknown parent " + *node.parent);
    }
    o.children_[*node.parent].push_back(id);
  }
  for (const auto &id : order) {
    std::string at = id;
    for (std::size_t steps = 0; o.nodes_.at(at).parent; ++steps) {
      at = *o.nodes_.at(at).parent;
      if (at == id || steps > o.nodes_.size()) {
        throw IntegrityError(file_name, line_of[id], "cycle through " + id);
      }
    }
  }
  return o;
}

Ontology Ontology::Load(const std::string &path) {
  return FromTsv(ReadFile(path), fs::path(path).filename().string());
}

const OntologyNode *Ontology::Find(std::string_view id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const std::vector<std::string> &Ontology::Children(std::string_view id) const {
  static const std::vector<std::string> kNone;
  auto it = children_.find(id);
  return it == children_.end() ? kNone : it->second;
}

std::vector<std::string> Ontology::Subtree(std::string_view id) const {
  std::vector<std::string> out;
  std::vector<std::string> stack = {std::string(id)};
  while (!stack.empty()) {
    std::string at = std::move(stack.back());
    stack.pop_back();
    const auto &kids = Children(at);
    stack.insert(stack.end(), kids.rbegin(), kids.rend());
    out.push_back(std::move(at));
  }
  return out;
}

json OntologyNodeToJson(const Ontology &ontology, std::string_view id,
                        int depth) {
  const OntologyNode *node = ontology.Find(id);
  if (!node) throw std::out_of_range("unknown node " + std::string(id));
  json xrefs = json::array();
  for (const auto &[ont, code] : node->xrefs) {
    xrefs.push_back({{"ontology", ont}, {"code", code}});
  }
  const auto &kids = ontology.Children(id);
  json j = {{"id", node->id},
            {"label", node->label},
            {"parent", node->parent ? json(*node->parent) : json(nullptr)},
            {"definition", node->definition},
            {"synonyms", node->synonyms},
            {"xrefs", xrefs},
            {"child_count", kids.size()}};
  if (depth > 0) {
    json children = json::array();
    for (const auto &k : kids) {
      children.push_back(OntologyNodeToJson(ontology, k, depth - 1));
    }
    j["children"] = children;
  }
  return j;
}

std::vector<DictionaryEntry> ExtractDictionary(
    const Ontology &ontology, const std::vector<std::string> &node_ids,
    const std::string &concept_type, bool descendants) {
  if (node_ids.empty()) throw InputError("no nodes selected");
  if (!IsValidConceptName(concept_type)) {
    throw InputError("invalid concept name '" + concept_type + "'");
  }
  for (const auto &id : node_ids) {
    if (!ontology.Find(id)) throw std::out_of_range("unknown node " + id);
  }
  std::vector<std::string> nodes;
  std::set<std::string> seen_nodes;
  for (const auto &id : node_ids) {
    auto ids = descendants ? ontology.Subtree(id) : std::vector<std::string>{id};
    for (auto &n : ids) {
      if (seen_nodes.insert(n).second) nodes.push_back(std::move(n));
    }
  }
  std::vector<DictionaryEntry> out;
  std::set<std::string> seen_terms;
  for (const auto &id : nodes) {
    const OntologyNode &node = *ontology.Find(id);
    std::vector<std::string> forms = {node.label};
    forms.insert(forms.end(), node.synonyms.begin(), node.synonyms.end());
    for (const auto &term : forms) {
      if (!seen_terms.insert(term).second) continue;
      DictionaryEntry e;
      e.term = term;
      e.concept_type = concept_type;
      if (!node.xrefs.empty()) {
        e.source_ontology = node.xrefs.front().first;
        e.source_code = node.xrefs.front().second;
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

json DictionaryEntryToJson(const DictionaryEntry &e) {
  return {{"term", e.term},
          {"concept", e.concept_type},
          {"source_code", e.source_code ? json(*e.source_code) : json(nullptr)},
          {"source_ontology",
           e.source_ontology ? json(*e.source_ontology) : json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Sessions

bool IsValidSessionId(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '-' || c == '_';
  });
}

std::shared_ptr<const SessionStore::Entry> BuildSessionEntry(
    RulePackage package, std::vector<std::string> *warnings) {
  auto report = ValidateRulePackage(package);
  if (!report.violations.empty()) {
    std::string joined;
    for (const auto &v : report.violations) {
      if (!joined.empty()) joined += "\n";
      joined += v;
    }
    throw InputError(joined);
  }
  if (warnings) *warnings = report.warnings;
  auto entry = std::make_shared<SessionStore::Entry>();
  entry->compiled = CompileRulePackage(package);
  entry->archive = SerializeRulePackageArchive(package);
  entry->package = std::move(package);
  entry->updated_at = std::chrono::system_clock::now();
  return entry;
}

SessionStore::SessionStore(std::chrono::seconds ttl,
                           std::optional<std::string> spill_dir)
    : ttl_(ttl), spill_dir_(std::move(spill_dir)) {
  if (spill_dir_) fs::create_directories(*spill_dir_);
}

std::shared_ptr<const SessionStore::Entry> SessionStore::Get(
    const std::string &session_id) {
  const auto now = std::chrono::steady_clock::now();
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = slots_.find(session_id);
    if (it != slots_.end()) {
      if (now - it->second.last_used <= ttl_) {
        it->second.last_used = now;
        return it->second.entry;
      }
      slots_.erase(it);
      if (spill_dir_) {
        std::error_code ec;
        fs::remove(fs::path(*spill_dir_) / (session_id + ".zip"), ec);
      }
      return nullptr;
    }
  }
  if (!spill_dir_ || !IsValidSessionId(session_id)) return nullptr;
  const fs::path file = fs::path(*spill_dir_) / (session_id + ".zip");
  if (!fs::exists(file)) return nullptr;
  std::shared_ptr<const Entry> entry;
  try {
    entry = BuildSessionEntry(ParseRulePackageArchive(ReadFile(file.string())),
                              nullptr);
  } catch (const std::exception &) {
    return nullptr;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = slots_.emplace(session_id, Slot{entry, now});
  return it->second.entry;
}

void SessionStore::Put(const std::string &session_id,
                       std::shared_ptr<const Entry> entry) {
  if (spill_dir_) {
    const fs::path file = fs::path(*spill_dir_) / (session_id + ".zip");
    const fs::path tmp = file.string() + ".tmp";
    WriteFile(tmp.string(), entry->archive);
    fs::rename(tmp, file);
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    slots_[session_id] = Slot{std::move(entry), std::chrono::steady_clock::now()};
  }
  Evict();
}

std::size_t SessionStore::Evict() {
  const auto now = std::chrono::steady_clock::now();
  std::vector<std::string> dropped;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto it = slots_.begin(); it != slots_.end();) {
      if (now - it->second.last_used > ttl_) {
        dropped.push_back(it->first);
        it = slots_.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (spill_dir_) {
    for (const auto &id : dropped) {
      std::error_code ec;
      fs::remove(fs::path(*spill_dir_) / (id + ".zip"), ec);
    }
  }
  return dropped.size();
}

std::size_t SessionStore::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return slots_.size();
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

constexpr char kJson[] = "application/json";
constexpr char kDefaultSession[] = "default";

std::string DecodeBase64(std::string_view in) {
  static const auto kTable = [] {
    std::array<int, 256> t;
    t.fill(-1);
    const std::string_view alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
      t[static_cast<unsigned char>(alphabet[i])] = static_cast<int>(i);
    }
    return t;
  }();
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  std::size_t padding = 0;
  for (char c : in) {
    if (c == '=') {
      ++padding;
      continue;
    }
    if (c == '\n' || c == '\r' || c == ' ') continue;
    const int v = kTable[static_cast<unsigned char>(c)];
    if (v < 0 || padding > 0) throw InputError("archive_base64 is not base64");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xff));
    }
  }
  if (padding > 2) throw InputError("archive_base64 is not base64");
  return out;
}

std::string NewSessionId() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard<std::mutex> lock(mutex);
  return fmt::format("{:016x}{:016x}", rng(), rng());
}

void Reply(httplib::Response &res, int status, const json &body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void Fail(httplib::Response &res, int status, const std::string &message) {
  Reply(res, status, {{"error", message}});
}

void FailParse(httplib::Response &res, const ParseError &e) {
  json diag = {{"file", e.file()}, {"line", e.line()}, {"message", e.message()}};
  Reply(res, 400, {{"ok", false}, {"error", e.what()}, {"diagnostics", {diag}}});
}

// Parses a JSON object body; replies and returns nullopt on failure.
std::optional<json> ObjectBody(const httplib::Request &req,
                               httplib::Response &res) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) {
    Fail(res, 400, "request body is not valid JSON");
    return std::nullopt;
  }
  if (!body.is_object()) {
    Fail(res, 422, "request body must be a JSON object");
    return std::nullopt;
  }
  return body;
}

bool TokenMatches(std::string_view given, std::string_view expected) {
  unsigned diff = given.size() == expected.size() ? 0 : 1;
  for (std::size_t i = 0; i < given.size(); ++i) {
    diff |= static_cast<unsigned char>(given[i]) ^
            static_cast<unsigned char>(expected[i % std::max<std::size_t>(1, expected.size())]);
  }
  return diff == 0;
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  std::shared_ptr<const SessionStore::Entry> fallback;
  Ontology ontology;
  SessionStore sessions;
  httplib::Server server;
  std::thread thread;

  Impl(const RulePackage &package, Ontology ont, ServiceOptions opts)
      : options(std::move(opts)),
        fallback(BuildSessionEntry(package, nullptr)),
        ontology(std::move(ont)),
        sessions(options.session_ttl, options.spill_dir) {
    Routes();
  }

  std::shared_ptr<const SessionStore::Entry> Resolve(const json &body) {
    if (body.contains("session_id") && body["session_id"].is_string()) {
      const auto id = body["session_id"].get<std::string>();
      if (id != kDefaultSession) {
        if (auto entry = sessions.Get(id)) return entry;
      }
    }
    return fallback;
  }

  bool Authorized(const httplib::Request &req, httplib::Response &res) {
    if (options.token.empty()) return true;
    const std::string header = req.get_header_value("Authorization");
    if (StartsWith(header, "Bearer ") &&
        TokenMatches(std::string_view(header).substr(7), options.token)) {
      return true;
    }
    res.set_header("WWW-Authenticate", "Bearer");
    Fail(res, 401, "missing or invalid bearer token");
    return false;
  }

  void Annotate(const httplib::Request &req, httplib::Response &res) {
    auto body = ObjectBody(req, res);
    if (!body) return;
    if (!body->contains("text") || !(*body)["text"].is_string()) {
      return Fail(res, 422, "text is required");
    }
    std::string text = (*body)["text"].get<std::string>();
    const std::size_t length = utf8::Length(text);
    if (length > options.max_text_chars) {
      return Fail(res, 413,
                  fmt::format("text has {} characters, limit is {}", length,
                              options.max_text_chars));
    }
    std::optional<Date> date;
    if (body->contains("doc_date") && !(*body)["doc_date"].is_null()) {
      const auto &d = (*body)["doc_date"];
      if (d.is_string()) date = ParseIsoDate(d.get<std::string>());
      if (!date) return Fail(res, 422, "doc_date must be YYYY-MM-DD");
    }
    auto entry = Resolve(*body);
    const Document doc("request", std::move(text), date);
    const Annotation a = AnnotateDocument(doc, *entry->compiled);
    json mentions = json::array();
    for (const auto &m : a.mentions) {
      mentions.push_back(MentionToJson(MentionRecord{doc.doc_id(), m}));
    }
    json temporal = json::array();
    for (const auto &t : a.temporal) temporal.push_back(TemporalToJson(t));
    Reply(res, 200,
          {{"mentions", mentions},
           {"temporal", temporal},
           {"package_name", entry->package.name},
           {"package_version", entry->package.version}});
  }

  void UploadRuleset(const httplib::Request &req, httplib::Response &res) {
    if (!Authorized(req, res)) return;
    std::string session_id;
    RulePackage package;
    try {
      if (archive::LooksLikeZip(req.body)) {
        session_id = req.get_param_value("session_id");
        package = ParseRulePackageArchive(req.body);
      } else {
        auto body = ObjectBody(req, res);
        if (!body) return;
        for (const auto &[key, _] : body->items()) {
          if (key != "session_id" && key != "archive_base64" && key != "files") {
            return Fail(res, 422, "unexpected key '" + key + "'");
          }
        }
        if (body->contains("session_id")) {
          if (!(*body)["session_id"].is_string()) {
            return Fail(res, 422, "session_id must be a string");
          }
          session_id = (*body)["session_id"].get<std::string>();
        }
        const bool has_zip = body->contains("archive_base64");
        const bool has_files = body->contains("files");
        if (has_zip == has_files) {
          return Fail(res, 422, "provide exactly one of archive_base64 or files");
        }
        if (has_zip) {
          if (!(*body)["archive_base64"].is_string()) {
            return Fail(res, 422, "archive_base64 must be a string");
          }
          package = ParseRulePackageArchive(
              DecodeBase64((*body)["archive_base64"].get<std::string>()));
        } else {
          const auto &files = (*body)["files"];
          if (!files.is_object()) return Fail(res, 422, "files must be an object");
          FileTree tree;
          for (const auto &[path, contents] : files.items()) {
            if (!contents.is_string()) {
              return Fail(res, 422, "file '" + path + "' must be a string");
            }
            tree[path] = contents.get<std::string>();
          }
          package = ParseRulePackage(tree);
        }
      }
    } catch (const ParseError &e) {
      return FailParse(res, e);
    } catch (const InputError &e) {
      return Fail(res, 400, e.what());
    } catch (const std::runtime_error &e) {
      return Fail(res, 400, std::string("unreadable archive: ") + e.what());
    }
    if (session_id.empty()) session_id = NewSessionId();
    if (!IsValidSessionId(session_id) || session_id == kDefaultSession) {
      return Fail(res, 400, "invalid session_id '" + session_id + "'");
    }
    std::vector<std::string> warnings;
    std::shared_ptr<const SessionStore::Entry> entry;
    try {
      entry = BuildSessionEntry(std::move(package), &warnings);
    } catch (const ParseError &e) {
      return FailParse(res, e);
    } catch (const InputError &e) {
      json diagnostics = json::array();
      for (const auto &line : Split(e.what(), '\n')) {
        diagnostics.push_back({{"message", line}});
      }
      return Reply(res, 400, {{"ok", false},
                              {"error", "package failed validation"},
                              {"diagnostics", diagnostics}});
    }
    const auto &p = entry->package;
    json reply = {{"ok", true},
                  {"session_id", session_id},
                  {"warnings", warnings},
                  {"package_name", p.name},
                  {"package_version", p.version},
                  {"concepts_count", p.concepts.size()}};
    sessions.Put(session_id, std::move(entry));
    Reply(res, 200, reply);
  }

  void DownloadRuleset(const httplib::Request &req, httplib::Response &res) {
    const std::string id = req.matches[1];
    auto entry = id == kDefaultSession ? fallback : sessions.Get(id);
    if (!entry) return Fail(res, 404, "unknown session " + id);
    if (req.get_param_value("format") == "json") {
      json files = json::object();
      for (const auto &[path, contents] : SerializeRulePackage(entry->package)) {
        files[path] = contents;
      }
      return Reply(res, 200, {{"session_id", id}, {"files", files}});
    }
    res.status = 200;
    res.set_header("Content-Disposition",
                   fmt::format("attachment; filename=\"{}-{}.zip\"",
                               entry->package.name, entry->package.version));
    res.set_content(entry->archive, "application/zip");
  }

  void OntologyTree(const httplib::Request &req, httplib::Response &res) {
    int depth = 1;
    if (req.has_param("depth")) {
      try {
        std::size_t used = 0;
        const std::string raw = req.get_param_value("depth");
        depth = std::stoi(raw, &used);
        if (used != raw.size() || depth < 0) throw std::invalid_argument(raw);
      } catch (const std::exception &) {
        return Fail(res, 422, "depth must be a non-negative integer");
      }
    }
    json nodes = json::array();
    if (req.has_param("root") && !req.get_param_value("root").empty()) {
      const std::string root = req.get_param_value("root");
      if (!ontology.Find(root)) return Fail(res, 404, "unknown node " + root);
      nodes.push_back(OntologyNodeToJson(ontology, root, depth));
    } else {
      for (const auto &r : ontology.Roots()) {
        nodes.push_back(OntologyNodeToJson(ontology, r, depth));
      }
    }
    Reply(res, 200, {{"nodes", nodes}});
  }

  void Extract(const httplib::Request &req, httplib::Response &res) {
    auto body = ObjectBody(req, res);
    if (!body) return;
    std::vector<std::string> ids;
    if (body->contains("node_ids")) {
      const auto &list = (*body)["node_ids"];
      if (!list.is_array()) return Fail(res, 422, "node_ids must be an array");
      for (const auto &v : list) {
        if (!v.is_string()) return Fail(res, 422, "node_ids must hold strings");
        ids.push_back(v.get<std::string>());
      }
    }
    if (ids.empty()) return Fail(res, 422, "empty selection");
    if (!body->contains("concept") || !(*body)["concept"].is_string()) {
      return Fail(res, 422, "concept is required");
    }
    bool descendants = false;
    if (body->contains("descendants")) {
      if (!(*body)["descendants"].is_boolean()) {
        return Fail(res, 422, "descendants must be a boolean");
      }
      descendants = (*body)["descendants"].get<bool>();
    }
    try {
      auto entries = ExtractDictionary(
          ontology, ids, (*body)["concept"].get<std::string>(), descendants);
      json out = json::array();
      for (const auto &e : entries) out.push_back(DictionaryEntryToJson(e));
      Reply(res, 200, {{"entries", out}});
    } catch (const std::out_of_range &e) {
      Fail(res, 404, e.what());
    } catch (const InputError &e) {
      Fail(res, 422, e.what());
    }
  }

  void Health(httplib::Response &res) {
    const auto &p = fallback->package;
    Reply(res, 200, {{"status", "ok"},
                     {"package_name", p.name},
                     {"package_version", p.version},
                     {"concepts_count", p.concepts.size()}});
  }

  void Routes() {
    const int threads = std::max(1, options.threads);
    server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server.set_payload_max_length(64u << 20);
    server.Post("/annotate", [this](const httplib::Request &req,
                                    httplib::Response &res) { Annotate(req, res); });
    server.Post("/ruleset", [this](const httplib::Request &req,
                                   httplib::Response &res) { UploadRuleset(req, res); });
    server.Get(R"(/ruleset/([^/]+))",
               [this](const httplib::Request &req, httplib::Response &res) {
                 DownloadRuleset(req, res);
               });
    server.Get("/ontology/tree", [this](const httplib::Request &req,
                                        httplib::Response &res) {
      OntologyTree(req, res);
    });
    server.Post("/dictionary/extract",
                [this](const httplib::Request &req, httplib::Response &res) {
                  Extract(req, res);
                });
    server.Get("/health", [this](const httplib::Request &, httplib::Response &res) {
      Health(res);
    });
    if (options.static_dir) {
      if (!server.set_mount_point("/", *options.static_dir)) {
        throw std::runtime_error("static directory not found: " +
                                 *options.static_dir);
      }
    }
    server.set_exception_handler(
        [](const httplib::Request &, httplib::Response &res, std::exception_ptr) {
          Fail(res, 500, "internal error");
        });
    if (options.log_requests) {
      // Metadata only; request bodies may hold patient text.
      server.set_logger([](const httplib::Request &req, const httplib::Response &res) {
        fmt::print(stderr, "{} {} {} in={}B out={}B\n", req.method, req.path,
                   res.status, req.body.size(), res.body.size());
      });
    }
  }
};

Service::Service(const RulePackage &default_package, Ontology ontology,
                 ServiceOptions options)
    : impl_(std::make_unique<Impl>(default_package, std::move(ontology),
                                   std::move(options))) {}

Service::~Service() { Stop(); }

int Service::Start(const std::string &host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::Run(const std::string &host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw std::runtime_error(fmt::format("cannot listen on {}:{}", host, port));
  }
}

void Service::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace cliniex
