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

// Minimal zip support: enough to exchange rule packages with common tools.
// Reads stored and deflated entries; writes deflated entries with a fixed
// timestamp so that equal file trees always produce identical bytes.

#ifndef CLINIEX_ARCHIVE_H_
#define CLINIEX_ARCHIVE_H_

#include <map>
#include <string>
#include <string_view>

namespace cliniex {

// Relative path ('/'-separated) to file contents.
using FileTree = std::map<std::string, std::string>;

namespace archive {

bool LooksLikeZip(std::string_view bytes);

// Throws std::runtime_error on truncated or unsupported archives.
FileTree ReadZip(std::string_view bytes);

std::string WriteZip(const FileTree &files);

// Loads every regular file under `dir`, keyed by path relative to it.
FileTree ReadDirectory(const std::string &dir);
void WriteDirectory(const FileTree &files, const std::string &dir);

}  // namespace archive
}  // namespace cliniex

#endif  // CLINIEX_ARCHIVE_H_
