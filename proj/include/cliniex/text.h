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

// Small string utilities shared by the file formats: field escaping for
// tab-separated files, splitting, calendar dates.

#ifndef CLINIEX_TEXT_H_
#define CLINIEX_TEXT_H_

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cliniex {

using Date = std::chrono::year_month_day;

// Parses YYYY-MM-DD; nullopt on anything else, including impossible dates.
std::optional<Date> ParseIsoDate(std::string_view s);
std::string FormatIsoDate(const Date &d);
Date AddDays(const Date &d, int days);
// Days from `from` to `to` (negative if `to` is earlier).
int DaysBetween(const Date &from, const Date &to);
Date Today();

// Escaping for one field of a tab-separated line. Backslash, tab, CR and LF
// are written as \\ \t \r \n, and a leading '#' as \# so it cannot be
// read as a comment. Unescape also accepts any other backslash
// sequence verbatim, so hand-written regexes such as \bfoo\b survive.
std::string EscapeField(std::string_view s);
std::string UnescapeField(std::string_view s);

std::vector<std::string> Split(std::string_view s, char sep);
std::string_view Trim(std::string_view s);
std::string ToLowerAscii(std::string_view s);
bool StartsWith(std::string_view s, std::string_view prefix);

// Reads a whole file; throws std::runtime_error naming the path on failure.
std::string ReadFile(const std::string &path);
void WriteFile(const std::string &path, std::string_view contents);

}  // namespace cliniex

#endif  // CLINIEX_TEXT_H_
