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

// RFC 4180 delimited records: fields separated by a delimiter, optionally
// double-quoted, with "" for a literal quote inside a quoted field. Quoted
// fields may span lines.

#ifndef CLINIEX_CSV_H_
#define CLINIEX_CSV_H_

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace cliniex {

class CsvReader {
 public:
  CsvReader(std::istream &in, char delimiter = ',')
      : in_(in), delimiter_(delimiter) {}

  // Reads the next record into `fields`. Returns false at end of input.
  // Throws ParseError on an unterminated quoted field.
  bool Next(std::vector<std::string> &fields);

  // 1-based line on which the last record returned by Next() started.
  int line() const { return record_line_; }

 private:
  std::istream &in_;
  char delimiter_;
  int line_ = 1;
  int record_line_ = 0;
};

// Quotes a field when it contains the delimiter, a quote, CR or LF.
std::string CsvField(std::string_view field, char delimiter = ',');
std::string CsvRow(const std::vector<std::string> &fields,
                   char delimiter = ',');

}  // namespace cliniex

#endif  // CLINIEX_CSV_H_
