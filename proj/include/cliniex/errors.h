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

#ifndef CLINIEX_ERRORS_H_
#define CLINIEX_ERRORS_H_

#include <stdexcept>
#include <string>

namespace cliniex {

// An error tied to a location in an input file. Line numbers are 1-based;
// line 0 means the error concerns the file as a whole.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, int line, const std::string &message)
      : std::runtime_error(Format(file, line, message)),
        file_(std::move(file)),
        line_(line),
        message_(message) {}

  const std::string &file() const { return file_; }
  int line() const { return line_; }
  const std::string &message() const { return message_; }

 private:
  static std::string Format(const std::string &file, int line,
                            const std::string &message) {
    std::string out = file;
    if (line > 0) out += ":" + std::to_string(line);
    if (!out.empty()) out += ": ";
    return out + message;
  }

  std::string file_;
  int line_;
  std::string message_;
};

// A regex that does not compile.
class PatternError : public ParseError {
 public:
  using ParseError::ParseError;
};

// A token outside a closed vocabulary (direction, modifier, certainty...).
class VocabularyError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Annotation offsets or text that disagree with the document.
class IntegrityError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Source data that cannot be mapped onto note records.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller-supplied arguments that violate an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace cliniex

#endif  // CLINIEX_ERRORS_H_
