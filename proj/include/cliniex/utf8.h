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

// UTF-8 helpers. All character offsets in this project count Unicode scalar
// values; these functions translate between those and byte positions.
// Malformed input bytes each decode to one U+FFFD so offsets stay stable.

#ifndef CLINIEX_UTF8_H_
#define CLINIEX_UTF8_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cliniex::utf8 {

std::u32string Decode(std::string_view bytes);
std::string Encode(std::u32string_view chars);
void Append(std::string &out, char32_t c);

// Number of scalar values in `bytes`.
std::size_t Length(std::string_view bytes);

// Byte offset of every scalar value, plus a final entry equal to
// bytes.size(); the result has Length(bytes) + 1 entries.
std::vector<std::size_t> ByteOffsets(std::string_view bytes);

// Bytes of the scalar-value range [start, end). Throws std::out_of_range
// when the range exceeds the text.
std::string Slice(std::string_view bytes, std::size_t start, std::size_t end);

// Simple one-to-one case folding (ASCII, Latin-1, Latin Extended-A, Greek,
// Cyrillic). Always maps one scalar value to one scalar value.
char32_t FoldCase(char32_t c);
std::u32string FoldCase(std::u32string_view s);

bool IsSpace(char32_t c);
// Letters and digits; non-ASCII letters are approximated by excluding the
// known punctuation and symbol blocks.
bool IsWordChar(char32_t c);
bool IsUpper(char32_t c);
bool IsDigit(char32_t c);

}  // namespace cliniex::utf8

#endif  // CLINIEX_UTF8_H_
