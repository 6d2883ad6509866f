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

// Aho-Corasick automaton over Unicode scalar values. Patterns are added,
// then Build() links failure and dictionary-suffix edges; after that the
// automaton is read-only and FindAll may be called concurrently.

#ifndef CLINIEX_AHO_CORASICK_H_
#define CLINIEX_AHO_CORASICK_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace cliniex {

class AhoCorasick {
 public:
  struct Match {
    std::size_t begin;
    std::size_t end;
    int value;
  };

  AhoCorasick();

  // Empty patterns are ignored. A pattern may be added several times with
  // different values; every value is reported.
  void Add(std::u32string_view pattern, int value);
  void Build();

  // Every occurrence of every pattern, ordered by end position and then by
  // decreasing length.
  std::vector<Match> FindAll(std::u32string_view text) const;

  std::size_t pattern_count() const { return pattern_count_; }

 private:
  struct Node {
    // Sorted by character once built.
    std::vector<std::pair<char32_t, std::int32_t>> next;
    std::int32_t fail = 0;
    // Nearest node on the failure chain that has outputs, or -1.
    std::int32_t dict = -1;
    // (value, pattern length) for patterns ending here.
    std::vector<std::pair<int, std::size_t>> outputs;
  };

  std::int32_t Child(std::int32_t node, char32_t c) const;
  std::int32_t Step(std::int32_t node, char32_t c) const;

  std::vector<Node> nodes_;
  std::size_t pattern_count_ = 0;
  bool built_ = false;
};

}  // namespace cliniex

#endif  // CLINIEX_AHO_CORASICK_H_
