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

#include "cliniex/aho_corasick.h"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace cliniex {

AhoCorasick::AhoCorasick() : nodes_(1) {}

std::int32_t AhoCorasick::Child(std::int32_t node, char32_t c) const {
  const auto &next = nodes_[node].next;
  if (built_) {
    auto it = std::lower_bound(
        next.begin(), next.end(), c,
        [](const auto &edge, char32_t key) { return edge.first < key; });
    return (it != next.end() && it->first == c) ? it->second : -1;
  }
  for (const auto &[ch, child] : next) {
    if (ch == c) return child;
  }
  return -1;
}

void AhoCorasick::Add(std::u32string_view pattern, int value) {
  if (built_) throw std::logic_error("AhoCorasick::Add after Build");
  if (pattern.empty()) return;
  std::int32_t node = 0;
  for (char32_t c : pattern) {
    std::int32_t child = Child(node, c);
    if (child < 0) {
      child = static_cast<std::int32_t>(nodes_.size());
      nodes_[node].next.emplace_back(c, child);
      nodes_.emplace_back();
    }
    node = child;
  }
  nodes_[node].outputs.emplace_back(value, pattern.size());
  ++pattern_count_;
}

void AhoCorasick::Build() {
  for (auto &node : nodes_) std::sort(node.next.begin(), node.next.end());
  built_ = true;

  // Breadth-first so every failure target is finished before its users.
  std::queue<std::int32_t> queue;
  for (const auto &[c, child] : nodes_[0].next) {
    nodes_[child].fail = 0;
    queue.push(child);
  }
  while (!queue.empty()) {
    const std::int32_t node = queue.front();
    queue.pop();
    for (const auto &[c, child] : nodes_[node].next) {
      std::int32_t f = nodes_[node].fail;
      while (f != 0 && Child(f, c) < 0) f = nodes_[f].fail;
      const std::int32_t target = Child(f, c);
      nodes_[child].fail = (target >= 0 && target != child) ? target : 0;
      const std::int32_t fail = nodes_[child].fail;
      nodes_[child].dict = nodes_[fail].outputs.empty() ? nodes_[fail].dict : fail;
      queue.push(child);
    }
  }
}

std::int32_t AhoCorasick::Step(std::int32_t node, char32_t c) const {
  while (true) {
    const std::int32_t child = Child(node, c);
    if (child >= 0) return child;
    if (node == 0) return 0;
    node = nodes_[node].fail;
  }
}

std::vector<AhoCorasick::Match> AhoCorasick::FindAll(
    std::u32string_view text) const {
  if (!built_) throw std::logic_error("AhoCorasick::FindAll before Build");
  std::vector<Match> matches;
  std::int32_t node = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    node = Step(node, text[i]);
    // Longer patterns end at deeper nodes, so the chain is length-descending.
    for (std::int32_t n = nodes_[node].outputs.empty() ? nodes_[node].dict : node;
         n >= 0; n = nodes_[n].dict) {
      for (const auto &[value, length] : nodes_[n].outputs) {
        matches.push_back(Match{i + 1 - length, i + 1, value});
      }
    }
  }
  return matches;
}

}  // namespace cliniex
