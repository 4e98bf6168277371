// src/grammar.cpp

// Copyright 2026 The convalign authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "convalign/grammar.hpp"

#include <limits>
#include <stdexcept>

namespace convalign {

LinearIslandGrammar::LinearIslandGrammar(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.empty()) {
    throw std::invalid_argument("island grammar needs a non-empty transcript");
  }
}

bool LinearIslandGrammar::accepts(std::span<const std::string> seq) const {
  if (seq.empty()) return true;
  if (seq.size() > tokens_.size()) return false;
  const std::size_t last_anchor = tokens_.size() - seq.size();
  for (std::size_t a = 0; a <= last_anchor; ++a) {
    bool ok = true;
    for (std::size_t k = 0; k < seq.size(); ++k) {
      if (tokens_[a + k] != seq[k]) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

// Substring edit-distance DP (hypothesis against all contiguous transcript
// slices at once): row 0 is free (a match may start at any transcript
// position), so cell (i, j) holds the cheapest way to align the first i hyp
// words against a slice ending at transcript position j, together with the
// smallest achievable slice start among cheapest paths. Step costs are
// non-negative, so min-cost paths only extend min-cost prefixes and the
// (cost, start) pair propagates lexicographically.
LinearIslandGrammar::Projection LinearIslandGrammar::project(
    std::span<const std::string> hyp) const {
  if (hyp.empty()) return {0, 0, 0};

  const int n = static_cast<int>(tokens_.size());
  const int h = static_cast<int>(hyp.size());
  const int kInf = std::numeric_limits<int>::max() / 2;

  std::vector<int> cost(static_cast<std::size_t>(n) + 1);
  std::vector<int> start(static_cast<std::size_t>(n) + 1);
  std::vector<int> next_cost(cost.size());
  std::vector<int> next_start(start.size());

  for (int j = 0; j <= n; ++j) {
    cost[j] = 0;
    start[j] = j;
  }

  for (int i = 1; i <= h; ++i) {
    next_cost[0] = i;  // hyp prefix against the empty slice at position 0
    next_start[0] = 0;
    for (int j = 1; j <= n; ++j) {
      const int sub = (hyp[i - 1] == tokens_[j - 1]) ? 0 : 1;
      int best_cost = kInf;
      int best_start = n + 1;
      const auto consider = [&](int c, int s) {
        if (c < best_cost || (c == best_cost && s < best_start)) {
          best_cost = c;
          best_start = s;
        }
      };
      consider(cost[j - 1] + sub, start[j - 1]);        // hyp word vs slice word
      consider(cost[j] + 1, start[j]);                  // hyp word unmatched
      consider(next_cost[j - 1] + 1, next_start[j - 1]);  // extra slice word
      next_cost[j] = best_cost;
      next_start[j] = best_start;
    }
    cost.swap(next_cost);
    start.swap(next_start);
  }

  Projection best{0, 0, kInf};
  for (int j = 0; j <= n; ++j) {
    const int len = j - start[j];
    if (cost[j] < best.distance ||
        (cost[j] == best.distance &&
         (start[j] < best.ref_start ||
          (start[j] == best.ref_start && len < best.ref_len)))) {
      best = {start[j], len, cost[j]};
    }
  }
  return best;
}

}  // namespace convalign
