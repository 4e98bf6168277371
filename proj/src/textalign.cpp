// src/textalign.cpp

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

#include "convalign/textalign.hpp"

#include <algorithm>
#include <stdexcept>

namespace convalign {

int edit_cost(const EditPath& path) {
  int cost = 0;
  for (const EditOp& op : path.ops) {
    if (op.kind != EditKind::kMatch) ++cost;
  }
  return cost;
}

EditPath edit_align(std::span<const std::string> ref,
                    std::span<const std::string> hyp) {
  const int r = static_cast<int>(ref.size());
  const int h = static_cast<int>(hyp.size());
  const int stride = h + 1;

  std::vector<int> cost(static_cast<std::size_t>(r + 1) * (h + 1));
  const auto at = [&](int i, int j) -> int& { return cost[i * stride + j]; };

  for (int j = 0; j <= h; ++j) at(0, j) = j;
  for (int i = 1; i <= r; ++i) {
    at(i, 0) = i;
    for (int j = 1; j <= h; ++j) {
      const int diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const int del = at(i - 1, j) + 1;
      const int ins = at(i, j - 1) + 1;
      at(i, j) = std::min({diag, del, ins});
    }
  }

  // Backtrack with the MATCH > SUB > DEL > INS preference at each cell.
  std::vector<EditOp> ops;
  ops.reserve(static_cast<std::size_t>(std::max(r, h)));
  int i = r;
  int j = h;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool eq = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (eq ? 0 : 1)) {
        ops.push_back({eq ? EditKind::kMatch : EditKind::kSub, i - 1, j - 1});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ops.push_back({EditKind::kDel, i - 1, -1});
      --i;
      continue;
    }
    ops.push_back({EditKind::kIns, -1, j - 1});
    --j;
  }
  std::reverse(ops.begin(), ops.end());
  return {std::move(ops)};
}

std::vector<RefInterval> find_match_runs(const EditPath& path, int min_len) {
  if (min_len < 1) throw std::invalid_argument("min_len must be >= 1");
  std::vector<RefInterval> runs;
  int run_begin = -1;
  int run_end = -1;  // ref indices, inclusive begin / exclusive end
  const auto flush = [&] {
    if (run_begin >= 0 && run_end - run_begin >= min_len) {
      runs.push_back({run_begin, run_end});
    }
    run_begin = -1;
  };
  for (const EditOp& op : path.ops) {
    if (op.kind == EditKind::kMatch) {
      if (run_begin < 0) run_begin = op.ref_index;
      run_end = op.ref_index + 1;
    } else {
      flush();
    }
  }
  flush();
  return runs;
}

std::vector<ConfidenceIsland> detect_islands(const EditPath& path,
                                             std::span<const HypWord> hyp_words,
                                             int min_island_len) {
  if (min_island_len < 1) {
    throw std::invalid_argument("min_island_len must be >= 1");
  }

  std::vector<ConfidenceIsland> islands;
  std::vector<TimedWord> current;
  const auto flush = [&] {
    if (static_cast<int>(current.size()) >= min_island_len) {
      islands.push_back({{current.front().global_index,
                          current.back().global_index + 1},
                         current});
    }
    current.clear();
  };

  int prev_ref = -2;
  for (const EditOp& op : path.ops) {
    if (op.kind != EditKind::kMatch) {
      flush();
      prev_ref = -2;
      continue;
    }
    if (op.ref_index != prev_ref + 1) flush();
    prev_ref = op.ref_index;
    const HypWord& hw = hyp_words[op.hyp_index];
    if (hw.is_chunk_first || hw.is_chunk_last) {
      // Possibly cut at the fixed chunk boundary: the timestamp is not
      // trusted, and its removal splits the run.
      flush();
      continue;
    }
    current.push_back({op.ref_index, hw.start_sec, hw.end_sec});
  }
  flush();
  return islands;
}

std::vector<ConfidenceIsland> monotone_island_chain(
    std::vector<ConfidenceIsland> islands) {
  const int n = static_cast<int>(islands.size());
  if (n <= 1) return islands;

  std::stable_sort(islands.begin(), islands.end(),
                   [](const ConfidenceIsland& a, const ConfidenceIsland& b) {
                     if (a.ref_range.begin != b.ref_range.begin) {
                       return a.ref_range.begin < b.ref_range.begin;
                     }
                     return a.ref_range.end < b.ref_range.end;
                   });

  const auto compatible = [&](int before, int after) {
    return islands[before].ref_range.end <= islands[after].ref_range.begin &&
           islands[before].time_end() <= islands[after].time_begin();
  };

  // Weighted LIS over word counts.
  std::vector<long long> best(n);
  std::vector<int> parent(n, -1);
  for (int i = 0; i < n; ++i) {
    best[i] = islands[i].size();
    for (int j = 0; j < i; ++j) {
      if (compatible(j, i) && best[j] + islands[i].size() > best[i]) {
        best[i] = best[j] + islands[i].size();
        parent[i] = j;
      }
    }
  }

  int tail = 0;
  for (int i = 1; i < n; ++i) {
    if (best[i] > best[tail]) tail = i;
  }

  std::vector<ConfidenceIsland> chain;
  for (int i = tail; i >= 0; i = parent[i]) {
    chain.push_back(std::move(islands[i]));
    if (parent[i] < 0) break;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

}  // namespace convalign
