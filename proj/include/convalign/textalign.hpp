// include/convalign/textalign.hpp

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

#ifndef CONVALIGN_TEXTALIGN_HPP_
#define CONVALIGN_TEXTALIGN_HPP_

#include <span>
#include <string>
#include <vector>

namespace convalign {

enum class EditKind { kMatch, kSub, kDel, kIns };

// ref_index / hyp_index are -1 when the op does not consume that side
// (INS has no ref_index, DEL has no hyp_index).
struct EditOp {
  EditKind kind = EditKind::kMatch;
  int ref_index = -1;
  int hyp_index = -1;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct EditPath {
  std::vector<EditOp> ops;
};

// Number of non-MATCH ops, i.e. the Levenshtein cost of the path.
int edit_cost(const EditPath& path);

// Minimal-cost word-level alignment with unit costs. Among minimal paths the
// tie-break prefers MATCH > SUB > DEL > INS at each DP cell, so the result is
// deterministic.
EditPath edit_align(std::span<const std::string> ref,
                    std::span<const std::string> hyp);

// Half-open interval of reference word indices.
struct RefInterval {
  int begin = 0;
  int end = 0;

  int length() const { return end - begin; }
  friend bool operator==(const RefInterval&, const RefInterval&) = default;
};

// Maximal runs of consecutive MATCH ops of length >= min_len, as ref-index
// intervals. min_len must be >= 1.
std::vector<RefInterval> find_match_runs(const EditPath& path, int min_len);

// One recognized word from a chunked decode, with its chunk bookkeeping.
struct HypWord {
  std::string token;
  double start_sec = 0.0;
  double end_sec = 0.0;
  int chunk_id = 0;
  bool is_chunk_first = false;
  bool is_chunk_last = false;
};

struct TimedWord {
  int global_index = 0;
  double start_sec = 0.0;
  double end_sec = 0.0;
};

// A run of >= min_island_len consecutive words where constrained recognition
// exactly matched the transcript; its word timestamps are trusted.
struct ConfidenceIsland {
  RefInterval ref_range;
  std::vector<TimedWord> words;

  int size() const { return static_cast<int>(words.size()); }
  double time_begin() const { return words.front().start_sec; }
  double time_end() const { return words.back().end_sec; }
};

// Match runs of length >= min_island_len, with every position whose hyp word
// is a chunk-first or chunk-last word removed (those may have been cut at the
// fixed chunk boundary). Each removal splits its run; fragments shorter than
// min_island_len are discarded. Surviving runs become islands carrying the
// matched hyp words' timestamps. hyp_words must parallel the path's hyp
// indices.
std::vector<ConfidenceIsland> detect_islands(const EditPath& path,
                                             std::span<const HypWord> hyp_words,
                                             int min_island_len = 5);

// Largest-total-word-count subset of islands whose ref ranges and time spans
// are both increasing (weighted longest increasing subsequence). Guards pass 2
// against out-of-order matches from repeated phrases.
std::vector<ConfidenceIsland> monotone_island_chain(
    std::vector<ConfidenceIsland> islands);

}  // namespace convalign

#endif  // CONVALIGN_TEXTALIGN_HPP_
