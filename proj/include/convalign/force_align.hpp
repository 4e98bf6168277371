// include/convalign/force_align.hpp

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

#ifndef CONVALIGN_FORCE_ALIGN_HPP_
#define CONVALIGN_FORCE_ALIGN_HPP_

#include <span>
#include <string>
#include <vector>

#include "convalign/acoustic_sim.hpp"
#include "convalign/corpus.hpp"

namespace convalign {

// One word's assignment to a half-open frame range, with the summed
// per-frame log-score of that assignment.
struct WordSpan {
  int global_index = 0;
  int frame_begin = 0;
  int frame_end = 0;
  double score = 0.0;
};

// Fully-constrained forced alignment: partitions [frame_begin, frame_end)
// into |tokens| contiguous spans, in order, maximizing the total frame score.
// Ties resolve to the lexicographically smallest boundary vector (earliest
// boundaries, first word first). Requires the range to fit
// |tokens| * min_frames_per_word frames and every token to be in fs.vocab;
// throws std::invalid_argument otherwise. Output spans carry global_index =
// first_global_index + position.
std::vector<WordSpan> viterbi_segment(const FrameScores& fs,
                                      std::span<const std::string> tokens,
                                      int frame_begin, int frame_end,
                                      int min_frames_per_word = 1,
                                      int first_global_index = 0);

// Total span score divided by total frames covered. spans must be non-empty.
double normalized_path_score(std::span<const WordSpan> spans);

struct RealignedTurn {
  double start_sec = 0.0;
  double end_sec = 0.0;
  double norm_score = 0.0;
  std::vector<WordSpan> spans;
};

// Realigns a turn's words on the frames of [ann_start - buffer_sec,
// ann_end + buffer_sec] clamped to the audio, keeping only the audio that
// aligned with the turn transcript: returns the span from the first word's
// start to the last word's end. Throws if the clamped range is too short.
RealignedTurn buffered_realign(const Turn& turn, const FrameScores& fs,
                               double buffer_sec = 1.0);

// Tail filtering over normalized acoustic scores: drops the
// floor(fraction * N) worst-scoring items and returns the kept indices in
// their original order. Ties at the cut drop the earlier-indexed item first.
// fraction must be in [0, 1).
std::vector<int> drop_worst_tail(std::span<const double> norm_scores,
                                 double fraction);

}  // namespace convalign

#endif  // CONVALIGN_FORCE_ALIGN_HPP_
