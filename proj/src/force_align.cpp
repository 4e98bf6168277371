// src/force_align.cpp

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

#include "convalign/force_align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace convalign {

// Suffix DP over (word k, start frame f): S[k][f] is the best score for words
// k..K-1 occupying [f, f1) exactly. Moving f downward grows the candidate
// window for word k's end frame by one, so a running max gives O(K*F) total.
// Ties keep the smallest end frame, which yields the lexicographically
// smallest boundary vector.
std::vector<WordSpan> viterbi_segment(const FrameScores& fs,
                                      std::span<const std::string> tokens,
                                      int frame_begin, int frame_end,
                                      int min_frames_per_word,
                                      int first_global_index) {
  const int k_words = static_cast<int>(tokens.size());
  if (k_words == 0) throw std::invalid_argument("viterbi_segment: no tokens");
  if (min_frames_per_word < 1) {
    throw std::invalid_argument("min_frames_per_word must be >= 1");
  }
  if (frame_begin < 0 || frame_end > fs.n_frames || frame_begin > frame_end) {
    throw std::invalid_argument("viterbi_segment: frame range out of bounds");
  }
  const int n_frames = frame_end - frame_begin;
  if (n_frames < k_words * min_frames_per_word) {
    throw std::invalid_argument("viterbi_segment: frame range too short for " +
                                std::to_string(k_words) + " words");
  }
  std::vector<int> ids(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ids[i] = fs.token_id(tokens[i]);
    if (ids[i] < 0) {
      throw std::invalid_argument("viterbi_segment: unknown token: " +
                                  std::string(tokens[i]));
    }
  }

  const double kNegInf = -std::numeric_limits<double>::infinity();
  const int mfw = min_frames_per_word;

  // Offsets are frame - frame_begin, in [0, n_frames].
  std::vector<double> suffix_next(static_cast<std::size_t>(n_frames) + 1,
                                  kNegInf);
  std::vector<double> suffix_cur(suffix_next.size(), kNegInf);
  std::vector<int> parent(static_cast<std::size_t>(k_words) *
                          (n_frames + 1));
  std::vector<double> prefix(static_cast<std::size_t>(n_frames) + 1, 0.0);

  suffix_next[n_frames] = 0.0;  // no words left, all frames consumed

  for (int k = k_words - 1; k >= 0; --k) {
    for (int x = 0; x < n_frames; ++x) {
      prefix[x + 1] = prefix[x] + fs.score(frame_begin + x, ids[k]);
    }
    const int lo = k * mfw;                         // earliest start offset
    const int hi = n_frames - (k_words - k) * mfw;  // latest start offset
    std::fill(suffix_cur.begin(), suffix_cur.end(), kNegInf);

    double best_val = kNegInf;
    int best_end = -1;
    for (int f = hi; f >= lo; --f) {
      const int e = f + mfw;  // newly admissible end offset at this f
      if (suffix_next[e] != kNegInf) {
        const double val = prefix[e] + suffix_next[e];
        // Candidates arrive with decreasing e; ">=" keeps the smallest end.
        if (best_end < 0 || val >= best_val) {
          best_val = val;
          best_end = e;
        }
      }
      if (best_end >= 0) {
        suffix_cur[f] = best_val - prefix[f];
        parent[static_cast<std::size_t>(k) * (n_frames + 1) + f] = best_end;
      }
    }
    suffix_cur.swap(suffix_next);
  }

  std::vector<WordSpan> spans;
  spans.reserve(tokens.size());
  int f = 0;
  for (int k = 0; k < k_words; ++k) {
    const int e = parent[static_cast<std::size_t>(k) * (n_frames + 1) + f];
    double score = 0.0;
    for (int x = f; x < e; ++x) score += fs.score(frame_begin + x, ids[k]);
    spans.push_back({first_global_index + k, frame_begin + f, frame_begin + e,
                     score});
    f = e;
  }
  return spans;
}

double normalized_path_score(std::span<const WordSpan> spans) {
  if (spans.empty()) {
    throw std::invalid_argument("normalized_path_score: no spans");
  }
  double total = 0.0;
  long long frames = 0;
  for (const WordSpan& s : spans) {
    total += s.score;
    frames += s.frame_end - s.frame_begin;
  }
  return total / static_cast<double>(frames);
}

RealignedTurn buffered_realign(const Turn& turn, const FrameScores& fs,
                               double buffer_sec) {
  if (turn.words.empty()) {
    throw std::invalid_argument("buffered_realign: turn has no words");
  }
  if (buffer_sec < 0) throw std::invalid_argument("buffer_sec must be >= 0");
  const double rate = fs.frame_rate_hz;
  const int f0 = std::max(
      0, static_cast<int>(std::floor((turn.ann_start_sec - buffer_sec) * rate)));
  const int f1 = std::min(
      fs.n_frames,
      static_cast<int>(std::ceil((turn.ann_end_sec + buffer_sec) * rate)));

  // The buffered window contains leading/trailing audio that is not the
  // turn's; <gap> sentinels at both edges absorb it so only the audio that
  // aligned with the turn transcript is kept. Falls back to a bare partition
  // when the window is too tight for sentinels or the scores carry no <gap>.
  const int k_words = static_cast<int>(turn.words.size());
  const bool with_sentinels =
      fs.token_id(kGapToken) >= 0 && (f1 - f0) >= k_words + 2;

  RealignedTurn out;
  if (with_sentinels) {
    std::vector<std::string> tokens;
    tokens.reserve(static_cast<std::size_t>(k_words) + 2);
    tokens.push_back(kGapToken);
    tokens.insert(tokens.end(), turn.words.begin(), turn.words.end());
    tokens.push_back(kGapToken);
    std::vector<WordSpan> all =
        viterbi_segment(fs, tokens, f0, f1, 1, /*first_global_index=*/-1);
    out.spans.assign(all.begin() + 1, all.end() - 1);
  } else {
    out.spans = viterbi_segment(fs, turn.words, f0, f1);
  }
  out.start_sec = out.spans.front().frame_begin / rate;
  out.end_sec = out.spans.back().frame_end / rate;
  out.norm_score = normalized_path_score(out.spans);
  return out;
}

std::vector<int> drop_worst_tail(std::span<const double> norm_scores,
                                 double fraction) {
  if (fraction < 0 || fraction >= 1) {
    throw std::invalid_argument("tail fraction must be in [0, 1)");
  }
  const int n = static_cast<int>(norm_scores.size());
  const int n_drop =
      static_cast<int>(std::floor(fraction * n + 1e-9));

  std::vector<int> order(norm_scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (norm_scores[a] != norm_scores[b]) {
      return norm_scores[a] < norm_scores[b];
    }
    return a < b;  // ties at the cut drop the earlier-indexed item first
  });

  std::vector<int> kept(order.begin() + n_drop, order.end());
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace convalign
