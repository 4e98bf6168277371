// tests/util.hpp

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

#ifndef CONVALIGN_TESTS_UTIL_HPP_
#define CONVALIGN_TESTS_UTIL_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "convalign/acoustic_sim.hpp"
#include "convalign/corpus.hpp"

namespace convalign::testutil {

// A conversation plus matching ground-truth timeline with evenly placed
// words: each word takes word_sec, pause_sec between words, turn_gap_sec
// between turns.
struct BuiltConversation {
  Conversation conv;
  TrueTimeline truth;
};

inline BuiltConversation build_conversation(
    const std::vector<std::vector<std::string>>& turn_words,
    double word_sec = 0.3, double pause_sec = 0.05, double turn_gap_sec = 0.5,
    double lead_in_sec = 0.5, double trailing_sec = 1.0) {
  BuiltConversation out;
  out.conv.conversation_id = "test_conv";
  out.conv.metadata.doctor_id = "doc_test";
  out.conv.metadata.doctor_gender = Gender::kMale;
  out.conv.metadata.interaction_type = "office_visit";

  double t = lead_in_sec;
  int gi = 0;
  for (std::size_t ti = 0; ti < turn_words.size(); ++ti) {
    Turn turn;
    turn.speaker = ti % 2 == 0 ? Speaker::kDoctor : Speaker::kPatient;
    turn.ann_start_sec = t;
    for (const std::string& w : turn_words[ti]) {
      out.truth.push_back({gi++, t, t + word_sec, w});
      turn.words.push_back(w);
      if (w == kDeidToken) turn.has_deid = true;
      t += word_sec + pause_sec;
    }
    turn.ann_end_sec = t - pause_sec;
    out.conv.turns.push_back(std::move(turn));
    t += turn_gap_sec;
  }
  out.conv.audio_duration_sec = t + trailing_sec;
  validate(out.conv);
  return out;
}

// Asserts the AlignedTranscript invariants; throws on violation so callers
// can CHECK_NOTHROW it.
inline void check_transcript(const AlignedTranscript& at,
                             const Conversation& conv) {
  const std::vector<StreamWord> stream = word_stream(conv);
  if (at.words.size() != stream.size()) {
    throw std::runtime_error("transcript does not cover every word");
  }
  double prev_start = 0.0;
  for (std::size_t i = 0; i < at.words.size(); ++i) {
    const AlignedWord& w = at.words[i];
    if (w.global_index != static_cast<int>(i)) {
      throw std::runtime_error("global indices not dense");
    }
    if (w.token != stream[i].token) {
      throw std::runtime_error("token mismatch at " + std::to_string(i));
    }
    if (!(w.start_sec < w.end_sec)) {
      throw std::runtime_error("empty span at " + std::to_string(i));
    }
    if (w.start_sec < 0 || w.end_sec > conv.audio_duration_sec + 1e-9) {
      throw std::runtime_error("span outside audio at " + std::to_string(i));
    }
    if (w.start_sec < prev_start - 1e-12) {
      throw std::runtime_error("start times decrease at " + std::to_string(i));
    }
    prev_start = w.start_sec;
  }
}

}  // namespace convalign::testutil

#endif  // CONVALIGN_TESTS_UTIL_HPP_
