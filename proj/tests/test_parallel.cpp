// tests/test_parallel.cpp

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

// The OpenMP kernels must match their serial reference implementations
// bit-exactly regardless of thread count.

#include <set>
#include <string>
#include <vector>

#include "convalign/acoustic_sim.hpp"
#include "convalign/evalkit.hpp"
#include "convalign/pipeline.hpp"
#include "doctest.h"

using namespace convalign;

namespace {

std::vector<CorpusInput> small_corpus(int n, std::uint64_t seed) {
  SimCorpusConfig cfg;
  cfg.n_conversations = n;
  cfg.mean_conversation_min = 1.0;
  cfg.seed = seed;
  std::vector<CorpusInput> inputs;
  for (const auto& sc : generate_corpus(cfg)) {
    inputs.push_back({sc.conversation, sc.truth});
  }
  return inputs;
}

}  // namespace

TEST_CASE("synth_frame_scores parallel equals serial") {
  const auto inputs = small_corpus(1, 21);
  std::set<std::string> uniq;
  for (const auto& w : word_stream(inputs[0].conv)) uniq.insert(w.token);
  const std::vector<std::string> vocab(uniq.begin(), uniq.end());

  const FrameScores parallel = synth_frame_scores(
      inputs[0].truth, vocab, 1.0, 3.0, 9, inputs[0].conv.audio_duration_sec);
  const FrameScores serial = synth_frame_scores_serial(
      inputs[0].truth, vocab, 1.0, 3.0, 9, inputs[0].conv.audio_duration_sec);
  CHECK(parallel.n_frames == serial.n_frames);
  CHECK(parallel.vocab == serial.vocab);
  CHECK(parallel.scores == serial.scores);  // bit-exact
}

TEST_CASE("align_corpus parallel equals serial for every strategy") {
  const auto inputs = small_corpus(4, 33);
  const PipelineConfig pcfg;
  const AcousticConfig acfg;

  for (const Strategy strategy :
       {Strategy::kTwoPass, Strategy::kBuffered, Strategy::kOriginal}) {
    const auto serial = align_corpus_serial(inputs, strategy, pcfg, acfg, 5);
    const auto parallel = align_corpus(inputs, strategy, pcfg, acfg, 5,
                                       /*jobs=*/2);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
      CHECK(serial[i].failed == parallel[i].failed);
      CHECK(serial[i].transcript.words == parallel[i].transcript.words);
      REQUIRE(serial[i].segments.size() == parallel[i].segments.size());
      for (std::size_t k = 0; k < serial[i].segments.size(); ++k) {
        CHECK(serial[i].segments[k].start_sec ==
              parallel[i].segments[k].start_sec);
        CHECK(serial[i].segments[k].end_sec ==
              parallel[i].segments[k].end_sec);
      }
    }
  }
}

TEST_CASE("wer parallel equals serial") {
  const auto inputs = small_corpus(3, 55);
  const auto results = align_corpus_serial(inputs, Strategy::kTwoPass,
                                           PipelineConfig{}, AcousticConfig{},
                                           5);
  std::vector<Segment> ref;
  for (const auto& r : results) {
    ref.insert(ref.end(), r.segments.begin(), r.segments.end());
  }
  std::vector<Segment> hyp = ref;
  if (hyp.size() > 2) {
    hyp[1].tokens[0] = "corrupted";
    hyp[2].tokens.push_back("extra");
  }
  const WerResult a = wer(ref, hyp);
  const WerResult b = wer_serial(ref, hyp);
  CHECK(a.n_ref_words == b.n_ref_words);
  CHECK(a.substitutions == b.substitutions);
  CHECK(a.deletions == b.deletions);
  CHECK(a.insertions == b.insertions);
}
