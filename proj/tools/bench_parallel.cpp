// tools/bench_parallel.cpp

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

// Times the OpenMP kernels against their serial reference implementations and
// verifies that both produce identical results.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "convalign/acoustic_sim.hpp"
#include "convalign/corpus.hpp"
#include "convalign/evalkit.hpp"
#include "convalign/pipeline.hpp"

using namespace convalign;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_ms(F&& fn) {
  const double t0 = now_ms();
  fn();
  return now_ms() - t0;
}

void report(const char* name, double serial_ms, double parallel_ms,
            bool identical) {
  std::printf("%-28s serial %9.1f ms   parallel %9.1f ms   speedup %.2fx   %s\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int n_conversations = 8;
  double minutes = 2.0;
  int jobs = 2;
#ifdef _OPENMP
  jobs = omp_get_max_threads();
#endif
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--conversations") n_conversations = std::atoi(argv[i + 1]);
    else if (flag == "--minutes") minutes = std::atof(argv[i + 1]);
    else if (flag == "--jobs") jobs = std::atoi(argv[i + 1]);
  }
#ifdef _OPENMP
  omp_set_num_threads(jobs);
#endif
  std::printf("corpus: %d conversations x %.1f min, %d job(s)\n\n",
              n_conversations, minutes, jobs);

  SimCorpusConfig sim;
  sim.n_conversations = n_conversations;
  sim.mean_conversation_min = minutes;
  sim.seed = 7;
  const std::vector<SimConversation> corpus = generate_corpus(sim);

  std::vector<CorpusInput> inputs;
  for (const SimConversation& sc : corpus) {
    inputs.push_back({sc.conversation, sc.truth});
  }

  bool all_identical = true;

  // Frame-score synthesis over one conversation.
  {
    const auto stream = word_stream(inputs[0].conv);
    std::set<std::string> uniq;
    for (const auto& w : stream) uniq.insert(w.token);
    std::vector<std::string> vocab(uniq.begin(), uniq.end());

    FrameScores serial_fs, parallel_fs;
    const double ts = time_ms([&] {
      serial_fs = synth_frame_scores_serial(
          inputs[0].truth, vocab, 1.0, 3.0, 42,
          inputs[0].conv.audio_duration_sec);
    });
    const double tp = time_ms([&] {
      parallel_fs = synth_frame_scores(inputs[0].truth, vocab, 1.0, 3.0, 42,
                                       inputs[0].conv.audio_duration_sec);
    });
    const bool same = serial_fs.scores == parallel_fs.scores;
    all_identical = all_identical && same;
    report("synth_frame_scores", ts, tp, same);
  }

  // Whole-corpus two-pass alignment.
  std::vector<ConversationAlignment> serial_res, parallel_res;
  {
    const PipelineConfig pcfg;
    const AcousticConfig acfg;
    const double ts = time_ms([&] {
      serial_res = align_corpus_serial(inputs, Strategy::kTwoPass, pcfg, acfg,
                                       11);
    });
    const double tp = time_ms([&] {
      parallel_res =
          align_corpus(inputs, Strategy::kTwoPass, pcfg, acfg, 11, jobs);
    });
    bool same = serial_res.size() == parallel_res.size();
    for (std::size_t i = 0; same && i < serial_res.size(); ++i) {
      same = serial_res[i].transcript.words == parallel_res[i].transcript.words;
    }
    all_identical = all_identical && same;
    report("align_corpus (two-pass)", ts, tp, same);
  }

  // WER pooling over all cut segments.
  {
    std::vector<Segment> segments;
    for (std::size_t i = 0; i < serial_res.size(); ++i) {
      segments.insert(segments.end(), serial_res[i].segments.begin(),
                      serial_res[i].segments.end());
    }
    WerResult ws, wp;
    const double ts = time_ms([&] { ws = wer_serial(segments, segments); });
    const double tp = time_ms([&] { wp = wer(segments, segments); });
    const bool same = ws.n_ref_words == wp.n_ref_words &&
                      ws.substitutions == wp.substitutions &&
                      ws.deletions == wp.deletions &&
                      ws.insertions == wp.insertions;
    all_identical = all_identical && same;
    report("wer pooling", ts, tp, same);
  }

  return all_identical ? 0 : 1;
}
