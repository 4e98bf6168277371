// include/convalign/acoustic_sim.hpp

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

// Deterministic stand-in for an acoustic model and recognizer, plus a
// synthetic corpus generator. Everything here is a pure function of
// (inputs, seed), so experiments reproduce bit-exactly.

#ifndef CONVALIGN_ACOUSTIC_SIM_HPP_
#define CONVALIGN_ACOUSTIC_SIM_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "convalign/corpus.hpp"
#include "convalign/grammar.hpp"
#include "convalign/textalign.hpp"

namespace convalign {

inline constexpr const char* kGapToken = "<gap>";

// Per-frame, per-token log-score matrix on a fixed frame timeline
// (10 ms stride by default). The simulator's stand-in for an acoustic model.
struct FrameScores {
  int frame_rate_hz = 100;
  std::vector<std::string> vocab;  // includes kGapToken
  int n_frames = 0;
  std::vector<double> scores;  // row-major [n_frames x vocab.size()]

  double score(int frame, int token_id) const {
    return scores[static_cast<std::size_t>(frame) * vocab.size() + token_id];
  }
  // -1 when the token is not in the vocab.
  int token_id(const std::string& token) const;

  std::unordered_map<std::string, int> index;  // token -> column
};

// Ground-truth word timing for a synthetic conversation.
struct TimelineWord {
  int global_index = 0;
  double start_sec = 0.0;
  double end_sec = 0.0;
  std::string token;
};
using TrueTimeline = std::vector<TimelineWord>;

// Recognition error channel. p_sub + p_del must be <= 1.
struct ErrorModel {
  double p_sub = 0.10;
  double p_del = 0.03;
  double p_ins = 0.02;
  double jitter_sd_sec = 0.05;
  std::uint64_t seed = 0;
};

struct SimCorpusConfig {
  int n_conversations = 20;
  int vocab_size = 60;
  double mean_turn_words = 8.0;
  double mean_conversation_min = 10.0;
  double turn_jitter_sec = 2.0;  // annotation noise, often off by seconds
  double deid_rate = 0.02;       // per-turn probability of a de-id word
  int doctor_pool = 100;
  double gender_ratio = 0.5;  // fraction of male doctors
  std::vector<std::string> disease_areas = {
      "cardiology", "dermatology", "diabetes",  "mental_health", "oncology",
      "primary_care", "pulmonology", "urology", "wellness",      "rheumatology"};
  std::uint64_t seed = 1;
};

// score[t][w] = N(0, noise_sd) + gain * [w is the token at frame t], where
// untimed frames belong to kGapToken and <deid> words get no gain at all
// (their audio was zeroed). Deterministic given seed; each frame row uses an
// independent substream so the parallel and serial paths agree bit-exactly.
FrameScores synth_frame_scores(const TrueTimeline& timeline,
                               std::vector<std::string> vocab, double gain,
                               double noise_sd, std::uint64_t seed,
                               double duration_sec, int frame_rate_hz = 100);

// Serial reference for synth_frame_scores (no OpenMP). Bit-identical output.
FrameScores synth_frame_scores_serial(const TrueTimeline& timeline,
                                      std::vector<std::string> vocab,
                                      double gain, double noise_sd,
                                      std::uint64_t seed, double duration_sec,
                                      int frame_rate_hz = 100);

// Simulates recognizing the audio span [t0, t1): true words (assigned to the
// span containing their midpoint, times clamped to it) are corrupted per the
// error model, timestamps jittered, and, when a grammar is given, the result
// is replaced by its closest grammar-accepted sequence with timestamps
// transferred through an edit alignment. Output words are monotone,
// non-overlapping and inside the span. <deid> words are never recognized.
// vocab supplies substitution/insertion tokens (kGapToken is skipped).
std::vector<HypWord> simulate_recognizer(const TrueTimeline& timeline,
                                         std::span<const std::string> vocab,
                                         double t0, double t1,
                                         const ErrorModel& em,
                                         const LinearIslandGrammar* grammar);

// Recognizer seam for the pipeline: production users plug a real ASR, tests
// and the CLI plug the simulator.
class Recognizer {
 public:
  virtual ~Recognizer() = default;
  virtual std::vector<HypWord> recognize(double t0, double t1,
                                         const LinearIslandGrammar* grammar)
      const = 0;
};

class SimRecognizer : public Recognizer {
 public:
  SimRecognizer(TrueTimeline timeline, std::vector<std::string> vocab,
                ErrorModel em)
      : timeline_(std::move(timeline)), vocab_(std::move(vocab)), em_(em) {}

  std::vector<HypWord> recognize(double t0, double t1,
                                 const LinearIslandGrammar* grammar)
      const override {
    return simulate_recognizer(timeline_, vocab_, t0, t1, em_, grammar);
  }

 private:
  TrueTimeline timeline_;
  std::vector<std::string> vocab_;
  ErrorModel em_;
};

struct SimConversation {
  Conversation conversation;
  TrueTimeline truth;
};

// Deterministic synthetic corpus: per-conversation substream seeds are
// mix_seed(cfg.seed, ordinal), annotated turn stamps are the true stamps plus
// Uniform(-turn_jitter_sec, +turn_jitter_sec) (kept ordered), and metadata is
// drawn from the doctor/disease-area pools. Throws on an infeasible config.
std::vector<SimConversation> generate_corpus(const SimCorpusConfig& cfg);

// Truth file format: one line per word, `global_index start_sec end_sec
// token`, times with exactly 3 decimals.
std::string format_truth(const TrueTimeline& timeline);
TrueTimeline parse_truth(const std::string& text);

}  // namespace convalign

#endif  // CONVALIGN_ACOUSTIC_SIM_HPP_
