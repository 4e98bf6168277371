// include/convalign/pipeline.hpp

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

// Two-pass conversation alignment, speaker-turn segmentation, segment
// filtering and doctor-disjoint corpus splitting.

#ifndef CONVALIGN_PIPELINE_HPP_
#define CONVALIGN_PIPELINE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "convalign/acoustic_sim.hpp"
#include "convalign/corpus.hpp"
#include "convalign/force_align.hpp"
#include "convalign/grammar.hpp"
#include "convalign/textalign.hpp"

namespace convalign {

struct TimeSpan {
  double begin = 0.0;
  double end = 0.0;
};

// Consecutive chunk_sec spans covering [0, duration_sec); the final span is
// the remainder (never zero-width).
std::vector<TimeSpan> chunk_spans(double duration_sec, double chunk_sec = 10.0);

struct PipelineConfig {
  double chunk_sec = 10.0;
  int min_island_len = 5;
  double buffer_sec = 1.0;
  double tail_fraction = 0.10;
  // Pass-2 gap windows are widened by this much on each side (clamped) so gap
  // words squeezed against island edges have frames to occupy.
  double gap_pad_sec = 0.1;
  int min_frames_per_word = 1;
};

enum class Source { kOriginal, kBuffered, kTwoPass };

// One speaker-turn segment, the unit of training and testing.
struct Segment {
  std::string conversation_id;
  int turn_index = 0;
  Speaker speaker = Speaker::kDoctor;
  double start_sec = 0.0;
  double end_sec = 0.0;
  std::vector<std::string> tokens;
  Source source = Source::kTwoPass;
};

struct CoverageReport {
  long long words_total = 0;
  long long words_pass1 = 0;         // island-timed
  long long words_pass2 = 0;         // forced-aligned in the second pass
  long long words_interpolated = 0;  // the remainder

  // Cumulative fractions: pass 2 includes pass 1.
  double coverage_pass1() const;
  double coverage_pass2() const;
};

struct Pass1Result {
  std::vector<ConfidenceIsland> islands;
  int words_total = 0;
  int words_island = 0;
  int chunks_failed = 0;
};

// First pass (confidence islands): recognize each chunk under the grammar,
// tag chunk-boundary words, concatenate, align against the full transcript,
// detect islands and keep a monotone chain. A recognizer failure on a chunk
// contributes no hypothesis words (counted, not fatal). The grammar must be
// built from the conversation's full word stream.
Pass1Result pass1(const Conversation& conv, const Recognizer& recognizer,
                  const LinearIslandGrammar& grammar,
                  const PipelineConfig& cfg = {});

// Islands as ISLAND-provenance aligned words (tokens from the word stream).
std::vector<AlignedWord> island_aligned_words(
    std::span<const ConfidenceIsland> islands, const Conversation& conv);

struct Pass2Result {
  std::vector<AlignedWord> added;  // FORCED words only
  CoverageReport coverage;
};

// Second pass: every maximal unaligned run is forced-aligned on the frames
// between its bounding islands (conversation edges when there is no island on
// a side). Runs that do not fit their window fall through to interpolation.
Pass2Result pass2(const Conversation& conv,
                  std::span<const ConfidenceIsland> islands,
                  const FrameScores& fs, const PipelineConfig& cfg = {});

// Places every still-untimed word between its nearest timed neighbors, gap
// time divided proportionally to token character counts (INTERPOLATED
// provenance). With no timed words at all the conversation is spread
// uniformly. The result covers every transcript word exactly once with
// non-decreasing start times.
AlignedTranscript interpolate_residual(std::vector<AlignedWord> timed,
                                       const Conversation& conv,
                                       int frame_rate_hz = 100);

// One segment per turn with at least one word: start/end from the turn's
// first/last aligned word.
std::vector<Segment> cut_turns(const AlignedTranscript& at,
                               const Conversation& conv,
                               Source source = Source::kTwoPass);

enum class SegmentRole { kTrain, kTest };

// Drops segments containing the de-id tag (always); TEST additionally drops
// segments shorter than 5 words, TRAIN drops single-word segments.
std::vector<Segment> filter_segments(std::vector<Segment> segments,
                                     SegmentRole role);

struct SplitSpec {
  int k_test = 100;
  std::vector<std::string> target_disease_areas = {
      "cardiology",    "dermatology", "diabetes",    "mental_health",
      "oncology",      "primary_care", "pulmonology", "urology"};
  int n_target_test = 64;
  int n_nontarget_test = 36;
  bool require_gender_balance = true;
};

struct SplitResult {
  std::vector<std::string> train_ids;  // sorted
  std::vector<std::string> test_ids;   // sorted
};

// Samples k_test test conversations with pairwise-distinct doctors, exact
// gender balance when required, and per-disease-area stratification
// (n_target_test spread over the target areas, remainder from non-target
// areas). Every other conversation by a test doctor is excluded from train.
// Deterministic given seed; throws with the binding constraint on
// infeasibility.
SplitResult split_corpus(std::span<const Conversation> conversations,
                         const SplitSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Corpus-level drivers for the three alignment strategies.

enum class Strategy { kOriginal, kBuffered, kTwoPass };

// Simulator knobs for the acoustic channel backing buffered/two-pass runs.
// The frame-score channel models a weak out-of-domain acoustic model; the
// grammar-constrained recognizer's word timing (ErrorModel.jitter_sd_sec) is
// tighter.
struct AcousticConfig {
  double gain = 1.0;
  double noise_sd = 3.0;
  int frame_rate_hz = 100;
  ErrorModel em;
};

struct ConversationAlignment {
  AlignedTranscript transcript;
  CoverageReport coverage;
  std::vector<Segment> segments;
  int chunks_failed = 0;
  bool failed = false;  // conversation-level failure; run continues
  std::string error;
};

struct CorpusInput {
  Conversation conv;
  TrueTimeline truth;  // drives the simulated acoustics; may be empty for
                       // Strategy::kOriginal
};

// Aligns every conversation. Per-conversation substream seeds are
// mix_seed(seed, ordinal), so results do not depend on scheduling; the
// buffered strategy's worst-tail drop is global across the corpus. `jobs`
// bounds the OpenMP team (1 = serial loop).
std::vector<ConversationAlignment> align_corpus(
    std::span<const CorpusInput> inputs, Strategy strategy,
    const PipelineConfig& cfg, const AcousticConfig& ac, std::uint64_t seed,
    int jobs);

// Serial reference implementation (no OpenMP). Identical output.
std::vector<ConversationAlignment> align_corpus_serial(
    std::span<const CorpusInput> inputs, Strategy strategy,
    const PipelineConfig& cfg, const AcousticConfig& ac, std::uint64_t seed);

CoverageReport total_coverage(std::span<const ConversationAlignment> results);

struct BoundaryStats {
  long long n_boundaries = 0;
  double median_abs_err = 0.0;
  double mean_abs_err = 0.0;
  double p90_abs_err = 0.0;
};

// Segment start/end error against the true turn spans derived from the
// timelines. Turns without a surviving segment (dropped tails, de-id-only)
// are skipped.
BoundaryStats boundary_error_stats(std::span<const CorpusInput> inputs,
                                   std::span<const ConversationAlignment> results);

// Segment file format: TSV, one per line:
//   conversation_id  turn_index  speaker  start  end  space-joined tokens
// with times printed to exactly 3 decimals.
std::string format_segments(std::span<const Segment> segments);
std::vector<Segment> parse_segments(const std::string& text);

}  // namespace convalign

#endif  // CONVALIGN_PIPELINE_HPP_
