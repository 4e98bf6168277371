// include/convalign/evalkit.hpp

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

// WER with S/D/I accounting, per-category breakdowns, and phrase/lexicon
// precision-recall over paired speaker-turn segments.

#ifndef CONVALIGN_EVALKIT_HPP_
#define CONVALIGN_EVALKIT_HPP_

#include <span>
#include <string>
#include <vector>

#include "convalign/corpus.hpp"
#include "convalign/pipeline.hpp"

namespace convalign {

struct WerResult {
  long long n_ref_words = 0;
  long long substitutions = 0;
  long long deletions = 0;
  long long insertions = 0;

  long long errors() const { return substitutions + deletions + insertions; }
  // (S+D+I)/N; NaN when there are no reference words (rendered "-").
  double wer() const;
};

// Pools S/D/I over segment pairs matched by (conversation_id, turn_index).
// Throws listing the offending ids when any segment on either side is
// unpaired. Pair order does not matter.
WerResult wer(std::span<const Segment> ref, std::span<const Segment> hyp);

// Serial reference implementation (no OpenMP). Identical result.
WerResult wer_serial(std::span<const Segment> ref,
                     std::span<const Segment> hyp);

enum class BreakdownCategory { kAll, kSpeaker, kGender, kDiseaseArea };

struct BreakdownRow {
  BreakdownCategory category = BreakdownCategory::kAll;
  std::string label;
  WerResult result;
};

struct BreakdownReport {
  std::vector<BreakdownRow> rows;
};

// Rows for All, speaker in {Doctor, Patient}, gender in {Male, Female}, and
// each disease area present in the metadata. Throws when a segment's
// conversation metadata is missing.
BreakdownReport breakdown(std::span<const Segment> ref,
                          std::span<const Segment> hyp,
                          std::span<const Conversation> conversations);

struct PhraseStat {
  std::vector<std::string> phrase;
  long long ref_occurrences = 0;
  long long hyp_occurrences = 0;
  long long matched = 0;
};

struct PhraseMetrics {
  std::vector<PhraseStat> per_phrase;
  long long ref_occurrences = 0;
  long long hyp_occurrences = 0;
  long long matched = 0;

  double precision() const;  // matched / hyp_occurrences; NaN when empty
  double recall() const;     // matched / ref_occurrences; NaN when empty
};

// Occurrences are counted per segment by a greedy non-overlapping
// left-to-right scan; matched = min(ref count, hyp count) per segment per
// phrase. Segments are paired as in wer(). Throws on an empty phrase.
PhraseMetrics phrase_metrics(
    std::span<const std::vector<std::string>> phrases,
    std::span<const Segment> ref, std::span<const Segment> hyp);

// Recall restricted to lexicon entries that occur in the reference; NaN when
// none do (rendered "-").
double lexicon_recall(std::span<const std::vector<std::string>> lexicon,
                      std::span<const Segment> ref,
                      std::span<const Segment> hyp);

// Phrase/lexicon file format: UTF-8, one phrase per line, tokens
// space-separated; blank lines ignored. Tokens are normalized.
std::vector<std::vector<std::string>> parse_phrase_file(
    const std::string& text);

// Plain-text table: category | label | words | WER%.
std::string render_breakdown_table(const BreakdownReport& report);

// JSON report with the breakdown rows and aggregate phrase metrics
// (undefined rates serialized as null).
std::string report_to_json(const BreakdownReport& report,
                           const PhraseMetrics* phrases,
                           const double* lexicon_recall_value);

}  // namespace convalign

#endif  // CONVALIGN_EVALKIT_HPP_
