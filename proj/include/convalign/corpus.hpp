// include/convalign/corpus.hpp

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

#ifndef CONVALIGN_CORPUS_HPP_
#define CONVALIGN_CORPUS_HPP_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace convalign {

// Sentinel token standing in for de-identified words. The corresponding audio
// was zeroed at transcription time, so these words carry no usable signal.
inline constexpr const char* kDeidToken = "<deid>";

enum class Speaker { kDoctor, kPatient, kCaregiver, kOther };
enum class Gender { kMale, kFemale };
enum class Provenance { kIsland, kForced, kInterpolated };

struct Metadata {
  std::string doctor_id;
  Gender doctor_gender = Gender::kMale;
  std::string interaction_type;
  std::optional<std::string> disease_area;

  friend bool operator==(const Metadata&, const Metadata&) = default;
};

// One speaker turn. Annotator timestamps are approximate (often off by
// seconds); `words` holds normalized tokens.
struct Turn {
  Speaker speaker = Speaker::kDoctor;
  double ann_start_sec = 0.0;
  double ann_end_sec = 0.0;
  std::vector<std::string> words;
  bool has_deid = false;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Conversation {
  std::string conversation_id;
  Metadata metadata;
  std::vector<Turn> turns;
  double audio_duration_sec = 0.0;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

// One transcript word with a time span and how that span was obtained.
struct AlignedWord {
  int global_index = 0;
  std::string token;
  double start_sec = 0.0;
  double end_sec = 0.0;
  Provenance provenance = Provenance::kInterpolated;

  friend bool operator==(const AlignedWord&, const AlignedWord&) = default;
};

// Full word-level alignment of one conversation. `words` covers every
// transcript word exactly once, sorted by global_index, start times
// non-decreasing. coverage_pass2 is cumulative (island + forced fraction).
struct AlignedTranscript {
  std::string conversation_id;
  std::vector<AlignedWord> words;
  double coverage_pass1 = 0.0;
  double coverage_pass2 = 0.0;
};

struct StreamWord {
  int global_index = 0;
  int turn_index = 0;
  std::string token;

  friend bool operator==(const StreamWord&, const StreamWord&) = default;
};

// Lowercases ASCII, strips leading/trailing non-alphanumeric characters,
// keeps internal apostrophes/hyphens/etc., maps de-identification markers
// ("[deid]" or "<deid>", any case) to kDeidToken. Returns "" when the token
// empties out (non-lexical input; callers drop it). Idempotent.
std::string normalize_token(const std::string& raw);

const char* speaker_code(Speaker s);              // "DR" | "PT" | "CG" | "OT"
Speaker speaker_from_code(const std::string& c);  // throws on unknown code
const char* gender_code(Gender g);                // "M" | "F"
Gender gender_from_code(const std::string& c);
const char* provenance_code(Provenance p);        // "ISLAND" | "FORCED" | "INTERP"
Provenance provenance_from_code(const std::string& c);

// Throws std::runtime_error describing the first violated invariant.
void validate(const Conversation& conv);

// Parses the conversation JSON format. Tokens are normalized, has_deid is
// derived from the word lists, and the result is validated. Throws on
// malformed input.
Conversation parse_conversation(const std::string& bytes);

// Inverse of parse_conversation; emits normalized tokens. Deterministic
// (keys serialized in sorted order), so parse(serialize(c)) == c.
std::string serialize_conversation(const Conversation& conv);

// Concatenation of all turn word lists in turn order, global_index dense
// from 0. Turns with empty word lists (de-id-only) contribute nothing.
std::vector<StreamWord> word_stream(const Conversation& conv);

// Alignment line format (bit-exact):
//   conversation_id global_index start_sec end_sec token provenance
// with times printed to exactly 3 decimals.
std::string format_alignment(const std::string& conversation_id,
                             std::span<const AlignedWord> words);
std::vector<AlignedWord> parse_alignment(const std::string& text,
                                         std::string* conversation_id);

}  // namespace convalign

#endif  // CONVALIGN_CORPUS_HPP_
