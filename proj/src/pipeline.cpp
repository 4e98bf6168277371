// src/pipeline.cpp

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

#include "convalign/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "convalign/rng.hpp"

namespace convalign {

namespace {

constexpr std::uint64_t kSaltScores = 0x5c0fe5ull;
constexpr std::uint64_t kSaltRecognizer = 0x4ec09ull;

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::vector<TimeSpan> chunk_spans(double duration_sec, double chunk_sec) {
  if (duration_sec <= 0) {
    throw std::invalid_argument("chunk_spans: duration must be positive");
  }
  if (chunk_sec <= 0) {
    throw std::invalid_argument("chunk_spans: chunk_sec must be positive");
  }
  std::vector<TimeSpan> spans;
  for (int k = 0; k * chunk_sec < duration_sec; ++k) {
    spans.push_back(
        {k * chunk_sec, std::min((k + 1) * chunk_sec, duration_sec)});
  }
  return spans;
}

double CoverageReport::coverage_pass1() const {
  return words_total == 0 ? 0.0
                          : static_cast<double>(words_pass1) / words_total;
}

double CoverageReport::coverage_pass2() const {
  return words_total == 0
             ? 0.0
             : static_cast<double>(words_pass1 + words_pass2) / words_total;
}

Pass1Result pass1(const Conversation& conv, const Recognizer& recognizer,
                  const LinearIslandGrammar& grammar,
                  const PipelineConfig& cfg) {
  const std::vector<StreamWord> stream = word_stream(conv);
  Pass1Result res;
  res.words_total = static_cast<int>(stream.size());
  if (stream.empty() || conv.audio_duration_sec <= 0) return res;

  std::vector<std::string> ref;
  ref.reserve(stream.size());
  for (const StreamWord& w : stream) ref.push_back(w.token);
  if (grammar.tokens() != ref) {
    throw std::invalid_argument(
        "pass1: grammar was not built from this conversation's word stream");
  }

  std::vector<HypWord> hyp;
  const std::vector<TimeSpan> chunks =
      chunk_spans(conv.audio_duration_sec, cfg.chunk_sec);
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    std::vector<HypWord> words;
    try {
      words = recognizer.recognize(chunks[c].begin, chunks[c].end, &grammar);
    } catch (const std::exception&) {
      ++res.chunks_failed;  // chunk contributes no hypothesis words
      continue;
    }
    if (words.empty()) continue;
    for (HypWord& w : words) w.chunk_id = static_cast<int>(c);
    words.front().is_chunk_first = true;
    words.back().is_chunk_last = true;
    hyp.insert(hyp.end(), words.begin(), words.end());
  }

  std::vector<std::string> hyp_tokens;
  hyp_tokens.reserve(hyp.size());
  for (const HypWord& w : hyp) hyp_tokens.push_back(w.token);

  const EditPath path = edit_align(ref, hyp_tokens);
  res.islands =
      monotone_island_chain(detect_islands(path, hyp, cfg.min_island_len));
  for (const ConfidenceIsland& isl : res.islands) {
    res.words_island += isl.size();
  }
  return res;
}

std::vector<AlignedWord> island_aligned_words(
    std::span<const ConfidenceIsland> islands, const Conversation& conv) {
  const std::vector<StreamWord> stream = word_stream(conv);
  std::vector<AlignedWord> out;
  for (const ConfidenceIsland& isl : islands) {
    for (const TimedWord& w : isl.words) {
      out.push_back({w.global_index, stream[w.global_index].token, w.start_sec,
                     w.end_sec, Provenance::kIsland});
    }
  }
  return out;
}

Pass2Result pass2(const Conversation& conv,
                  std::span<const ConfidenceIsland> islands,
                  const FrameScores& fs, const PipelineConfig& cfg) {
  const std::vector<StreamWord> stream = word_stream(conv);
  const int n = static_cast<int>(stream.size());
  const double duration = conv.audio_duration_sec;
  const double rate = fs.frame_rate_hz;

  std::vector<double> start(n), end(n);
  std::vector<bool> timed(n, false);
  for (const ConfidenceIsland& isl : islands) {
    for (const TimedWord& w : isl.words) {
      timed[w.global_index] = true;
      start[w.global_index] = w.start_sec;
      end[w.global_index] = w.end_sec;
    }
  }

  Pass2Result res;
  res.coverage.words_total = n;
  for (int i = 0; i < n; ++i) {
    if (timed[i]) ++res.coverage.words_pass1;
  }

  int i = 0;
  while (i < n) {
    if (timed[i]) {
      ++i;
      continue;
    }
    const int a = i;
    int b = a;
    while (b < n && !timed[b]) ++b;
    i = b;

    // Window bounded by the neighboring island words (conversation edges when
    // absent), widened by the pad but never past a neighbor's own span so
    // start times stay non-decreasing across the transcript.
    double t_lo = 0.0;
    if (a > 0) {
      const double w = end[a - 1] - start[a - 1];
      t_lo = std::max(0.0, end[a - 1] - std::min(cfg.gap_pad_sec, w));
    }
    double t_hi = duration;
    double next_start = duration;
    if (b < n) {
      next_start = start[b];
      const double w = end[b] - start[b];
      t_hi = std::min(duration, start[b] + std::min(cfg.gap_pad_sec, w));
    }
    if (t_hi <= t_lo) continue;  // inverted bounds -> interpolation

    const int f_lo = std::max(0, static_cast<int>(std::floor(t_lo * rate)));
    const int f_hi =
        std::min(fs.n_frames, static_cast<int>(std::ceil(t_hi * rate)));
    if (f_hi - f_lo < (b - a) * cfg.min_frames_per_word) continue;

    std::vector<std::string> tokens;
    tokens.reserve(static_cast<std::size_t>(b - a));
    for (int k = a; k < b; ++k) tokens.push_back(stream[k].token);

    std::vector<WordSpan> spans;
    try {
      spans = viterbi_segment(fs, tokens, f_lo, f_hi, cfg.min_frames_per_word,
                              a);
    } catch (const std::exception&) {
      continue;  // falls through to interpolation
    }
    for (const WordSpan& s : spans) {
      AlignedWord w{s.global_index, stream[s.global_index].token,
                    s.frame_begin / rate, s.frame_end / rate,
                    Provenance::kForced};
      // The pad may let the last words spill past the following island's
      // start; clamp so start times stay non-decreasing.
      if (w.start_sec > next_start) w.start_sec = next_start;
      res.added.push_back(std::move(w));
    }
    res.coverage.words_pass2 += b - a;
  }

  res.coverage.words_interpolated =
      n - res.coverage.words_pass1 - res.coverage.words_pass2;
  return res;
}

AlignedTranscript interpolate_residual(std::vector<AlignedWord> timed,
                                       const Conversation& conv,
                                       int frame_rate_hz) {
  const std::vector<StreamWord> stream = word_stream(conv);
  const int n = static_cast<int>(stream.size());
  const double duration = conv.audio_duration_sec;
  const double min_w = 1.0 / frame_rate_hz;

  std::vector<AlignedWord> words(static_cast<std::size_t>(n));
  std::vector<bool> have(static_cast<std::size_t>(n), false);
  for (AlignedWord& w : timed) {
    if (w.global_index < 0 || w.global_index >= n) {
      throw std::invalid_argument("interpolate_residual: index out of range");
    }
    if (have[w.global_index]) {
      throw std::invalid_argument("interpolate_residual: duplicate word " +
                                  std::to_string(w.global_index));
    }
    if (w.token != stream[w.global_index].token) {
      throw std::invalid_argument(
          "interpolate_residual: token mismatch at index " +
          std::to_string(w.global_index));
    }
    have[w.global_index] = true;
    words[w.global_index] = std::move(w);
  }

  if (n > 0 && duration < min_w) {
    throw std::invalid_argument(
        "interpolate_residual: audio shorter than one frame");
  }

  const bool any_timed = !timed.empty();
  int i = 0;
  while (i < n) {
    if (have[i]) {
      ++i;
      continue;
    }
    const int a = i;
    int b = a;
    while (b < n && !have[b]) ++b;
    i = b;

    const double left = (a > 0) ? words[a - 1].end_sec : 0.0;
    const double right = (b < n) ? words[b].start_sec : duration;
    const double gap = right - left;
    const int count = b - a;

    if (gap < count * min_w) {
      // Degenerate gap: every word gets a one-frame span at the neighbors'
      // shared boundary (overlap is fine, only start order must hold).
      const double bdy = std::min(std::max(0.5 * (left + right), 0.0),
                                  std::max(0.0, duration - min_w));
      for (int k = a; k < b; ++k) {
        words[k] = {k, stream[k].token, bdy, bdy + min_w,
                    Provenance::kInterpolated};
      }
      continue;
    }

    // Gap time divided proportionally to token character counts; with no
    // timed anchor anywhere the conversation is spread uniformly.
    double total_weight = 0.0;
    for (int k = a; k < b; ++k) {
      total_weight +=
          any_timed ? static_cast<double>(stream[k].token.size()) : 1.0;
    }
    double s = left;
    for (int k = a; k < b; ++k) {
      const double weight =
          any_timed ? static_cast<double>(stream[k].token.size()) : 1.0;
      double e = (k == b - 1) ? right : s + gap * weight / total_weight;
      words[k] = {k, stream[k].token, s, e, Provenance::kInterpolated};
      s = e;
    }
  }

  AlignedTranscript at;
  at.conversation_id = conv.conversation_id;
  at.words = std::move(words);
  CoverageReport cov;
  cov.words_total = n;
  for (const AlignedWord& w : at.words) {
    switch (w.provenance) {
      case Provenance::kIsland: ++cov.words_pass1; break;
      case Provenance::kForced: ++cov.words_pass2; break;
      case Provenance::kInterpolated: ++cov.words_interpolated; break;
    }
  }
  at.coverage_pass1 = cov.coverage_pass1();
  at.coverage_pass2 = cov.coverage_pass2();
  return at;
}

std::vector<Segment> cut_turns(const AlignedTranscript& at,
                               const Conversation& conv, Source source) {
  const std::vector<StreamWord> stream = word_stream(conv);
  const int n = static_cast<int>(stream.size());
  if (static_cast<int>(at.words.size()) != n) {
    throw std::invalid_argument("cut_turns: alignment does not cover the "
                                "transcript");
  }
  for (int i = 0; i < n; ++i) {
    if (at.words[i].global_index != i) {
      throw std::invalid_argument("cut_turns: alignment not indexed 0..n-1");
    }
  }

  std::vector<Segment> segments;
  int gi = 0;
  for (std::size_t ti = 0; ti < conv.turns.size(); ++ti) {
    const Turn& turn = conv.turns[ti];
    const int first = gi;
    gi += static_cast<int>(turn.words.size());
    if (turn.words.empty()) continue;  // de-id-only empty turn
    segments.push_back({conv.conversation_id, static_cast<int>(ti),
                        turn.speaker, at.words[first].start_sec,
                        at.words[gi - 1].end_sec, turn.words, source});
  }
  return segments;
}

std::vector<Segment> filter_segments(std::vector<Segment> segments,
                                     SegmentRole role) {
  const std::size_t min_tokens = role == SegmentRole::kTest ? 5 : 2;
  std::vector<Segment> kept;
  kept.reserve(segments.size());
  for (Segment& s : segments) {
    const bool has_deid =
        std::find(s.tokens.begin(), s.tokens.end(), kDeidToken) !=
        s.tokens.end();
    if (has_deid) continue;
    if (s.tokens.size() < min_tokens) continue;
    kept.push_back(std::move(s));
  }
  return kept;
}

SplitResult split_corpus(std::span<const Conversation> conversations,
                         const SplitSpec& spec, std::uint64_t seed) {
  if (spec.n_target_test + spec.n_nontarget_test != spec.k_test) {
    throw std::invalid_argument(
        "split: n_target_test + n_nontarget_test must equal k_test");
  }
  if (spec.k_test <= 0) throw std::invalid_argument("split: k_test must be > 0");
  if (spec.require_gender_balance && spec.k_test % 2 != 0) {
    throw std::invalid_argument(
        "split infeasible: gender balance requires an even k_test");
  }
  if (spec.n_target_test > 0 && spec.target_disease_areas.empty()) {
    throw std::invalid_argument(
        "split: n_target_test > 0 but no target disease areas given");
  }

  // Doctors must carry a consistent gender across their conversations.
  std::unordered_map<std::string, Gender> doctor_gender;
  for (const Conversation& c : conversations) {
    const auto [it, inserted] =
        doctor_gender.emplace(c.metadata.doctor_id, c.metadata.doctor_gender);
    if (!inserted && it->second != c.metadata.doctor_gender) {
      throw std::runtime_error("split: doctor " + c.metadata.doctor_id +
                               " appears with two genders");
    }
  }

  std::vector<std::string> areas = spec.target_disease_areas;
  std::sort(areas.begin(), areas.end());
  areas.erase(std::unique(areas.begin(), areas.end()), areas.end());
  const std::set<std::string> area_set(areas.begin(), areas.end());

  // Candidate conversation indices per stratum: one per target area, plus the
  // non-target remainder.
  std::vector<std::vector<int>> strata(areas.size() + 1);
  for (int i = 0; i < static_cast<int>(conversations.size()); ++i) {
    const auto& da = conversations[i].metadata.disease_area;
    if (da && area_set.count(*da)) {
      const auto pos = std::lower_bound(areas.begin(), areas.end(), *da);
      strata[pos - areas.begin()].push_back(i);
    } else {
      strata[areas.size()].push_back(i);
    }
  }

  std::vector<int> quota(strata.size());
  if (!areas.empty()) {
    const int base = spec.n_target_test / static_cast<int>(areas.size());
    const int rem = spec.n_target_test % static_cast<int>(areas.size());
    for (std::size_t s = 0; s < areas.size(); ++s) {
      quota[s] = base + (static_cast<int>(s) < rem ? 1 : 0);
    }
  }
  quota[areas.size()] = spec.n_nontarget_test;

  std::string failure;
  constexpr int kAttempts = 50;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::unordered_set<std::string> used_doctors;
    int male_left = spec.require_gender_balance ? spec.k_test / 2 : spec.k_test;
    int female_left =
        spec.require_gender_balance ? spec.k_test / 2 : spec.k_test;
    std::vector<int> selected;
    bool ok = true;

    for (std::size_t s = 0; s < strata.size() && ok; ++s) {
      std::vector<int> cand = strata[s];
      for (std::size_t x = cand.size(); x > 1; --x) {  // Fisher-Yates
        std::swap(cand[x - 1], cand[rng.uniform_int(x)]);
      }
      int need = quota[s];
      for (int idx : cand) {
        if (need == 0) break;
        const Conversation& c = conversations[idx];
        if (used_doctors.count(c.metadata.doctor_id)) continue;
        int& left = c.metadata.doctor_gender == Gender::kMale ? male_left
                                                              : female_left;
        if (left == 0) continue;
        --left;
        used_doctors.insert(c.metadata.doctor_id);
        selected.push_back(idx);
        --need;
      }
      if (need > 0) {
        ok = false;
        failure = "stratum '" +
                  (s < areas.size() ? areas[s] : std::string("non-target")) +
                  "' short by " + std::to_string(need) +
                  " conversation(s) (distinct-doctor/gender constraints)";
      }
    }
    if (!ok) continue;

    SplitResult result;
    std::unordered_set<std::string> test_doctors;
    std::unordered_set<int> selected_set(selected.begin(), selected.end());
    for (int idx : selected) {
      result.test_ids.push_back(conversations[idx].conversation_id);
      test_doctors.insert(conversations[idx].metadata.doctor_id);
    }
    for (int i = 0; i < static_cast<int>(conversations.size()); ++i) {
      if (selected_set.count(i)) continue;
      if (test_doctors.count(conversations[i].metadata.doctor_id)) continue;
      result.train_ids.push_back(conversations[i].conversation_id);
    }
    std::sort(result.test_ids.begin(), result.test_ids.end());
    std::sort(result.train_ids.begin(), result.train_ids.end());
    return result;
  }
  throw std::runtime_error("split infeasible: " + failure);
}

// ---------------------------------------------------------------------------
// Corpus-level strategy drivers.

namespace {

std::vector<std::string> conversation_vocab(
    const std::vector<StreamWord>& stream) {
  std::set<std::string> uniq;
  for (const StreamWord& w : stream) uniq.insert(w.token);
  std::vector<std::string> vocab(uniq.begin(), uniq.end());
  vocab.push_back(kGapToken);
  return vocab;
}

// Keeps start times non-decreasing and spans at least min_w wide inside
// [0, duration]. Needed where overlapping annotated/realigned turns can put
// word spans out of order. Requires duration >= min_w.
void repair_word_times(std::vector<AlignedWord>& words, double duration,
                       double min_w) {
  double prev_start = 0.0;
  for (AlignedWord& w : words) {
    w.start_sec = std::max(w.start_sec, prev_start);
    w.start_sec = std::min(w.start_sec, duration - min_w);
    w.end_sec = std::max(w.end_sec, w.start_sec + min_w);
    w.end_sec = std::min(w.end_sec, duration);
    prev_start = w.start_sec;
  }
}

CoverageReport coverage_of(const AlignedTranscript& at) {
  CoverageReport cov;
  cov.words_total = static_cast<long long>(at.words.size());
  for (const AlignedWord& w : at.words) {
    switch (w.provenance) {
      case Provenance::kIsland: ++cov.words_pass1; break;
      case Provenance::kForced: ++cov.words_pass2; break;
      case Provenance::kInterpolated: ++cov.words_interpolated; break;
    }
  }
  return cov;
}

ConversationAlignment empty_alignment(const Conversation& conv) {
  ConversationAlignment out;
  out.transcript.conversation_id = conv.conversation_id;
  return out;
}

ConversationAlignment align_two_pass_one(const CorpusInput& input,
                                         const PipelineConfig& cfg,
                                         const AcousticConfig& ac,
                                         std::uint64_t sub_seed) {
  const Conversation& conv = input.conv;
  const std::vector<StreamWord> stream = word_stream(conv);
  if (stream.empty()) return empty_alignment(conv);
  if (input.truth.size() != stream.size()) {
    ConversationAlignment out = empty_alignment(conv);
    out.failed = true;
    out.error = "truth timeline does not match the transcript word stream";
    return out;
  }

  std::vector<std::string> ref;
  ref.reserve(stream.size());
  for (const StreamWord& w : stream) ref.push_back(w.token);
  const LinearIslandGrammar grammar(ref);
  const std::vector<std::string> vocab = conversation_vocab(stream);

  ErrorModel em = ac.em;
  em.seed = mix_seed(sub_seed, kSaltRecognizer);
  const SimRecognizer recognizer(input.truth, vocab, em);

  ConversationAlignment out;
  const Pass1Result p1 = pass1(conv, recognizer, grammar, cfg);
  out.chunks_failed = p1.chunks_failed;

  const FrameScores fs = synth_frame_scores(
      input.truth, vocab, ac.gain, ac.noise_sd, mix_seed(sub_seed, kSaltScores),
      conv.audio_duration_sec, ac.frame_rate_hz);
  const Pass2Result p2 = pass2(conv, p1.islands, fs, cfg);

  std::vector<AlignedWord> timed = island_aligned_words(p1.islands, conv);
  timed.insert(timed.end(), p2.added.begin(), p2.added.end());

  out.transcript = interpolate_residual(std::move(timed), conv,
                                        ac.frame_rate_hz);
  out.coverage = coverage_of(out.transcript);
  out.segments = cut_turns(out.transcript, conv, Source::kTwoPass);
  return out;
}

ConversationAlignment align_original_one(const CorpusInput& input,
                                         const AcousticConfig& ac) {
  const Conversation& conv = input.conv;
  const std::vector<StreamWord> stream = word_stream(conv);
  ConversationAlignment out = empty_alignment(conv);
  if (stream.empty()) return out;

  const double duration = conv.audio_duration_sec;
  const double min_w = 1.0 / ac.frame_rate_hz;

  // Words spread char-proportionally across each annotated turn span. The
  // annotated spans may overlap, so a repair pass keeps start times
  // non-decreasing for the transcript invariant.
  std::vector<AlignedWord> words;
  words.reserve(stream.size());
  int gi = 0;
  for (const Turn& turn : conv.turns) {
    const int count = static_cast<int>(turn.words.size());
    if (count == 0) continue;
    const double left = turn.ann_start_sec;
    const double right = turn.ann_end_sec;
    if (right - left < count * min_w) {
      const double bdy =
          std::min(std::max(left, 0.0), std::max(0.0, duration - min_w));
      for (int k = 0; k < count; ++k) {
        words.push_back({gi + k, turn.words[k], bdy, bdy + min_w,
                         Provenance::kInterpolated});
      }
    } else {
      double total_weight = 0.0;
      for (const std::string& t : turn.words) {
        total_weight += static_cast<double>(t.size());
      }
      double s = left;
      for (int k = 0; k < count; ++k) {
        const double e =
            (k == count - 1)
                ? right
                : s + (right - left) *
                          static_cast<double>(turn.words[k].size()) /
                          total_weight;
        words.push_back(
            {gi + k, turn.words[k], s, e, Provenance::kInterpolated});
        s = e;
      }
    }
    gi += count;
  }
  if (duration < min_w) {
    out.failed = true;
    out.error = "audio shorter than one frame";
    return out;
  }
  repair_word_times(words, duration, min_w);

  out.transcript.conversation_id = conv.conversation_id;
  out.transcript.words = std::move(words);
  out.coverage = coverage_of(out.transcript);
  out.transcript.coverage_pass1 = out.coverage.coverage_pass1();
  out.transcript.coverage_pass2 = out.coverage.coverage_pass2();

  // Segments copy the annotated stamps.
  for (std::size_t ti = 0; ti < conv.turns.size(); ++ti) {
    const Turn& turn = conv.turns[ti];
    if (turn.words.empty()) continue;
    out.segments.push_back({conv.conversation_id, static_cast<int>(ti),
                            turn.speaker, turn.ann_start_sec, turn.ann_end_sec,
                            turn.words, Source::kOriginal});
  }
  return out;
}

struct BufferedTurn {
  int turn_index = 0;
  RealignedTurn realign;
};

struct BufferedPhase1 {
  std::vector<BufferedTurn> turns;  // successfully realigned turns
  bool failed = false;
  std::string error;
};

BufferedPhase1 buffered_realign_conversation(const CorpusInput& input,
                                             const PipelineConfig& cfg,
                                             const AcousticConfig& ac,
                                             std::uint64_t sub_seed) {
  BufferedPhase1 out;
  const Conversation& conv = input.conv;
  const std::vector<StreamWord> stream = word_stream(conv);
  if (stream.empty()) return out;
  if (input.truth.size() != stream.size()) {
    out.failed = true;
    out.error = "truth timeline does not match the transcript word stream";
    return out;
  }
  const std::vector<std::string> vocab = conversation_vocab(stream);
  const FrameScores fs = synth_frame_scores(
      input.truth, vocab, ac.gain, ac.noise_sd, mix_seed(sub_seed, kSaltScores),
      conv.audio_duration_sec, ac.frame_rate_hz);
  for (std::size_t ti = 0; ti < conv.turns.size(); ++ti) {
    if (conv.turns[ti].words.empty()) continue;
    try {
      out.turns.push_back(
          {static_cast<int>(ti),
           buffered_realign(conv.turns[ti], fs, cfg.buffer_sec)});
    } catch (const std::exception&) {
      // Clamped window too short: the turn falls back to interpolation.
    }
  }
  return out;
}

ConversationAlignment buffered_finalize(const CorpusInput& input,
                                        const BufferedPhase1& phase1,
                                        const std::vector<bool>& kept_flags,
                                        std::size_t kept_offset,
                                        const AcousticConfig& ac) {
  const Conversation& conv = input.conv;
  ConversationAlignment out = empty_alignment(conv);
  if (phase1.failed) {
    out.failed = true;
    out.error = phase1.error;
    return out;
  }
  const std::vector<StreamWord> stream = word_stream(conv);
  if (stream.empty()) return out;

  // First global index of each turn.
  std::vector<int> turn_first(conv.turns.size(), 0);
  {
    int gi = 0;
    for (std::size_t ti = 0; ti < conv.turns.size(); ++ti) {
      turn_first[ti] = gi;
      gi += static_cast<int>(conv.turns[ti].words.size());
    }
  }

  const double rate = ac.frame_rate_hz;
  std::vector<AlignedWord> timed;
  for (std::size_t k = 0; k < phase1.turns.size(); ++k) {
    if (!kept_flags[kept_offset + k]) continue;
    const BufferedTurn& bt = phase1.turns[k];
    const int base = turn_first[bt.turn_index];
    for (const WordSpan& s : bt.realign.spans) {
      const int gi = base + (s.global_index);  // spans carry 0-based positions
      timed.push_back({gi, stream[gi].token, s.frame_begin / rate,
                       s.frame_end / rate, Provenance::kForced});
    }
    out.segments.push_back({conv.conversation_id, bt.turn_index,
                            conv.turns[bt.turn_index].speaker,
                            bt.realign.start_sec, bt.realign.end_sec,
                            conv.turns[bt.turn_index].words,
                            Source::kBuffered});
  }

  // Realigned turns can overlap when annotations do; keep start times
  // non-decreasing by clamping against the running maximum.
  std::sort(timed.begin(), timed.end(),
            [](const AlignedWord& a, const AlignedWord& b) {
              return a.global_index < b.global_index;
            });
  if (conv.audio_duration_sec < 1.0 / rate) {
    out.failed = true;
    out.error = "audio shorter than one frame";
    return out;
  }
  repair_word_times(timed, conv.audio_duration_sec, 1.0 / rate);

  out.transcript =
      interpolate_residual(std::move(timed), conv, ac.frame_rate_hz);
  out.coverage = coverage_of(out.transcript);
  return out;
}

std::vector<ConversationAlignment> align_corpus_impl(
    std::span<const CorpusInput> inputs, Strategy strategy,
    const PipelineConfig& cfg, const AcousticConfig& ac, std::uint64_t seed,
    int jobs) {
  const int n = static_cast<int>(inputs.size());
  std::vector<ConversationAlignment> results(static_cast<std::size_t>(n));
  const int threads = std::max(1, jobs);

  const auto align_one = [&](int i) {
    const std::uint64_t sub_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    try {
      switch (strategy) {
        case Strategy::kTwoPass:
          results[i] = align_two_pass_one(inputs[i], cfg, ac, sub_seed);
          break;
        case Strategy::kOriginal:
          results[i] = align_original_one(inputs[i], ac);
          break;
        case Strategy::kBuffered:
          break;  // handled by the phased driver below
      }
    } catch (const std::exception& e) {
      results[i] = empty_alignment(inputs[i].conv);
      results[i].failed = true;
      results[i].error = e.what();
    }
  };

  if (strategy != Strategy::kBuffered) {
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (jobs > 1)
    for (int i = 0; i < n; ++i) align_one(i);
    return results;
  }

  // Buffered: realign everywhere, then one global worst-tail drop.
  std::vector<BufferedPhase1> phase1(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (jobs > 1)
  for (int i = 0; i < n; ++i) {
    const std::uint64_t sub_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    try {
      phase1[i] = buffered_realign_conversation(inputs[i], cfg, ac, sub_seed);
    } catch (const std::exception& e) {
      phase1[i].failed = true;
      phase1[i].error = e.what();
    }
  }

  std::vector<double> scores;
  for (const BufferedPhase1& p : phase1) {
    for (const BufferedTurn& t : p.turns) scores.push_back(t.realign.norm_score);
  }
  const std::vector<int> kept_idx =
      drop_worst_tail(scores, cfg.tail_fraction);
  std::vector<bool> kept(scores.size(), false);
  for (int k : kept_idx) kept[k] = true;

  std::size_t cursor = 0;
  for (int i = 0; i < n; ++i) {
    const std::size_t offset = cursor;
    cursor += phase1[i].turns.size();
    try {
      results[i] = buffered_finalize(inputs[i], phase1[i], kept, offset, ac);
    } catch (const std::exception& e) {
      results[i] = empty_alignment(inputs[i].conv);
      results[i].failed = true;
      results[i].error = e.what();
    }
  }
  return results;
}

}  // namespace

std::vector<ConversationAlignment> align_corpus(
    std::span<const CorpusInput> inputs, Strategy strategy,
    const PipelineConfig& cfg, const AcousticConfig& ac, std::uint64_t seed,
    int jobs) {
  return align_corpus_impl(inputs, strategy, cfg, ac, seed, jobs);
}

std::vector<ConversationAlignment> align_corpus_serial(
    std::span<const CorpusInput> inputs, Strategy strategy,
    const PipelineConfig& cfg, const AcousticConfig& ac, std::uint64_t seed) {
  return align_corpus_impl(inputs, strategy, cfg, ac, seed, /*jobs=*/1);
}

CoverageReport total_coverage(std::span<const ConversationAlignment> results) {
  CoverageReport total;
  for (const ConversationAlignment& r : results) {
    if (r.failed) continue;
    total.words_total += r.coverage.words_total;
    total.words_pass1 += r.coverage.words_pass1;
    total.words_pass2 += r.coverage.words_pass2;
    total.words_interpolated += r.coverage.words_interpolated;
  }
  return total;
}

BoundaryStats boundary_error_stats(
    std::span<const CorpusInput> inputs,
    std::span<const ConversationAlignment> results) {
  std::vector<double> errs;
  for (std::size_t i = 0; i < inputs.size() && i < results.size(); ++i) {
    if (results[i].failed || inputs[i].truth.empty()) continue;
    const Conversation& conv = inputs[i].conv;
    const std::vector<StreamWord> stream = word_stream(conv);
    if (inputs[i].truth.size() != stream.size()) continue;

    std::map<int, const Segment*> by_turn;
    for (const Segment& s : results[i].segments) by_turn[s.turn_index] = &s;

    int gi = 0;
    for (std::size_t ti = 0; ti < conv.turns.size(); ++ti) {
      const int count = static_cast<int>(conv.turns[ti].words.size());
      const int first = gi;
      gi += count;
      if (count == 0) continue;
      const auto it = by_turn.find(static_cast<int>(ti));
      if (it == by_turn.end()) continue;
      errs.push_back(
          std::abs(it->second->start_sec - inputs[i].truth[first].start_sec));
      errs.push_back(
          std::abs(it->second->end_sec - inputs[i].truth[gi - 1].end_sec));
    }
  }

  BoundaryStats stats;
  stats.n_boundaries = static_cast<long long>(errs.size());
  if (errs.empty()) return stats;
  std::sort(errs.begin(), errs.end());
  const std::size_t m = errs.size();
  stats.median_abs_err =
      (m % 2 == 1) ? errs[m / 2] : 0.5 * (errs[m / 2 - 1] + errs[m / 2]);
  double sum = 0.0;
  for (double e : errs) sum += e;
  stats.mean_abs_err = sum / static_cast<double>(m);
  stats.p90_abs_err = errs[std::min(m - 1, static_cast<std::size_t>(
                                               std::ceil(0.9 * m) - 1))];
  return stats;
}

std::string format_segments(std::span<const Segment> segments) {
  std::string out;
  for (const Segment& s : segments) {
    out += s.conversation_id;
    out += '\t';
    out += std::to_string(s.turn_index);
    out += '\t';
    out += speaker_code(s.speaker);
    out += '\t';
    out += fmt3(s.start_sec);
    out += '\t';
    out += fmt3(s.end_sec);
    out += '\t';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (i > 0) out += ' ';
      out += s.tokens[i];
    }
    out += '\n';
  }
  return out;
}

std::vector<Segment> parse_segments(const std::string& text) {
  std::vector<Segment> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (fields.size() < 5) {
      const std::size_t tab = line.find('\t', pos);
      if (tab == std::string::npos) break;
      fields.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    if (fields.size() != 5) {
      throw std::runtime_error("segment line " + std::to_string(lineno) +
                               ": expected 6 tab-separated fields");
    }
    Segment s;
    s.conversation_id = fields[0];
    s.turn_index = std::stoi(fields[1]);
    s.speaker = speaker_from_code(fields[2]);
    s.start_sec = std::stod(fields[3]);
    s.end_sec = std::stod(fields[4]);
    std::istringstream toks(line.substr(pos));
    std::string tok;
    while (toks >> tok) s.tokens.push_back(tok);
    if (s.tokens.empty()) {
      throw std::runtime_error("segment line " + std::to_string(lineno) +
                               ": no tokens");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace convalign
