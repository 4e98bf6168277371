// src/acoustic_sim.cpp

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

#include "convalign/acoustic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "convalign/rng.hpp"
#include "convalign/textalign.hpp"

namespace convalign {

namespace {

constexpr double kMinHypWidthSec = 0.005;

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// Column of the gain bonus per frame: a token id, kGapColumn for silence, or
// kNoGainColumn inside <deid> words (zeroed audio scores like pure noise).
constexpr int kNoGainColumn = -1;

std::vector<int> frame_gain_columns(const TrueTimeline& timeline,
                                    const FrameScores& fs) {
  const int gap_id = fs.token_id(kGapToken);
  std::vector<int> col(static_cast<std::size_t>(fs.n_frames), gap_id);
  for (const TimelineWord& w : timeline) {
    const int f0 = std::max(
        0, static_cast<int>(std::llround(w.start_sec * fs.frame_rate_hz)));
    const int f1 = std::min(
        fs.n_frames,
        static_cast<int>(std::llround(w.end_sec * fs.frame_rate_hz)));
    const int id =
        (w.token == kDeidToken) ? kNoGainColumn : fs.token_id(w.token);
    for (int f = f0; f < f1; ++f) col[f] = id;
  }
  return col;
}

FrameScores make_frame_scores(const TrueTimeline& timeline,
                              std::vector<std::string> vocab, double gain,
                              double noise_sd, std::uint64_t seed,
                              double duration_sec, int frame_rate_hz,
                              bool parallel) {
  if (gain <= 0) throw std::invalid_argument("gain must be positive");
  if (noise_sd < 0) throw std::invalid_argument("noise_sd must be >= 0");
  if (frame_rate_hz <= 0) throw std::invalid_argument("bad frame rate");

  FrameScores fs;
  fs.frame_rate_hz = frame_rate_hz;
  fs.vocab = std::move(vocab);
  if (std::find(fs.vocab.begin(), fs.vocab.end(), kGapToken) ==
      fs.vocab.end()) {
    fs.vocab.push_back(kGapToken);
  }
  for (int i = 0; i < static_cast<int>(fs.vocab.size()); ++i) {
    fs.index.emplace(fs.vocab[i], i);
  }
  fs.n_frames =
      static_cast<int>(std::llround(duration_sec * frame_rate_hz));
  const int v = static_cast<int>(fs.vocab.size());
  fs.scores.assign(static_cast<std::size_t>(fs.n_frames) * v, 0.0);

  for (const TimelineWord& w : timeline) {
    if (w.token != kDeidToken && fs.token_id(w.token) < 0) {
      throw std::invalid_argument("timeline token not in vocab: " + w.token);
    }
  }
  const std::vector<int> gain_col = frame_gain_columns(timeline, fs);

  // Each frame row draws from its own substream, so row order (and thus
  // thread count) cannot change the output.
  const auto fill_row = [&](int t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    double* row = fs.scores.data() + static_cast<std::size_t>(t) * v;
    for (int w = 0; w < v; ++w) {
      row[w] = noise_sd > 0 ? rng.normal(0.0, noise_sd) : 0.0;
    }
    if (gain_col[t] != kNoGainColumn) row[gain_col[t]] += gain;
  };

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < fs.n_frames; ++t) fill_row(t);
  } else {
    for (int t = 0; t < fs.n_frames; ++t) fill_row(t);
  }
  return fs;
}

}  // namespace

int FrameScores::token_id(const std::string& token) const {
  const auto it = index.find(token);
  return it == index.end() ? -1 : it->second;
}

FrameScores synth_frame_scores(const TrueTimeline& timeline,
                               std::vector<std::string> vocab, double gain,
                               double noise_sd, std::uint64_t seed,
                               double duration_sec, int frame_rate_hz) {
  return make_frame_scores(timeline, std::move(vocab), gain, noise_sd, seed,
                           duration_sec, frame_rate_hz, /*parallel=*/true);
}

FrameScores synth_frame_scores_serial(const TrueTimeline& timeline,
                                      std::vector<std::string> vocab,
                                      double gain, double noise_sd,
                                      std::uint64_t seed, double duration_sec,
                                      int frame_rate_hz) {
  return make_frame_scores(timeline, std::move(vocab), gain, noise_sd, seed,
                           duration_sec, frame_rate_hz, /*parallel=*/false);
}

namespace {

// Keeps hypothesis words ordered, non-overlapping, at least kMinHypWidthSec
// wide and inside [t0, t1]. Reserves room on the right so every word fits.
void repair_hyp_times(std::vector<HypWord>& words, double t0, double t1) {
  const int n = static_cast<int>(words.size());
  double prev = t0;
  for (int i = 0; i < n; ++i) {
    HypWord& w = words[i];
    const double start_cap = t1 - (n - i) * kMinHypWidthSec;
    w.start_sec = std::min(std::max(w.start_sec, prev), start_cap);
    const double end_cap = t1 - (n - i - 1) * kMinHypWidthSec;
    w.end_sec =
        std::min(std::max(w.end_sec, w.start_sec + kMinHypWidthSec), end_cap);
    prev = w.end_sec;
  }
}

std::vector<std::string> hyp_tokens(const std::vector<HypWord>& words) {
  std::vector<std::string> toks;
  toks.reserve(words.size());
  for (const HypWord& w : words) toks.push_back(w.token);
  return toks;
}

}  // namespace

std::vector<HypWord> simulate_recognizer(const TrueTimeline& timeline,
                                         std::span<const std::string> vocab,
                                         double t0, double t1,
                                         const ErrorModel& em,
                                         const LinearIslandGrammar* grammar) {
  if (em.p_sub < 0 || em.p_del < 0 || em.p_ins < 0 ||
      em.p_sub + em.p_del > 1.0 || em.p_ins > 1.0) {
    throw std::invalid_argument("bad error model probabilities");
  }
  if (t1 <= t0) return {};
  if (t1 - t0 < kMinHypWidthSec) return {};

  std::vector<std::string> subs_vocab;
  for (const std::string& tok : vocab) {
    if (tok != kGapToken) subs_vocab.push_back(tok);
  }

  Rng rng(mix_seed(em.seed,
                   static_cast<std::uint64_t>(std::llround(t0 * 100.0))));

  const auto random_token_excluding =
      [&](const std::string& avoid) -> std::string {
    if (subs_vocab.empty()) return avoid;
    const auto pos = std::find(subs_vocab.begin(), subs_vocab.end(), avoid);
    if (pos == subs_vocab.end() || subs_vocab.size() == 1) {
      return subs_vocab[rng.uniform_int(subs_vocab.size())];
    }
    std::size_t k = rng.uniform_int(subs_vocab.size() - 1);
    if (k >= static_cast<std::size_t>(pos - subs_vocab.begin())) ++k;
    return subs_vocab[k];
  };

  // A word belongs to the chunk containing its midpoint; its times are
  // clamped to the chunk, which models words cut at the fixed boundary.
  std::vector<HypWord> hyp;
  for (const TimelineWord& w : timeline) {
    const double mid = 0.5 * (w.start_sec + w.end_sec);
    if (mid < t0 || mid >= t1) continue;
    const double s = std::max(w.start_sec, t0);
    const double e = std::min(w.end_sec, t1);

    // Draw order is fixed per word slot: classify, [sub token], insert?,
    // [ins token]. De-identified audio was zeroed and never recognizes.
    const bool deid = w.token == kDeidToken;
    const double u = rng.uniform();
    bool kept = false;
    std::string token;
    if (!deid && u >= em.p_del) {
      kept = true;
      token = w.token;
      if (u < em.p_del + em.p_sub) token = random_token_excluding(w.token);
    }
    const bool insert = rng.bernoulli(em.p_ins) && !subs_vocab.empty();
    std::string ins_token;
    if (insert) ins_token = subs_vocab[rng.uniform_int(subs_vocab.size())];

    if (kept && insert) {
      const double m = 0.5 * (s + e);
      hyp.push_back({token, s, m, 0, false, false});
      hyp.push_back({ins_token, m, e, 0, false, false});
    } else if (kept) {
      hyp.push_back({token, s, e, 0, false, false});
    } else if (insert) {
      hyp.push_back({ins_token, s, e, 0, false, false});
    }
  }

  if (em.jitter_sd_sec > 0) {
    for (HypWord& w : hyp) {
      w.start_sec += rng.normal(0.0, em.jitter_sd_sec);
      w.end_sec += rng.normal(0.0, em.jitter_sd_sec);
    }
  }
  repair_hyp_times(hyp, t0, t1);

  if (grammar == nullptr) return hyp;

  // Constrained decoding: replace the corrupted sequence by the closest
  // grammar-accepted one, timestamps transferred through an edit alignment
  // and interpolated for slice words with no matched hypothesis word.
  const auto proj = grammar->project(hyp_tokens(hyp));
  if (proj.ref_len == 0) return {};
  const auto& ref = grammar->tokens();

  std::vector<HypWord> out(static_cast<std::size_t>(proj.ref_len));
  std::vector<bool> assigned(out.size(), false);
  for (int i = 0; i < proj.ref_len; ++i) {
    out[i].token = ref[proj.ref_start + i];
  }
  std::vector<std::string> slice(ref.begin() + proj.ref_start,
                                 ref.begin() + proj.ref_start + proj.ref_len);
  const EditPath path = edit_align(slice, hyp_tokens(hyp));
  for (const EditOp& op : path.ops) {
    if (op.kind == EditKind::kMatch || op.kind == EditKind::kSub) {
      out[op.ref_index].start_sec = hyp[op.hyp_index].start_sec;
      out[op.ref_index].end_sec = hyp[op.hyp_index].end_sec;
      assigned[op.ref_index] = true;
    }
  }

  // Fill unassigned runs evenly between their timed neighbors.
  int i = 0;
  const int n = static_cast<int>(out.size());
  while (i < n) {
    if (assigned[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && !assigned[j]) ++j;
    const double lo = (i > 0) ? out[i - 1].end_sec : t0;
    const double hi = (j < n) ? out[j].start_sec : t1;
    const double width = std::max(hi - lo, 0.0) / (j - i);
    for (int k = i; k < j; ++k) {
      out[k].start_sec = lo + (k - i) * width;
      out[k].end_sec = lo + (k - i + 1) * width;
    }
    i = j;
  }

  repair_hyp_times(out, t0, t1);
  return out;
}

namespace {

constexpr std::uint64_t kSaltLexicon = 0x1e81c0ff5e3dull;

}  // namespace

std::vector<SimConversation> generate_corpus(const SimCorpusConfig& cfg) {
  if (cfg.n_conversations < 0) throw std::invalid_argument("n_conversations < 0");
  if (cfg.vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  if (cfg.mean_turn_words < 1) {
    throw std::invalid_argument("mean_turn_words must be >= 1");
  }
  if (cfg.mean_conversation_min <= 0) {
    throw std::invalid_argument("mean_conversation_min must be positive");
  }
  if (cfg.turn_jitter_sec < 0) throw std::invalid_argument("turn_jitter_sec < 0");
  if (cfg.deid_rate < 0 || cfg.deid_rate > 1) {
    throw std::invalid_argument("deid_rate outside [0,1]");
  }
  if (cfg.doctor_pool < 1) throw std::invalid_argument("doctor_pool must be >= 1");
  if (cfg.gender_ratio < 0 || cfg.gender_ratio > 1) {
    throw std::invalid_argument("gender_ratio outside [0,1]");
  }

  // Synthetic lexicon, deterministic from the seed: distinct lowercase
  // strings of length 2..9.
  std::vector<std::string> lexicon;
  {
    Rng rng(mix_seed(cfg.seed, kSaltLexicon));
    std::set<std::string> seen;
    while (static_cast<int>(lexicon.size()) < cfg.vocab_size) {
      const int len = 2 + static_cast<int>(rng.uniform_int(8));
      std::string tok;
      for (int c = 0; c < len; ++c) {
        tok.push_back(static_cast<char>('a' + rng.uniform_int(26)));
      }
      if (seen.insert(tok).second) lexicon.push_back(std::move(tok));
    }
  }

  const int n_male = static_cast<int>(
      std::llround(cfg.doctor_pool * cfg.gender_ratio));
  const char* kInteractionTypes[] = {"office_visit", "follow_up", "consult"};

  std::vector<SimConversation> corpus;
  corpus.reserve(static_cast<std::size_t>(cfg.n_conversations));
  for (int ci = 0; ci < cfg.n_conversations; ++ci) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(ci)));

    Conversation conv;
    {
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "conv_%04d", ci);
      conv.conversation_id = idbuf;
    }
    const int doctor = ci % cfg.doctor_pool;
    {
      char dbuf[32];
      std::snprintf(dbuf, sizeof(dbuf), "doc_%03d", doctor);
      conv.metadata.doctor_id = dbuf;
    }
    conv.metadata.doctor_gender =
        doctor < n_male ? Gender::kMale : Gender::kFemale;
    conv.metadata.interaction_type = kInteractionTypes[ci % 3];
    if (!cfg.disease_areas.empty()) {
      conv.metadata.disease_area =
          cfg.disease_areas[ci % cfg.disease_areas.size()];
    }

    const double target_sec =
        std::max(20.0, rng.normal(cfg.mean_conversation_min * 60.0,
                                  cfg.mean_conversation_min * 6.0));

    TrueTimeline truth;
    double t = rng.uniform(0.5, 1.5);
    int gi = 0;
    std::vector<std::pair<double, double>> true_spans;
    bool doctor_next = true;
    while (t < target_sec) {
      Turn turn;
      if (doctor_next) {
        turn.speaker = Speaker::kDoctor;
      } else {
        turn.speaker = rng.bernoulli(0.05) ? Speaker::kCaregiver
                                           : Speaker::kPatient;
      }
      doctor_next = !doctor_next;

      int n_words = std::max(
          1, static_cast<int>(std::llround(
                 rng.normal(cfg.mean_turn_words, cfg.mean_turn_words * 0.5))));
      n_words = std::min(n_words, static_cast<int>(cfg.mean_turn_words * 4) + 1);

      const int deid_pos =
          rng.bernoulli(cfg.deid_rate)
              ? static_cast<int>(rng.uniform_int(
                    static_cast<std::uint64_t>(n_words)))
              : -1;

      const double turn_start = t;
      for (int wi = 0; wi < n_words; ++wi) {
        std::string tok =
            (wi == deid_pos)
                ? kDeidToken
                : lexicon[rng.uniform_int(lexicon.size())];
        const double dur =
            0.08 + 0.035 * static_cast<double>(tok.size()) + rng.uniform(0.0, 0.05);
        truth.push_back({gi++, t, t + dur, tok});
        turn.words.push_back(std::move(tok));
        if (turn.words.back() == kDeidToken) turn.has_deid = true;
        t += dur + rng.uniform(0.01, 0.06);
      }
      true_spans.emplace_back(turn_start, truth.back().end_sec);
      conv.turns.push_back(std::move(turn));
      t += rng.uniform(0.3, 1.2);
    }
    conv.audio_duration_sec = t + rng.uniform(0.5, 2.0);

    // Annotated stamps: true stamps + uniform jitter, clamped and kept
    // ordered so the conversation invariants hold.
    double prev_start = 0.0;
    for (std::size_t ti = 0; ti < conv.turns.size(); ++ti) {
      Turn& turn = conv.turns[ti];
      const double j = cfg.turn_jitter_sec;
      double s = true_spans[ti].first + (j > 0 ? rng.uniform(-j, j) : 0.0);
      double e = true_spans[ti].second + (j > 0 ? rng.uniform(-j, j) : 0.0);
      s = std::min(std::max(s, 0.0), conv.audio_duration_sec);
      e = std::min(std::max(e, 0.0), conv.audio_duration_sec);
      s = std::max(s, prev_start);
      e = std::max(e, s);
      turn.ann_start_sec = s;
      turn.ann_end_sec = e;
      prev_start = s;
    }

    validate(conv);
    corpus.push_back({std::move(conv), std::move(truth)});
  }
  return corpus;
}

std::string format_truth(const TrueTimeline& timeline) {
  std::string out;
  for (const TimelineWord& w : timeline) {
    out += std::to_string(w.global_index);
    out += ' ';
    out += fmt3(w.start_sec);
    out += ' ';
    out += fmt3(w.end_sec);
    out += ' ';
    out += w.token;
    out += '\n';
  }
  return out;
}

TrueTimeline parse_truth(const std::string& text) {
  TrueTimeline out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TimelineWord w;
    if (!(ls >> w.global_index >> w.start_sec >> w.end_sec >> w.token)) {
      throw std::runtime_error("truth line " + std::to_string(lineno) +
                               ": expected 4 fields");
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace convalign
