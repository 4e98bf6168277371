// tests/test_pipeline.cpp

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

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "convalign/pipeline.hpp"
#include "doctest.h"
#include "util.hpp"

using namespace convalign;

namespace {

// A recognizer that throws on selected chunk starts and otherwise defers to
// the simulator.
class FlakyRecognizer : public Recognizer {
 public:
  FlakyRecognizer(SimRecognizer inner, std::set<int> fail_on_centisec)
      : inner_(std::move(inner)), fail_on_(std::move(fail_on_centisec)) {}

  std::vector<HypWord> recognize(double t0, double t1,
                                 const LinearIslandGrammar* g) const override {
    if (fail_on_.count(static_cast<int>(std::llround(t0 * 100)))) {
      throw std::runtime_error("injected recognizer failure");
    }
    return inner_.recognize(t0, t1, g);
  }

 private:
  SimRecognizer inner_;
  std::set<int> fail_on_;
};

ErrorModel zero_error_model() {
  ErrorModel em;
  em.p_sub = em.p_del = em.p_ins = 0.0;
  em.jitter_sd_sec = 0.0;
  return em;
}

std::vector<std::string> stream_vocab(const Conversation& conv) {
  std::set<std::string> uniq;
  for (const StreamWord& w : word_stream(conv)) uniq.insert(w.token);
  std::vector<std::string> vocab(uniq.begin(), uniq.end());
  vocab.push_back(kGapToken);
  return vocab;
}

LinearIslandGrammar stream_grammar(const Conversation& conv) {
  std::vector<std::string> ref;
  for (const StreamWord& w : word_stream(conv)) ref.push_back(w.token);
  return LinearIslandGrammar(ref);
}

}  // namespace

TEST_CASE("chunk_spans") {
  const auto s25 = chunk_spans(25.0, 10.0);
  REQUIRE(s25.size() == 3);
  CHECK(s25[0].begin == 0.0);
  CHECK(s25[0].end == 10.0);
  CHECK(s25[1].end == 20.0);
  CHECK(s25[2].begin == 20.0);
  CHECK(s25[2].end == 25.0);

  const auto s10 = chunk_spans(10.0, 10.0);
  REQUIRE(s10.size() == 1);
  CHECK(s10[0].end == 10.0);

  const auto s95 = chunk_spans(9.5, 10.0);
  REQUIRE(s95.size() == 1);
  CHECK(s95[0].end == 9.5);

  CHECK_THROWS_AS(chunk_spans(0.0, 10.0), std::invalid_argument);
}

TEST_CASE("pass1 with a perfect recognizer and one chunk") {
  std::vector<std::string> words;
  for (int i = 0; i < 20; ++i) words.push_back("w" + std::to_string(i));
  // 20 words at ~0.35 s pitch fit one 10 s chunk.
  const auto built = testutil::build_conversation({words}, 0.3, 0.05, 0.5,
                                                  0.5, /*trailing=*/1.0);
  REQUIRE(built.conv.audio_duration_sec <= 10.0);

  const SimRecognizer rec(built.truth, stream_vocab(built.conv),
                          zero_error_model());
  const auto grammar = stream_grammar(built.conv);
  const Pass1Result res = pass1(built.conv, rec, grammar);

  // All but the chunk-first and chunk-last word align: 18/20.
  CHECK(res.words_total == 20);
  CHECK(res.words_island == 18);
  REQUIRE(res.islands.size() == 1);
  CHECK(res.islands[0].ref_range == RefInterval{1, 19});
}

TEST_CASE("pass1 below the island minimum yields nothing") {
  const auto built =
      testutil::build_conversation({{"aa", "bb", "cc", "dd"}});
  const SimRecognizer rec(built.truth, stream_vocab(built.conv),
                          zero_error_model());
  const Pass1Result res = pass1(built.conv, rec, stream_grammar(built.conv));
  CHECK(res.words_island == 0);
  CHECK(res.islands.empty());
}

TEST_CASE("pass1 tolerates recognizer failures") {
  std::vector<std::vector<std::string>> turns;
  for (int t = 0; t < 8; ++t) {
    std::vector<std::string> words;
    for (int i = 0; i < 8; ++i) {
      words.push_back("t" + std::to_string(t) + "w" + std::to_string(i));
    }
    turns.push_back(words);
  }
  const auto built = testutil::build_conversation(turns);
  const FlakyRecognizer rec(
      SimRecognizer(built.truth, stream_vocab(built.conv), zero_error_model()),
      {0});  // first chunk fails
  const Pass1Result res = pass1(built.conv, rec, stream_grammar(built.conv));
  CHECK(res.chunks_failed == 1);
  CHECK(res.words_island > 0);  // later chunks still align
}

TEST_CASE("pass1 rejects a grammar from another transcript") {
  const auto built = testutil::build_conversation({{"aa", "bb"}});
  const SimRecognizer rec(built.truth, stream_vocab(built.conv),
                          zero_error_model());
  const LinearIslandGrammar other(std::vector<std::string>{"xx"});
  CHECK_THROWS_AS(pass1(built.conv, rec, other), std::invalid_argument);
}

TEST_CASE("pass2 forces words between islands") {
  std::vector<std::string> words;
  for (int i = 0; i < 13; ++i) words.push_back("w" + std::to_string(i));
  const auto built = testutil::build_conversation({words}, 0.3, 0.05, 0.5);
  const auto vocab = stream_vocab(built.conv);
  const FrameScores fs = synth_frame_scores(
      built.truth, vocab, 1.0, 0.0, 3, built.conv.audio_duration_sec);

  // Islands cover words 0..4 and 8..12; the gap is words 5..7.
  std::vector<ConfidenceIsland> islands;
  for (const int base : {0, 8}) {
    ConfidenceIsland isl;
    isl.ref_range = {base, base + 5};
    for (int i = base; i < base + 5; ++i) {
      isl.words.push_back(
          {i, built.truth[i].start_sec, built.truth[i].end_sec});
    }
    islands.push_back(std::move(isl));
  }

  const Pass2Result res = pass2(built.conv, islands, fs);
  CHECK(res.coverage.words_pass1 == 10);
  CHECK(res.coverage.words_pass2 == 3);
  CHECK(res.coverage.words_interpolated == 0);
  REQUIRE(res.added.size() == 3);
  // The forced spans partition their window in order.
  for (std::size_t i = 0; i < res.added.size(); ++i) {
    CHECK(res.added[i].global_index == 5 + static_cast<int>(i));
    CHECK(res.added[i].provenance == Provenance::kForced);
    if (i > 0) {
      CHECK(res.added[i].start_sec >= res.added[i - 1].start_sec);
    }
  }
  // At zero noise the forced words land on their true spans; the run's edge
  // words additionally absorb the window pad and the inter-word pause.
  for (const AlignedWord& w : res.added) {
    CHECK(std::abs(w.start_sec - built.truth[w.global_index].start_sec) <=
          0.17);
    CHECK(std::abs(w.end_sec - built.truth[w.global_index].end_sec) <= 0.17);
  }
}

TEST_CASE("pass2 defers inverted bounds to interpolation") {
  const auto built = testutil::build_conversation(
      {{"aa", "bb", "cc", "dd", "ee", "ff", "gg"}});
  const auto vocab = stream_vocab(built.conv);
  const FrameScores fs = synth_frame_scores(
      built.truth, vocab, 1.0, 0.0, 3, built.conv.audio_duration_sec);

  // Following island starts before the preceding one ends.
  std::vector<ConfidenceIsland> islands;
  ConfidenceIsland left;
  left.ref_range = {0, 2};
  left.words = {{0, 1.0, 1.6}, {1, 1.6, 2.4}};
  ConfidenceIsland right;
  right.ref_range = {5, 7};
  right.words = {{5, 1.9, 2.1}, {6, 2.1, 2.3}};
  islands = {left, right};

  const Pass2Result res = pass2(built.conv, islands, fs);
  CHECK(res.added.empty());
  CHECK(res.coverage.words_pass2 == 0);
  CHECK(res.coverage.words_interpolated == 3);
}

TEST_CASE("interpolate_residual") {
  const auto built = testutil::build_conversation({{"a", "abc", "zz"}});
  const Conversation& conv = built.conv;

  SUBCASE("single untimed word spans the whole gap") {
    std::vector<AlignedWord> timed = {
        {0, "a", 1.0, 1.5, Provenance::kIsland},
        {2, "zz", 2.5, 3.0, Provenance::kIsland},
    };
    const AlignedTranscript at = interpolate_residual(timed, conv);
    testutil::check_transcript(at, conv);
    CHECK(at.words[1].start_sec == doctest::Approx(1.5));
    CHECK(at.words[1].end_sec == doctest::Approx(2.5));
    CHECK(at.words[1].provenance == Provenance::kInterpolated);
  }

  SUBCASE("gap time splits proportionally to character counts") {
    // Words "a" (1 char) and "abc" (3 chars) inside a 4 s gap.
    const auto built2 = testutil::build_conversation({{"x", "a", "abc", "y"}},
                                                     0.3, 0.05, 0.5, 0.5, 5.0);
    std::vector<AlignedWord> timed = {
        {0, "x", 0.5, 1.0, Provenance::kIsland},
        {3, "y", 5.0, 5.5, Provenance::kIsland},
    };
    const AlignedTranscript at = interpolate_residual(timed, built2.conv);
    testutil::check_transcript(at, built2.conv);
    CHECK(at.words[1].start_sec == doctest::Approx(1.0));
    CHECK(at.words[1].end_sec == doctest::Approx(2.0));   // 1 s
    CHECK(at.words[2].end_sec == doctest::Approx(5.0));   // 3 s
  }

  SUBCASE("degenerate zero-length gap gets one-frame spans") {
    std::vector<AlignedWord> timed = {
        {0, "a", 1.0, 2.0, Provenance::kIsland},
        {2, "zz", 2.0, 3.0, Provenance::kIsland},
    };
    const AlignedTranscript at = interpolate_residual(timed, conv);
    testutil::check_transcript(at, conv);
    CHECK(at.words[1].end_sec - at.words[1].start_sec ==
          doctest::Approx(0.01));
    CHECK(std::abs(at.words[1].start_sec - 2.0) <= 0.01 + 1e-9);
  }

  SUBCASE("no timed words spreads the conversation uniformly") {
    const AlignedTranscript at = interpolate_residual({}, conv);
    testutil::check_transcript(at, conv);
    const double third = conv.audio_duration_sec / 3.0;
    CHECK(at.words[0].end_sec == doctest::Approx(third));
    CHECK(at.words[1].end_sec == doctest::Approx(2 * third));
    CHECK(at.words[2].end_sec == doctest::Approx(conv.audio_duration_sec));
  }

  SUBCASE("rejects inconsistent timed words") {
    CHECK_THROWS(interpolate_residual(
        {{0, "wrong-token", 0.0, 1.0, Provenance::kIsland}}, conv));
    CHECK_THROWS(interpolate_residual(
        {{9, "a", 0.0, 1.0, Provenance::kIsland}}, conv));
  }
}

TEST_CASE("cut_turns") {
  const auto built = testutil::build_conversation(
      {{"aa", "bb"}, {"cc", "dd", "ee"}});
  Conversation conv = built.conv;

  std::vector<AlignedWord> timed;
  for (const TimelineWord& w : built.truth) {
    timed.push_back(
        {w.global_index, w.token, w.start_sec, w.end_sec, Provenance::kIsland});
  }
  const AlignedTranscript at = interpolate_residual(timed, conv);
  const auto segments = cut_turns(at, conv);
  REQUIRE(segments.size() == 2);
  CHECK(segments[0].turn_index == 0);
  CHECK(segments[0].start_sec == doctest::Approx(built.truth[0].start_sec));
  CHECK(segments[0].end_sec == doctest::Approx(built.truth[1].end_sec));
  CHECK(segments[1].tokens == std::vector<std::string>{"cc", "dd", "ee"});
  CHECK(segments[1].source == Source::kTwoPass);

  SUBCASE("all-interpolated turns still yield segments") {
    const AlignedTranscript uniform = interpolate_residual({}, conv);
    CHECK(cut_turns(uniform, conv).size() == 2);
  }

  SUBCASE("empty de-id-only turns yield none") {
    Conversation with_empty = conv;
    Turn empty;
    empty.speaker = Speaker::kOther;
    empty.ann_start_sec = with_empty.turns.back().ann_start_sec;
    empty.ann_end_sec = empty.ann_start_sec;
    empty.has_deid = true;  // words may be empty only with the de-id flag
    with_empty.turns.push_back(empty);
    const AlignedTranscript uniform = interpolate_residual({}, with_empty);
    CHECK(cut_turns(uniform, with_empty).size() == 2);
  }
}

TEST_CASE("filter_segments") {
  const auto seg = [](std::vector<std::string> tokens) {
    Segment s;
    s.conversation_id = "c";
    s.turn_index = 0;
    s.tokens = std::move(tokens);
    return s;
  };

  // 4-word segment: dropped from TEST, kept in TRAIN.
  CHECK(filter_segments({seg({"a", "b", "c", "d"})}, SegmentRole::kTest)
            .empty());
  CHECK(filter_segments({seg({"a", "b", "c", "d"})}, SegmentRole::kTrain)
            .size() == 1);
  // Single-word segment: dropped from TRAIN.
  CHECK(filter_segments({seg({"a"})}, SegmentRole::kTrain).empty());
  CHECK(filter_segments({seg({"a", "b"})}, SegmentRole::kTrain).size() == 1);
  // 5-word segment kept in TEST.
  CHECK(filter_segments({seg({"a", "b", "c", "d", "e"})}, SegmentRole::kTest)
            .size() == 1);
  // De-id tag drops the segment from both.
  CHECK(filter_segments({seg({"a", "b", "c", "d", kDeidToken})},
                        SegmentRole::kTest)
            .empty());
  CHECK(filter_segments({seg({"a", "b", "c", "d", kDeidToken})},
                        SegmentRole::kTrain)
            .empty());
}

namespace {

Conversation tiny_conv(const std::string& id, const std::string& doctor,
                       Gender gender,
                       std::optional<std::string> area = std::nullopt) {
  Conversation c;
  c.conversation_id = id;
  c.audio_duration_sec = 10.0;
  c.metadata.doctor_id = doctor;
  c.metadata.doctor_gender = gender;
  c.metadata.interaction_type = "visit";
  c.metadata.disease_area = std::move(area);
  Turn t;
  t.speaker = Speaker::kDoctor;
  t.ann_start_sec = 0.0;
  t.ann_end_sec = 5.0;
  t.words = {"hello", "there"};
  c.turns.push_back(std::move(t));
  validate(c);
  return c;
}

}  // namespace

TEST_CASE("split_corpus exclusion arithmetic") {
  // 10 doctors x 3 conversations, k_test = 4:
  // 4 test + 4 doctors' remaining 8 excluded -> 18 train.
  std::vector<Conversation> convs;
  for (int d = 0; d < 10; ++d) {
    for (int k = 0; k < 3; ++k) {
      convs.push_back(tiny_conv("c" + std::to_string(d) + "_" +
                                    std::to_string(k),
                                "doc" + std::to_string(d),
                                d % 2 == 0 ? Gender::kMale : Gender::kFemale));
    }
  }
  SplitSpec spec;
  spec.k_test = 4;
  spec.n_target_test = 0;
  spec.n_nontarget_test = 4;
  spec.target_disease_areas.clear();

  const SplitResult r = split_corpus(convs, spec, 3);
  CHECK(r.test_ids.size() == 4);
  CHECK(r.train_ids.size() == 18);

  // Doctor-disjointness holds by construction; check it anyway.
  std::set<std::string> test_doctors, train_doctors;
  for (const Conversation& c : convs) {
    const bool in_test = std::binary_search(r.test_ids.begin(),
                                            r.test_ids.end(),
                                            c.conversation_id);
    const bool in_train = std::binary_search(r.train_ids.begin(),
                                             r.train_ids.end(),
                                             c.conversation_id);
    if (in_test) test_doctors.insert(c.metadata.doctor_id);
    if (in_train) train_doctors.insert(c.metadata.doctor_id);
  }
  for (const std::string& d : test_doctors) CHECK(!train_doctors.count(d));

  SUBCASE("deterministic given the seed") {
    const SplitResult again = split_corpus(convs, spec, 3);
    CHECK(again.test_ids == r.test_ids);
    CHECK(again.train_ids == r.train_ids);
    const SplitResult other = split_corpus(convs, spec, 4);
    CHECK(other.test_ids != r.test_ids);  // different seed, different sample
  }
}

TEST_CASE("split_corpus infeasibility reporting") {
  std::vector<Conversation> convs;
  for (int d = 0; d < 6; ++d) {
    convs.push_back(tiny_conv("c" + std::to_string(d),
                              "doc" + std::to_string(d), Gender::kMale));
  }
  SplitSpec spec;
  spec.k_test = 4;
  spec.n_target_test = 0;
  spec.n_nontarget_test = 4;
  spec.target_disease_areas.clear();
  CHECK_THROWS_WITH_AS(split_corpus(convs, spec, 1),
                       doctest::Contains("infeasible"), std::runtime_error);

  spec.require_gender_balance = false;
  CHECK(split_corpus(convs, spec, 1).test_ids.size() == 4);
}

TEST_CASE("align_corpus end to end on a tiny corpus") {
  SimCorpusConfig cfg;
  cfg.n_conversations = 2;
  cfg.mean_conversation_min = 1.0;
  cfg.seed = 5;
  std::vector<CorpusInput> inputs;
  for (const auto& sc : generate_corpus(cfg)) {
    inputs.push_back({sc.conversation, sc.truth});
  }

  const PipelineConfig pcfg;
  const AcousticConfig acfg;

  for (const Strategy strategy :
       {Strategy::kTwoPass, Strategy::kBuffered, Strategy::kOriginal}) {
    const auto results =
        align_corpus(inputs, strategy, pcfg, acfg, 11, /*jobs=*/1);
    REQUIRE(results.size() == 2);
    for (std::size_t i = 0; i < results.size(); ++i) {
      REQUIRE(!results[i].failed);
      CHECK_NOTHROW(
          testutil::check_transcript(results[i].transcript, inputs[i].conv));
      // Cumulative coverage can only grow from pass 1 to pass 2.
      CHECK(results[i].coverage.coverage_pass2() >=
            results[i].coverage.coverage_pass1());
      CHECK(!results[i].segments.empty());
    }
  }
}

TEST_CASE("segment file format round trip") {
  Segment s;
  s.conversation_id = "c1";
  s.turn_index = 3;
  s.speaker = Speaker::kPatient;
  s.start_sec = 1.25;
  s.end_sec = 2.5;
  s.tokens = {"hello", "there"};
  const std::string text = format_segments(std::vector<Segment>{s});
  CHECK(text == "c1\t3\tPT\t1.250\t2.500\thello there\n");
  const auto back = parse_segments(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].turn_index == 3);
  CHECK(back[0].speaker == Speaker::kPatient);
  CHECK(back[0].tokens == s.tokens);
  CHECK_THROWS(parse_segments("c1\t3\tPT\t1.0\n"));
}
