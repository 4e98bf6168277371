// tests/test_textalign.cpp

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

#include <string>
#include <vector>

#include "convalign/rng.hpp"
#include "convalign/textalign.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace convalign;

namespace {

std::vector<std::string> toks(std::initializer_list<const char*> list) {
  return {list.begin(), list.end()};
}

// Path-shape invariants from the EditPath contract.
void check_path(const EditPath& path, const std::vector<std::string>& ref,
                const std::vector<std::string>& hyp) {
  int next_ref = 0;
  int next_hyp = 0;
  for (const EditOp& op : path.ops) {
    if (op.kind != EditKind::kIns) {
      REQUIRE(op.ref_index == next_ref);
      ++next_ref;
    }
    if (op.kind != EditKind::kDel) {
      REQUIRE(op.hyp_index == next_hyp);
      ++next_hyp;
    }
    if (op.kind == EditKind::kMatch) {
      REQUIRE(ref[op.ref_index] == hyp[op.hyp_index]);
    }
    if (op.kind == EditKind::kSub) {
      REQUIRE(ref[op.ref_index] != hyp[op.hyp_index]);
    }
  }
  REQUIRE(next_ref == static_cast<int>(ref.size()));
  REQUIRE(next_hyp == static_cast<int>(hyp.size()));
}

// hyp_words parallel to a token list, all inside one chunk by default.
std::vector<HypWord> make_hyp_words(const std::vector<std::string>& tokens,
                                    double start = 0.0, double step = 0.5) {
  std::vector<HypWord> out;
  double t = start;
  for (const std::string& tok : tokens) {
    out.push_back({tok, t, t + step * 0.8, 0, false, false});
    t += step;
  }
  return out;
}

ConfidenceIsland make_island(int ref_begin, int size, double t_begin,
                             double t_end) {
  ConfidenceIsland isl;
  isl.ref_range = {ref_begin, ref_begin + size};
  const double width = (t_end - t_begin) / size;
  for (int i = 0; i < size; ++i) {
    isl.words.push_back(
        {ref_begin + i, t_begin + i * width, t_begin + (i + 1) * width});
  }
  return isl;
}

}  // namespace

TEST_CASE("edit_align basic examples") {
  const auto same = toks({"a", "b", "c"});
  const EditPath p0 = edit_align(same, same);
  CHECK(edit_cost(p0) == 0);
  for (const EditOp& op : p0.ops) CHECK(op.kind == EditKind::kMatch);

  // The transcriber-inserted-word scenario: "had blood work" heard,
  // "i had blood work" transcribed.
  const EditPath p1 = edit_align(toks({"i", "had", "blood", "work"}),
                                 toks({"had", "blood", "work"}));
  CHECK(edit_cost(p1) == 1);
  REQUIRE(p1.ops.size() == 4);
  CHECK(p1.ops[0].kind == EditKind::kDel);
  CHECK(p1.ops[0].ref_index == 0);
  for (int i = 1; i < 4; ++i) CHECK(p1.ops[i].kind == EditKind::kMatch);

  const EditPath p2 =
      edit_align(toks({"a", "b", "c"}), toks({"a", "x", "c"}));
  CHECK(edit_cost(p2) == 1);
  REQUIRE(p2.ops.size() == 3);
  CHECK(p2.ops[0].kind == EditKind::kMatch);
  CHECK(p2.ops[1].kind == EditKind::kSub);
  CHECK(p2.ops[2].kind == EditKind::kMatch);
}

TEST_CASE("edit_align tie-break prefers SUB over DEL/INS") {
  const EditPath p = edit_align(toks({"a", "b"}), toks({"b", "a"}));
  CHECK(edit_cost(p) == 2);
  REQUIRE(p.ops.size() == 2);
  CHECK(p.ops[0].kind == EditKind::kSub);
  CHECK(p.ops[1].kind == EditKind::kSub);
}

TEST_CASE("edit_align cost equals the brute-force oracle on random pairs") {
  Rng rng(7);
  const std::vector<std::string> alphabet = {"a", "b", "c"};
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::string> ref(rng.uniform_int(9)), hyp(rng.uniform_int(9));
    for (auto& w : ref) w = alphabet[rng.uniform_int(3)];
    for (auto& w : hyp) w = alphabet[rng.uniform_int(3)];
    const EditPath path = edit_align(ref, hyp);
    CAPTURE(ref);
    CAPTURE(hyp);
    CHECK(edit_cost(path) == oracles::levenshtein(ref, hyp));
    check_path(path, ref, hyp);
  }
}

TEST_CASE("find_match_runs") {
  const auto all7 = toks({"a", "b", "c", "d", "e", "f", "g"});
  const auto runs7 = find_match_runs(edit_align(all7, all7), 5);
  REQUIRE(runs7.size() == 1);
  CHECK(runs7[0] == RefInterval{0, 7});

  // MATCH x4, SUB, MATCH x5 -> only the trailing run survives.
  const auto ref = toks({"a", "b", "c", "d", "X", "e", "f", "g", "h", "i"});
  const auto hyp = toks({"a", "b", "c", "d", "Y", "e", "f", "g", "h", "i"});
  const auto runs = find_match_runs(edit_align(ref, hyp), 5);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0] == RefInterval{5, 10});

  // MATCH x5, SUB, MATCH x5 -> two runs.
  const auto ref2 =
      toks({"a", "b", "c", "d", "e", "X", "f", "g", "h", "i", "j"});
  const auto hyp2 =
      toks({"a", "b", "c", "d", "e", "Y", "f", "g", "h", "i", "j"});
  const auto runs2 = find_match_runs(edit_align(ref2, hyp2), 5);
  REQUIRE(runs2.size() == 2);
  CHECK(runs2[0] == RefInterval{0, 5});
  CHECK(runs2[1] == RefInterval{6, 11});

  CHECK_THROWS_AS(find_match_runs(EditPath{}, 0), std::invalid_argument);
}

TEST_CASE("detect_islands boundary-word exclusion") {
  std::vector<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.push_back("w" + std::to_string(i));
  const EditPath path = edit_align(ten, ten);

  SUBCASE("no boundary words -> one island of 10") {
    const auto islands = detect_islands(path, make_hyp_words(ten), 5);
    REQUIRE(islands.size() == 1);
    CHECK(islands[0].ref_range == RefInterval{0, 10});
    CHECK(islands[0].size() == 10);
  }

  SUBCASE("6th word chunk-last -> sub-runs of 5 and 4 -> one island") {
    auto hyp = make_hyp_words(ten);
    hyp[5].is_chunk_last = true;
    const auto islands = detect_islands(path, hyp, 5);
    REQUIRE(islands.size() == 1);
    CHECK(islands[0].ref_range == RefInterval{0, 5});
  }

  SUBCASE("5-match run containing a chunk-first word -> nothing survives") {
    std::vector<std::string> five(ten.begin(), ten.begin() + 5);
    auto hyp5 = make_hyp_words(five);
    hyp5[2].is_chunk_first = true;
    const auto islands =
        detect_islands(edit_align(five, five), hyp5, 5);
    CHECK(islands.empty());
  }
}

TEST_CASE("detect_islands word count and token agreement") {
  Rng rng(12);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  for (int t = 0; t < 200; ++t) {
    std::vector<std::string> ref(3 + rng.uniform_int(12));
    std::vector<std::string> hyp(3 + rng.uniform_int(12));
    for (auto& w : ref) w = alphabet[rng.uniform_int(4)];
    for (auto& w : hyp) w = alphabet[rng.uniform_int(4)];
    auto hyp_words = make_hyp_words(hyp);
    for (auto& w : hyp_words) {
      w.is_chunk_first = rng.bernoulli(0.1);
      w.is_chunk_last = rng.bernoulli(0.1);
    }
    const EditPath path = edit_align(ref, hyp);
    int matches = 0;
    for (const EditOp& op : path.ops) {
      if (op.kind == EditKind::kMatch) ++matches;
    }
    int island_words = 0;
    for (const auto& isl : detect_islands(path, hyp_words, 3)) {
      island_words += isl.size();
      for (const TimedWord& w : isl.words) {
        REQUIRE(w.global_index < static_cast<int>(ref.size()));
        // Every island word's token equals the ref token at its index: its
        // timestamp was inherited from a hyp word carrying that same token.
        bool timed_by_equal_hyp_word = false;
        for (const HypWord& hw : hyp_words) {
          if (hw.start_sec == w.start_sec && hw.end_sec == w.end_sec &&
              hw.token == ref[w.global_index]) {
            timed_by_equal_hyp_word = true;
          }
        }
        CHECK(timed_by_equal_hyp_word);
      }
      CHECK(isl.ref_range.length() == isl.size());
    }
    CHECK(island_words <= matches);
  }
}

TEST_CASE("monotone_island_chain") {
  SUBCASE("already monotone input is identity") {
    std::vector<ConfidenceIsland> islands = {make_island(0, 5, 0.0, 2.0),
                                             make_island(10, 6, 3.0, 5.0)};
    const auto chain = monotone_island_chain(islands);
    REQUIRE(chain.size() == 2);
    CHECK(chain[0].ref_range == RefInterval{0, 5});
    CHECK(chain[1].ref_range == RefInterval{10, 16});
  }

  SUBCASE("time-overlapping islands keep the heavier one") {
    std::vector<ConfidenceIsland> islands = {make_island(0, 6, 2.0, 4.0),
                                             make_island(10, 9, 1.0, 3.5)};
    const auto chain = monotone_island_chain(islands);
    REQUIRE(chain.size() == 1);
    CHECK(chain[0].size() == 9);
  }

  SUBCASE("5+5 beats a 6 conflicting with both") {
    // The 6-word island's time span covers both 5-word islands' spans.
    std::vector<ConfidenceIsland> islands = {make_island(0, 5, 0.0, 1.0),
                                             make_island(6, 6, 0.5, 2.5),
                                             make_island(13, 5, 2.0, 3.0)};
    const auto chain = monotone_island_chain(islands);
    long long total = 0;
    for (const auto& isl : chain) total += isl.size();
    CHECK(total == 10);
    CHECK(total == oracles::brute_force_best_chain_weight(islands));
  }

  SUBCASE("optimal against subset brute force") {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      const int n = 1 + static_cast<int>(rng.uniform_int(9));
      std::vector<ConfidenceIsland> islands;
      int ref_pos = 0;
      for (int i = 0; i < n; ++i) {
        const int size = 1 + static_cast<int>(rng.uniform_int(6));
        const double t0 = rng.uniform(0.0, 8.0);
        islands.push_back(
            make_island(ref_pos, size, t0, t0 + rng.uniform(0.2, 2.0)));
        ref_pos += size + static_cast<int>(rng.uniform_int(3));
      }
      const auto chain = monotone_island_chain(islands);
      long long total = 0;
      for (std::size_t i = 0; i < chain.size(); ++i) {
        total += chain[i].size();
        if (i > 0) {
          REQUIRE(chain[i - 1].ref_range.end <= chain[i].ref_range.begin);
          REQUIRE(chain[i - 1].time_end() <= chain[i].time_begin());
        }
      }
      CHECK(total == oracles::brute_force_best_chain_weight(islands));
    }
  }
}
