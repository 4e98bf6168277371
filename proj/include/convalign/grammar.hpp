// include/convalign/grammar.hpp

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

#ifndef CONVALIGN_GRAMMAR_HPP_
#define CONVALIGN_GRAMMAR_HPP_

#include <span>
#include <string>
#include <vector>

namespace convalign {

// Linear decoding grammar over a transcript of N tokens: a word chain
// state 0 -> 1 -> ... -> N with one arc per token, epsilon arcs from state 0
// to every state, and every state final. Its language is exactly the set of
// contiguous subsequences of the transcript (including the empty one).
//
// The automaton structure is fully characterized by the token list, so the
// grammar is represented by index arithmetic rather than a generic FST.
// Immutable after construction; safe to share across threads.
class LinearIslandGrammar {
 public:
  // Throws std::invalid_argument on an empty token list.
  explicit LinearIslandGrammar(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }

  int num_states() const { return static_cast<int>(tokens_.size()) + 1; }
  int num_word_arcs() const { return static_cast<int>(tokens_.size()); }
  // Epsilon entries 0->1 .. 0->N (0->0 is implicit).
  int num_epsilon_arcs() const { return static_cast<int>(tokens_.size()); }

  // True iff seq is a contiguous subsequence of the transcript. The empty
  // sequence is accepted (all states are final and epsilon-reachable).
  bool accepts(std::span<const std::string> seq) const;

  struct Projection {
    int ref_start = 0;
    int ref_len = 0;
    int distance = 0;
  };

  // The contiguous subsequence of the transcript minimizing word edit
  // distance to hyp; ties broken by smaller ref_start, then smaller ref_len.
  // Stand-in for grammar-constrained decoding: the accepted sequence closest
  // to an unconstrained hypothesis. Empty hyp projects to (0, 0, 0).
  Projection project(std::span<const std::string> hyp) const;

 private:
  std::vector<std::string> tokens_;
};

}  // namespace convalign

#endif  // CONVALIGN_GRAMMAR_HPP_
