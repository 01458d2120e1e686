// include/dgu/cli/grammar.hpp

// Copyright 2026  The dgu Authors

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

#pragma once

#include <vector>

#include "dgu/numerics/common.hpp"
#include "dgu/phoneme_lm/phoneme_lm.hpp"

namespace dgu::cli {

struct GrammarConfig {
  int phonemes = 8;
  /// Allowed next phonemes per two-phoneme context.
  int successors = 3;
  /// Exponent of the global rank-frequency skew.
  double zipf = 1.0;
  int words_min = 2;
  int words_max = 4;
  int word_len_min = 1;
  int word_len_max = 4;
};

struct DataSizes {
  int train = 200;
  int dev = 50;
  int eval = 50;
  int text = 2000;
  /// Silence probability at word boundaries of the spoken side.
  double p_sil = 0.25;
};

/// Order-2 Markov chain over phoneme ids with sparse, skewed transitions
/// and no immediate repeats. Sentences are chain runs cut into words.
class PhonotacticGrammar {
 public:
  PhonotacticGrammar(const GrammarConfig& cfg, Rng& rng);

  lm::Sentence sample(Rng& rng) const;
  int phonemes() const { return cfg_.phonemes; }

  /// Allowed successors and their probabilities for context (a, b); the
  /// start symbol is phonemes().
  const std::vector<int>& successors(int a, int b) const;
  const std::vector<double>& probabilities(int a, int b) const;

 private:
  std::size_t context(int a, int b) const;

  GrammarConfig cfg_;
  std::vector<std::vector<int>> next_;
  std::vector<std::vector<double>> prob_;
};

void validate(const GrammarConfig& cfg);
void validate(const DataSizes& sizes);

}  // namespace dgu::cli
