// src/cli/grammar.cpp

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

#include "dgu/cli/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dgu::cli {

void validate(const GrammarConfig& c) {
  if (c.phonemes < 3) throw ConfigError("phoneme inventory needs at least 3 symbols besides SIL");
  if (c.successors < 1 || c.successors > c.phonemes - 1)
    throw ConfigError("successors must lie in [1, phonemes - 1]");
  if (!(c.zipf >= 0.0)) throw ConfigError("zipf exponent must be >= 0");
  if (c.words_min < 1 || c.words_max < c.words_min) throw ConfigError("bad words-per-sentence range");
  if (c.word_len_min < 1 || c.word_len_max < c.word_len_min) throw ConfigError("bad word length range");
}

void validate(const DataSizes& s) {
  if (s.train < 1 || s.dev < 1 || s.eval < 1 || s.text < 1) throw ConfigError("sentence counts must be >= 1");
  if (!(s.p_sil >= 0.0 && s.p_sil <= 1.0)) throw ConfigError("data p_SIL must lie in [0, 1]");
}

PhonotacticGrammar::PhonotacticGrammar(const GrammarConfig& cfg, Rng& rng) : cfg_(cfg) {
  validate(cfg);
  const int P = cfg.phonemes;
  std::vector<int> rank(static_cast<std::size_t>(P));
  std::iota(rank.begin(), rank.end(), 0);
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> weight(static_cast<std::size_t>(P));
  for (int p = 0; p < P; ++p) weight[p] = 1.0 / std::pow(rank[p] + 1.0, cfg.zipf);

  const std::size_t contexts = static_cast<std::size_t>(P + 1) * static_cast<std::size_t>(P + 1);
  next_.resize(contexts);
  prob_.resize(contexts);
  for (int a = 0; a <= P; ++a)
    for (int b = 0; b <= P; ++b) {
      // Weighted draw without replacement, excluding a repeat of b.
      std::vector<int> pool;
      for (int p = 0; p < P; ++p)
        if (p != b) pool.push_back(p);
      std::vector<int> chosen;
      while (static_cast<int>(chosen.size()) < cfg.successors) {
        std::vector<double> w;
        for (int p : pool) w.push_back(weight[p]);
        const std::size_t pick = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
        chosen.push_back(pool[pick]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      }
      std::sort(chosen.begin(), chosen.end());
      double total = 0.0;
      for (int p : chosen) total += weight[p];
      std::vector<double> pr;
      for (int p : chosen) pr.push_back(weight[p] / total);
      next_[context(a, b)] = chosen;
      prob_[context(a, b)] = pr;
    }
}

std::size_t PhonotacticGrammar::context(int a, int b) const {
  const int P = cfg_.phonemes;
  if (a < 0 || a > P || b < 0 || b > P) throw InputError("grammar context outside inventory");
  return static_cast<std::size_t>(a) * static_cast<std::size_t>(P + 1) + static_cast<std::size_t>(b);
}

const std::vector<int>& PhonotacticGrammar::successors(int a, int b) const { return next_[context(a, b)]; }
const std::vector<double>& PhonotacticGrammar::probabilities(int a, int b) const { return prob_[context(a, b)]; }

lm::Sentence PhonotacticGrammar::sample(Rng& rng) const {
  const int words = std::uniform_int_distribution<int>(cfg_.words_min, cfg_.words_max)(rng);
  std::uniform_int_distribution<int> word_len(cfg_.word_len_min, cfg_.word_len_max);
  int a = cfg_.phonemes, b = cfg_.phonemes;
  lm::Sentence out;
  for (int w = 0; w < words; ++w) {
    PhonemeIds word;
    const int n = word_len(rng);
    for (int i = 0; i < n; ++i) {
      const std::size_t c = context(a, b);
      const int next = next_[c][std::discrete_distribution<std::size_t>(prob_[c].begin(), prob_[c].end())(rng)];
      word.push_back(next);
      a = b;
      b = next;
    }
    out.push_back(std::move(word));
  }
  return out;
}

}  // namespace dgu::cli
