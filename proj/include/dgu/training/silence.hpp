// include/dgu/training/silence.hpp

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

#include <random>
#include <vector>

#include "dgu/numerics/common.hpp"

namespace dgu::training {

/// Concatenates words, inserting sil at each word boundary independently
/// with probability p_sil. One Bernoulli draw per boundary, always.
inline PhonemeIds silence_insert(const std::vector<PhonemeIds>& words, double p_sil, int sil, Rng& rng) {
  if (!(p_sil >= 0.0 && p_sil <= 1.0)) throw ConfigError("p_SIL must lie in [0, 1]");
  std::bernoulli_distribution coin(p_sil);
  PhonemeIds out;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w > 0 && coin(rng)) out.push_back(sil);
    out.insert(out.end(), words[w].begin(), words[w].end());
  }
  return out;
}

}  // namespace dgu::training
