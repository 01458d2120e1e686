// include/dgu/evaluation/evaluation.hpp

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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dgu/numerics/common.hpp"

namespace dgu::evaluation {

struct DecodedUtterance {
  std::string id;
  PhonemeIds phonemes;
};

/// Per-row argmax (ties to the lowest id), collapse of adjacent repeats,
/// then removal of sil.
PhonemeIds decode_ids(std::span<const int> frame_ids, int sil);
PhonemeIds decode(const PhonemeDistSeq& output, int sil);

/// Levenshtein distance with unit costs.
std::size_t edit_distance(std::span<const int> hyp, std::span<const int> ref);

/// Total edit distance over total reference length.
double per(const std::vector<PhonemeIds>& hyps, const std::vector<PhonemeIds>& refs);

/// Monte-Carlo PER of decoding rows whose argmax is uniform over the
/// inventory, at each utterance's output length.
double random_baseline_per(const std::vector<int>& output_lengths, const std::vector<PhonemeIds>& refs,
                           int inventory_size, int sil, int trials, Rng& rng);

struct ReportRow {
  std::string id;
  std::size_t distance = 0;
  std::size_t ref_len = 0;
};

/// CSV with header id,distance,ref_len and a final summary row
/// "TOTAL,<sum distance>,<sum ref_len>,<per>".
void write_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

}  // namespace dgu::evaluation
