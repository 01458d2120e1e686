// src/evaluation/evaluation.cpp

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

#include "dgu/evaluation/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace dgu::evaluation {

PhonemeIds decode_ids(std::span<const int> frame_ids, int sil) {
  PhonemeIds out;
  for (std::size_t i = 0; i < frame_ids.size(); ++i) {
    if (i > 0 && frame_ids[i] == frame_ids[i - 1]) continue;
    if (frame_ids[i] != sil) out.push_back(frame_ids[i]);
  }
  return out;
}

PhonemeIds decode(const PhonemeDistSeq& output, int sil) {
  if (output.rows() < 1) throw InputError("decode: empty output");
  std::vector<int> ids(static_cast<std::size_t>(output.rows()));
  for (Index r = 0; r < output.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < output.cols(); ++c)
      if (output(r, c) > output(r, best)) best = c;
    ids[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return decode_ids(ids, sil);
}

std::size_t edit_distance(std::span<const int> hyp, std::span<const int> ref) {
  std::vector<std::size_t> prev(ref.size() + 1), cur(ref.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

double per(const std::vector<PhonemeIds>& hyps, const std::vector<PhonemeIds>& refs) {
  if (hyps.size() != refs.size()) throw InputError("per: hypothesis and reference counts differ");
  std::size_t dist = 0, len = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    dist += edit_distance(hyps[i], refs[i]);
    len += refs[i].size();
  }
  if (len == 0) throw InputError("per: total reference length is zero");
  return static_cast<double>(dist) / static_cast<double>(len);
}

double random_baseline_per(const std::vector<int>& output_lengths, const std::vector<PhonemeIds>& refs,
                           int inventory_size, int sil, int trials, Rng& rng) {
  if (output_lengths.size() != refs.size()) throw InputError("random_baseline_per: size mismatch");
  if (trials < 1) throw ConfigError("random_baseline_per: trials must be positive");
  std::uniform_int_distribution<int> uni(0, inventory_size - 1);
  double total = 0.0;
  std::vector<PhonemeIds> hyps(refs.size());
  for (int trial = 0; trial < trials; ++trial) {
    for (std::size_t u = 0; u < refs.size(); ++u) {
      std::vector<int> frames(static_cast<std::size_t>(output_lengths[u]));
      for (int& f : frames) f = uni(rng);
      hyps[u] = decode_ids(frames, sil);
    }
    total += per(hyps, refs);
  }
  return total / trials;
}

void write_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "id,distance,ref_len\n";
  std::size_t dist = 0, len = 0;
  for (const auto& r : rows) {
    out << r.id << ',' << r.distance << ',' << r.ref_len << '\n';
    dist += r.distance;
    len += r.ref_len;
  }
  if (len == 0) throw InputError("write_report: total reference length is zero");
  out << "TOTAL," << dist << ',' << len << ',' << std::setprecision(6) << std::fixed
      << static_cast<double>(dist) / static_cast<double>(len) << '\n';
}

}  // namespace dgu::evaluation
