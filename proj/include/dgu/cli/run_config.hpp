// include/dgu/cli/run_config.hpp

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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dgu/cli/grammar.hpp"
#include "dgu/features/features.hpp"
#include "dgu/phoneme_lm/phoneme_lm.hpp"
#include "dgu/training/training.hpp"

namespace dgu::cli {

/// Flat key=value run configuration. Every key has a default; files and
/// overrides may only set known keys.
class RunConfig {
 public:
  RunConfig();

  /// Lines "key = value"; '#' starts a comment.
  static RunConfig from_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  std::uint64_t seed() const;

  GrammarConfig grammar() const;
  DataSizes sizes() const;
  features::SynthConfig synth() const;
  features::PipelineOptions pipeline() const;
  lm::MlmConfig mlm() const;
  lm::RefPoolOptions ref_options(lm::RefMode mode) const;
  /// vocab and d_in come from the dataset, not the file.
  training::TrainConfig train(int vocab, const training::Ablations& ablations) const;
  int baseline_trials() const;

  /// Throws ConfigError on the first invalid value.
  void validate() const;

  /// FNV-1a over the sorted key=value lines whose key starts with one of
  /// the prefixes, chained onto upstream. 16 hex digits.
  std::string hash(const std::vector<std::string>& prefixes, const std::string& upstream = "") const;

 private:
  std::map<std::string, std::string> values_;
};

/// Identity of each stage's output under this config.
std::string data_hash(const RunConfig& cfg);
std::string lm_hash(const RunConfig& cfg);
std::string refs_hash(const RunConfig& cfg, lm::RefMode mode);
std::string train_hash(const RunConfig& cfg, const training::Ablations& ablations);

lm::RefMode ref_mode(const training::Ablations& ablations);
std::string ref_mode_name(lm::RefMode mode);

}  // namespace dgu::cli
