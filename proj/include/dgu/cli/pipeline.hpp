// include/dgu/cli/pipeline.hpp

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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgu/cli/run_config.hpp"
#include "dgu/features/dataset.hpp"

namespace dgu::cli {

/// An upstream artifact is absent.
struct MissingArtifactError : std::runtime_error {
  explicit MissingArtifactError(const std::filesystem::path& file)
      : std::runtime_error("missing upstream artifact " + file.string()), file(file) {}
  std::filesystem::path file;
};

/// An upstream artifact was produced under a different configuration.
struct HashMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File layout under one output directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.txt"; }
  std::filesystem::path split(const std::string& name) const { return root / (name + ".dgud"); }
  std::filesystem::path segments(const std::string& name) const { return root / (name + ".dgus"); }
  std::filesystem::path text() const { return root / "text.txt"; }
  std::filesystem::path lm() const { return root / "lm.dguw"; }
  std::filesystem::path refs(lm::RefMode mode) const { return root / "refs" / (ref_mode_name(mode) + ".dgur"); }
  std::filesystem::path run(const training::Ablations& a) const { return root / "runs" / a.label(); }
};

/// Text corpus: one sentence per line, phoneme symbols separated by spaces,
/// words separated by " | ".
void write_text(const std::filesystem::path& path, const std::vector<lm::Sentence>& text,
                const features::Inventory& inv);
std::vector<lm::Sentence> read_text(const std::filesystem::path& path, const features::Inventory& inv);

void cmd_gen_data(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_train_lm(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_sample_refs(const RunConfig& cfg, const std::filesystem::path& out, const training::Ablations& ablations,
                     int threads = 1);

struct TrainSummary {
  std::size_t selected_epoch = 0;
  long selected_step = 0;
  bool fallback = false;
  std::optional<double> lm_nll;
  double vocab_usage = 0.0;
  long steps = 0;
  long truncated_pairs = 0;
};

TrainSummary cmd_train(const RunConfig& cfg, const std::filesystem::path& out, const training::Ablations& ablations);

struct EvalSummary {
  double per = 0.0;
  double baseline_per = 0.0;
};

/// Scores a checkpoint (default: the selected one of the run) on one split.
/// The eval split writes report.csv, any other report_<split>.csv.
EvalSummary cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& out,
                         const training::Ablations& ablations,
                         const std::optional<std::filesystem::path>& checkpoint = std::nullopt,
                         const std::string& split = "eval");

struct AblationRow {
  std::string variant;
  TrainSummary train;
  EvalSummary eval;
};

/// Full model plus each requested ablation (all four when empty), each from
/// reference sampling through evaluation. A reference pool already on disk
/// under the matching hash is reused. Writes ablate/comparison.csv.
std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::filesystem::path& out,
                                    const std::vector<std::string>& which, int threads = 1);

}  // namespace dgu::cli
