// include/dgu/features/features.hpp

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

#include <span>
#include <string>
#include <vector>

#include "dgu/numerics/common.hpp"

namespace dgu::features {

struct SynthConfig {
  int d_raw = 32;
  int dur_min = 2;
  int dur_max = 4;
  double noise_sd = 0.1;
};

struct Utterance {
  std::string id;
  /// Ground truth, read only by evaluation.
  PhonemeIds hidden_phonemes;
  FeatureMatrix frames;
};

struct SegmentSequence {
  FeatureMatrix segments;
  std::string source_id;
};

/// One fixed d_raw vector per phoneme id, drawn once per dataset.
Matrix make_phoneme_embeddings(int inventory_size, int d_raw, Rng& rng);

/// Stand-in for a frozen speech encoder: every phoneme emits a random number
/// of frames in [dur_min, dur_max], each its embedding plus Gaussian noise.
Utterance synth_features(std::string id, const PhonemeIds& phonemes, const Matrix& embeddings,
                         const SynthConfig& cfg, Rng& rng);

struct KMeansModel {
  FeatureMatrix centroids;

  int k() const { return static_cast<int>(centroids.rows()); }
  /// Nearest centroid per row, ties to the lowest index.
  std::vector<int> assign(const FeatureMatrix& frames) const;
};

struct KMeansOptions {
  int k = 16;
  int iters = 50;
  /// Independent k-means++ seedings; the lowest final WCSS wins.
  int restarts = 1;
};

/// Lloyd iterations from k-means++ seeding. Stops early once no assignment
/// changes. Empty clusters keep their previous centroid. When trace is given
/// it receives the within-cluster sum of squares after every iteration of the
/// winning restart.
KMeansModel kmeans_fit(const FeatureMatrix& frames, const KMeansOptions& opt, Rng& rng,
                       std::vector<double>* trace = nullptr);

double within_cluster_ss(const FeatureMatrix& frames, const FeatureMatrix& centroids,
                         std::span<const int> assignment);

struct PcaModel {
  RowVector mean;
  /// [d_raw × d_pca], orthonormal columns, descending eigenvalue order.
  Matrix projection;
  /// Sample-covariance eigenvalues of the kept components.
  RowVector explained_variance;
};

/// Top-d_pca eigenvectors of the sample covariance. Each eigenvector's sign
/// is fixed so that its largest-magnitude component is positive.
PcaModel pca_fit(const FeatureMatrix& frames, int d_pca);

template <typename Scalar>
Array2<Scalar> pca_apply(const PcaModel& model, const Array2<Scalar>& frames) {
  if (frames.cols() != model.projection.rows())
    throw DimensionError("pca_apply: frames " + shape_str(frames) + " vs projection " +
                         shape_str(model.projection));
  Array2<Scalar> centered = frames;
  centered.rowwise() -= model.mean.cast<Scalar>();
  return centered * model.projection.cast<Scalar>();
}

/// Collapses each maximal run of equal cluster ids to the mean of its frames.
template <typename Scalar>
Array2<Scalar> segment_merge(const Array2<Scalar>& frames, std::span<const int> cluster_ids) {
  if (static_cast<Index>(cluster_ids.size()) != frames.rows())
    throw InputError("segment_merge: " + std::to_string(cluster_ids.size()) + " ids for " +
                     std::to_string(frames.rows()) + " frames");
  std::vector<std::pair<Index, Index>> runs;
  for (Index i = 0; i < frames.rows(); ++i) {
    if (i == 0 || cluster_ids[i] != cluster_ids[i - 1])
      runs.emplace_back(i, 1);
    else
      ++runs.back().second;
  }
  Array2<Scalar> out(static_cast<Index>(runs.size()), frames.cols());
  for (std::size_t r = 0; r < runs.size(); ++r)
    out.row(static_cast<Index>(r)) =
        frames.middleRows(runs[r].first, runs[r].second).colwise().sum() / Scalar(runs[r].second);
  return out;
}

/// Inserts the mean of every adjacent pair between them: n rows -> 2n - 1.
template <typename Scalar>
Array2<Scalar> adjacent_pool(const Array2<Scalar>& segments) {
  if (segments.rows() < 1) throw InputError("adjacent_pool: empty segment sequence");
  const Index n = segments.rows();
  Array2<Scalar> out(2 * n - 1, segments.cols());
  for (Index i = 0; i < n; ++i) {
    out.row(2 * i) = segments.row(i);
    if (i + 1 < n) out.row(2 * i + 1) = (segments.row(i) + segments.row(i + 1)) / Scalar(2);
  }
  return out;
}

struct FeaturePipeline {
  KMeansModel kmeans;
  PcaModel pca;
};

struct PipelineOptions {
  KMeansOptions kmeans;
  int d_pca = 16;
};

/// Fits clustering and compression on the stacked frames of a split.
FeaturePipeline fit_pipeline(std::span<const Utterance> utterances, const PipelineOptions& opt, Rng& rng);

/// assign -> compress -> merge runs -> pool adjacent segments.
SegmentSequence make_segments(const FeaturePipeline& pipeline, const Utterance& utt);

}  // namespace dgu::features
