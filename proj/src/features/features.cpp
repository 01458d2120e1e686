// src/features/features.cpp

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

#include "dgu/features/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dgu::features {

Matrix make_phoneme_embeddings(int inventory_size, int d_raw, Rng& rng) {
  if (inventory_size < 1 || d_raw < 1) throw InputError("make_phoneme_embeddings: empty table");
  return standard_normal(inventory_size, d_raw, rng);
}

Utterance synth_features(std::string id, const PhonemeIds& phonemes, const Matrix& embeddings,
                         const SynthConfig& cfg, Rng& rng) {
  if (phonemes.empty()) throw InputError("synth_features: empty phoneme sequence for " + id);
  if (cfg.dur_min < 1 || cfg.dur_max < cfg.dur_min)
    throw InputError("synth_features: bad duration range");
  if (embeddings.cols() != cfg.d_raw) throw DimensionError("synth_features: embedding width");

  std::uniform_int_distribution<int> dur(cfg.dur_min, cfg.dur_max);
  std::vector<int> durations;
  Index total = 0;
  for (int p : phonemes) {
    if (p < 0 || p >= embeddings.rows())
      throw InputError("synth_features: phoneme id " + std::to_string(p) + " out of range");
    durations.push_back(dur(rng));
    total += durations.back();
  }

  Utterance u;
  u.id = std::move(id);
  u.hidden_phonemes = phonemes;
  u.frames.resize(total, cfg.d_raw);
  std::normal_distribution<double> noise(0.0, 1.0);
  Index row = 0;
  for (std::size_t i = 0; i < phonemes.size(); ++i)
    for (int f = 0; f < durations[i]; ++f, ++row)
      for (Index c = 0; c < cfg.d_raw; ++c)
        u.frames(row, c) = embeddings(phonemes[i], c) + cfg.noise_sd * noise(rng);
  return u;
}

namespace {

std::vector<int> nearest(const FeatureMatrix& frames, const FeatureMatrix& centroids) {
  std::vector<int> out(static_cast<std::size_t>(frames.rows()));
  for (Index i = 0; i < frames.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Index c = 0; c < centroids.rows(); ++c) {
      const double d = (frames.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    out[static_cast<std::size_t>(i)] = arg;
  }
  return out;
}

FeatureMatrix kmeanspp_seed(const FeatureMatrix& frames, int k, Rng& rng) {
  const Index n = frames.rows();
  FeatureMatrix centroids(k, frames.cols());
  std::uniform_int_distribution<Index> first(0, n - 1);
  centroids.row(0) = frames.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d2[i] = (frames.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        r -= d2[i];
        if (r < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centroids.row(c) = frames.row(pick);
    for (Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (frames.row(i) - centroids.row(c)).squaredNorm());
  }
  return centroids;
}

}  // namespace

std::vector<int> KMeansModel::assign(const FeatureMatrix& frames) const {
  if (frames.cols() != centroids.cols())
    throw DimensionError("kmeans assign: frames " + shape_str(frames) + " vs centroids " +
                         shape_str(centroids));
  return nearest(frames, centroids);
}

double within_cluster_ss(const FeatureMatrix& frames, const FeatureMatrix& centroids,
                         std::span<const int> assignment) {
  double s = 0.0;
  for (Index i = 0; i < frames.rows(); ++i)
    s += (frames.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
  return s;
}

KMeansModel kmeans_fit(const FeatureMatrix& frames, const KMeansOptions& opt, Rng& rng,
                       std::vector<double>* trace) {
  if (opt.k < 1) throw InputError("kmeans_fit: k must be positive");
  if (frames.rows() < opt.k)
    throw InputError("kmeans_fit: " + std::to_string(frames.rows()) + " frames for k=" +
                     std::to_string(opt.k));
  KMeansModel best;
  double best_wcss = std::numeric_limits<double>::infinity();
  std::vector<double> best_trace;
  for (int restart = 0; restart < std::max(1, opt.restarts); ++restart) {
    FeatureMatrix centroids = kmeanspp_seed(frames, opt.k, rng);
    std::vector<int> assignment = nearest(frames, centroids);
    std::vector<double> local_trace;
    for (int it = 0; it < opt.iters; ++it) {
      FeatureMatrix sums = FeatureMatrix::Zero(opt.k, frames.cols());
      std::vector<Index> counts(static_cast<std::size_t>(opt.k), 0);
      for (Index i = 0; i < frames.rows(); ++i) {
        sums.row(assignment[i]) += frames.row(i);
        ++counts[static_cast<std::size_t>(assignment[i])];
      }
      for (int c = 0; c < opt.k; ++c)
        if (counts[static_cast<std::size_t>(c)] > 0)
          centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      std::vector<int> next = nearest(frames, centroids);
      local_trace.push_back(within_cluster_ss(frames, centroids, next));
      const bool changed = next != assignment;
      assignment = std::move(next);
      if (!changed) break;
    }
    const double w = within_cluster_ss(frames, centroids, assignment);
    if (w < best_wcss) {
      best_wcss = w;
      best.centroids = std::move(centroids);
      best_trace = std::move(local_trace);
    }
  }
  if (trace) *trace = std::move(best_trace);
  return best;
}

PcaModel pca_fit(const FeatureMatrix& frames, int d_pca) {
  const Index n = frames.rows(), d = frames.cols();
  if (d_pca < 1 || d_pca > d || d > n)
    throw InputError("pca_fit: need 1 <= d_pca (" + std::to_string(d_pca) + ") <= d_raw (" +
                     std::to_string(d) + ") <= frames (" + std::to_string(n) + ")");
  PcaModel m;
  m.mean = frames.colwise().mean();
  FeatureMatrix centered = frames;
  centered.rowwise() -= m.mean;
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw InputError("pca_fit: eigendecomposition failed");

  const auto& values = eig.eigenvalues();  // ascending
  const double top = std::max(values(d - 1), 0.0);
  const double tol = std::max(top, 1.0) * 1e-10 * static_cast<double>(d);
  if (values(d - d_pca) <= tol)
    throw InputError("pca_fit: covariance rank is below d_pca=" + std::to_string(d_pca));

  m.projection.resize(d, d_pca);
  m.explained_variance.resize(d_pca);
  for (int j = 0; j < d_pca; ++j) {
    const Index src = d - 1 - j;
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    m.projection.col(j) = v;
    m.explained_variance(j) = values(src);
  }
  return m;
}

FeaturePipeline fit_pipeline(std::span<const Utterance> utterances, const PipelineOptions& opt, Rng& rng) {
  if (utterances.empty()) throw InputError("fit_pipeline: no utterances");
  Index rows = 0;
  for (const auto& u : utterances) rows += u.frames.rows();
  FeatureMatrix stacked(rows, utterances.front().frames.cols());
  Index at = 0;
  for (const auto& u : utterances) {
    stacked.middleRows(at, u.frames.rows()) = u.frames;
    at += u.frames.rows();
  }
  FeaturePipeline p;
  p.kmeans = kmeans_fit(stacked, opt.kmeans, rng);
  p.pca = pca_fit(stacked, opt.d_pca);
  return p;
}

SegmentSequence make_segments(const FeaturePipeline& pipeline, const Utterance& utt) {
  const std::vector<int> ids = pipeline.kmeans.assign(utt.frames);
  const FeatureMatrix compressed = pca_apply(pipeline.pca, utt.frames);
  const FeatureMatrix merged = segment_merge(compressed, ids);
  // A single merged segment has no neighbours; pooling leaves it as is.
  return SegmentSequence{adjacent_pool(merged), utt.id};
}

}  // namespace dgu::features
