// tests/features_test.cpp

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

#include <filesystem>

#include "dgu/features/dataset.hpp"
#include "dgu/features/features.hpp"
#include "doctest.h"
#include "grad_check.hpp"
#include "oracles.hpp"

using namespace dgu;
using namespace dgu::features;
using dgu::testing::random_matrix;

TEST_SUITE("synth_features") {
  TEST_CASE("noise-free single phoneme repeats its embedding") {
    Rng rng(1);
    const Matrix emb = make_phoneme_embeddings(4, 8, rng);
    SynthConfig cfg{8, 3, 3, 0.0};
    const Utterance u = synth_features("u", {2}, emb, cfg, rng);
    REQUIRE(u.frames.rows() == 3);
    for (Index r = 0; r < 3; ++r) CHECK(u.frames.row(r) == emb.row(2));
  }

  TEST_CASE("frame count is the sum of durations") {
    Rng rng(2);
    const Matrix emb = make_phoneme_embeddings(4, 8, rng);
    SynthConfig cfg{8, 1, 5, 0.0};
    const Utterance u = synth_features("u", {0, 3}, emb, cfg, rng);
    Index first_run = 0;
    while (first_run < u.frames.rows() && u.frames.row(first_run) == emb.row(0)) ++first_run;
    CHECK(first_run >= 1);
    CHECK(first_run <= 5);
    for (Index r = first_run; r < u.frames.rows(); ++r) CHECK(u.frames.row(r) == emb.row(3));
    CHECK(u.frames.rows() - first_run >= 1);
    CHECK(u.frames.rows() - first_run <= 5);
  }

  TEST_CASE("noise averages out over many frames") {
    Rng rng(3);
    const Matrix emb = make_phoneme_embeddings(2, 6, rng);
    SynthConfig cfg{6, 10000, 10000, 0.1};
    const Utterance u = synth_features("u", {1}, emb, cfg, rng);
    const RowVector mean = u.frames.colwise().mean();
    const double band = 3.0 * 0.1 / std::sqrt(10000.0);
    for (Index c = 0; c < 6; ++c) CHECK(std::abs(mean(c) - emb(1, c)) < band);
  }

  TEST_CASE("empty phoneme sequence is rejected") {
    Rng rng(4);
    const Matrix emb = make_phoneme_embeddings(2, 4, rng);
    CHECK_THROWS_AS(synth_features("u", {}, emb, SynthConfig{4, 1, 2, 0.1}, rng), InputError);
  }
}

TEST_SUITE("kmeans") {
  TEST_CASE("k=1 gives the mean") {
    Rng rng(5);
    const Matrix x = random_matrix(20, 3, rng);
    const KMeansModel m = kmeans_fit(x, {1, 10, 1}, rng);
    CHECK((m.centroids.row(0) - x.colwise().mean()).norm() < 1e-12);
  }

  TEST_CASE("two far-apart clouds recover their means") {
    Rng rng(6);
    Matrix x(40, 2);
    const Matrix a = random_matrix(20, 2, rng, -0.5, 0.5), b = random_matrix(20, 2, rng, -0.5, 0.5);
    x.topRows(20) = a;
    x.bottomRows(20) = b.array() + 100.0;
    const KMeansModel m = kmeans_fit(x, {2, 50, 1}, rng);
    const RowVector ma = x.topRows(20).colwise().mean(), mb = x.bottomRows(20).colwise().mean();
    const bool ordered = (m.centroids.row(0) - ma).norm() < 1e-9 && (m.centroids.row(1) - mb).norm() < 1e-9;
    const bool swapped = (m.centroids.row(1) - ma).norm() < 1e-9 && (m.centroids.row(0) - mb).norm() < 1e-9;
    CHECK((ordered || swapped));
  }

  TEST_CASE("within-cluster sum of squares never increases") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix x = random_matrix(200, 4, rng);
      std::vector<double> trace;
      kmeans_fit(x, {6, 100, 1}, rng, &trace);
      REQUIRE(!trace.empty());
      for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
  }

  TEST_CASE("not worse than brute-force Lloyd over all seedings") {
    Rng rng(8);
    for (int k = 1; k <= 3; ++k)
      for (int trial = 0; trial < 4; ++trial) {
        const Matrix x = dgu::testing::make_blobs(24 + trial * 2, k, 2, 0.8, rng);
        const KMeansModel m = kmeans_fit(x, {k, 100, 10}, rng);
        const double ours = within_cluster_ss(x, m.centroids, m.assign(x));
        CHECK(ours <= dgu::testing::brute_force_lloyd_wcss(x, k) + 1e-9);
      }
  }

  TEST_CASE("fewer frames than clusters is an input error") {
    Rng rng(9);
    CHECK_THROWS_AS(kmeans_fit(random_matrix(3, 2, rng), {4, 10, 1}, rng), InputError);
  }
}

TEST_SUITE("pca") {
  TEST_CASE("points on a line reconstruct exactly from one component") {
    Rng rng(10);
    RowVector dir(4);
    dir << 1.0, -2.0, 0.5, 3.0;
    RowVector offset(4);
    offset << 0.3, 0.1, -0.7, 2.0;
    Matrix x(30, 4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (Index i = 0; i < 30; ++i) x.row(i) = offset + u(rng) * dir;
    const PcaModel m = pca_fit(x, 1);
    const Matrix z = pca_apply(m, x);
    Matrix recon = z * m.projection.transpose();
    recon.rowwise() += m.mean;
    CHECK((recon - x).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("full-rank projection preserves total variance and distances") {
    Rng rng(11);
    const Matrix x = standard_normal(500, 5, rng);
    const PcaModel m = pca_fit(x, 5);
    const Matrix z = pca_apply(m, x);
    Matrix xc = x;
    xc.rowwise() -= x.colwise().mean();
    CHECK(std::abs(z.squaredNorm() - xc.squaredNorm()) < 1e-6 * xc.squaredNorm());
    for (int i = 0; i < 20; ++i) {
      const double dx = (x.row(i) - x.row(i + 20)).norm();
      const double dz = (z.row(i) - z.row(i + 20)).norm();
      CHECK(std::abs(dx - dz) < 1e-12);
    }
    CHECK((m.projection.transpose() * m.projection - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("explained variance matches a Jacobi eigendecomposition") {
    Rng rng(12);
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix x = random_matrix(20, 4, rng);
      const PcaModel m = pca_fit(x, 2);
      Matrix xc = x;
      xc.rowwise() -= x.colwise().mean();
      const auto ev = dgu::testing::jacobi_eigenvalues(xc.transpose() * xc / 19.0);
      CHECK(std::abs(m.explained_variance.sum() - (ev[0] + ev[1])) < 1e-8);
    }
  }

  TEST_CASE("rank-deficient covariance is rejected") {
    Matrix x(10, 3);
    for (Index i = 0; i < 10; ++i) x.row(i) << double(i), 2.0 * i, -double(i);
    CHECK_THROWS_AS(pca_fit(x, 2), InputError);
    CHECK_NOTHROW(pca_fit(x, 1));
  }
}

TEST_SUITE("segment pooling") {
  TEST_CASE("merge runs of equal ids") {
    Matrix f(3, 2);
    f << 1, 2, 3, 4, 5, 6;
    const std::vector<int> ids{1, 1, 2};
    const Matrix m = segment_merge(f, ids);
    REQUIRE(m.rows() == 2);
    CHECK(m(0, 0) == 2.0);
    CHECK(m(0, 1) == 3.0);
    CHECK(m.row(1) == f.row(2));

    const std::vector<int> same{4, 4, 4};
    CHECK(segment_merge(f, same) == Matrix(f.colwise().mean()));
    const std::vector<int> alt{1, 2, 1};
    CHECK(segment_merge(f, alt) == f);
    const std::vector<int> short_ids{1, 2};
    CHECK_THROWS_AS(segment_merge(f, short_ids), InputError);
  }

  TEST_CASE("merging its own output with distinct ids is idempotent") {
    Rng rng(13);
    const Matrix f = random_matrix(30, 3, rng);
    std::vector<int> ids;
    std::uniform_int_distribution<int> u(0, 2);
    for (int i = 0; i < 30; ++i) ids.push_back(u(rng));
    const Matrix once = segment_merge(f, ids);
    std::vector<int> distinct(static_cast<std::size_t>(once.rows()));
    for (std::size_t i = 0; i < distinct.size(); ++i) distinct[i] = static_cast<int>(i);
    CHECK(segment_merge(once, distinct) == once);
  }

  TEST_CASE("adjacent pooling inserts pair means") {
    Matrix one(1, 2);
    one << 1.0, 2.0;
    CHECK(adjacent_pool(one) == one);
    Matrix two(2, 2);
    two << 1.0, 2.0, 3.0, 6.0;
    const Matrix p = adjacent_pool(two);
    REQUIRE(p.rows() == 3);
    CHECK(p.row(0) == two.row(0));
    CHECK(p(1, 0) == 2.0);
    CHECK(p(1, 1) == 4.0);
    CHECK(p.row(2) == two.row(1));
  }

  TEST_CASE("five segments pool to nine rows with inputs at even positions") {
    Rng rng(14);
    const Matrix s = random_matrix(5, 3, rng);
    const Matrix p = adjacent_pool(s);
    CHECK(p.rows() == 9);
    for (Index i = 0; i < 5; ++i) CHECK(p.row(2 * i) == s.row(i));
  }
}

TEST_SUITE("pipeline") {
  std::vector<Utterance> make_corpus(std::uint64_t seed) {
    Rng rng(seed);
    const Matrix emb = make_phoneme_embeddings(5, 12, rng);
    std::vector<Utterance> utts;
    std::uniform_int_distribution<int> ph(0, 4);
    for (int i = 0; i < 20; ++i) {
      PhonemeIds ids;
      for (int j = 0; j < 6; ++j) ids.push_back(ph(rng));
      utts.push_back(synth_features("u" + std::to_string(i), ids, emb, SynthConfig{12, 2, 4, 0.05}, rng));
    }
    return utts;
  }

  TEST_CASE("same seed gives bit-identical segments") {
    std::vector<Matrix> runs[2];
    for (auto& run : runs) {
      const auto utts = make_corpus(77);
      Rng rng(5);
      const FeaturePipeline p = fit_pipeline(utts, {{5, 30, 1}, 4}, rng);
      for (const auto& u : utts) run.push_back(make_segments(p, u).segments);
    }
    REQUIRE(runs[0].size() == runs[1].size());
    for (std::size_t i = 0; i < runs[0].size(); ++i) CHECK(runs[0][i] == runs[1][i]);
  }

  TEST_CASE("segments are pooled to odd length and finite") {
    const auto utts = make_corpus(78);
    Rng rng(6);
    const FeaturePipeline p = fit_pipeline(utts, {{5, 30, 1}, 4}, rng);
    for (const auto& u : utts) {
      const SegmentSequence s = make_segments(p, u);
      CHECK(s.segments.rows() % 2 == 1);
      CHECK(s.segments.cols() == 4);
      CHECK(s.segments.allFinite());
      CHECK(s.source_id == u.id);
    }
  }

  TEST_CASE("split, segment and manifest files round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "dgu_features_test";
    std::filesystem::create_directories(dir);
    const Inventory inv = Inventory::standard(5);
    const auto utts = make_corpus(79);
    write_split(dir / "train.dgud", utts, inv);
    const auto back = read_split(dir / "train.dgud", inv);
    REQUIRE(back.size() == utts.size());
    CHECK(back[3].id == utts[3].id);
    CHECK(back[3].hidden_phonemes == utts[3].hidden_phonemes);
    CHECK((back[3].frames - utts[3].frames).cwiseAbs().maxCoeff() < 1e-6);

    Manifest m;
    m.seed = 42;
    m.config_hash = "abc";
    m.inventory = inv;
    m.text_file = "text.txt";
    for (const auto& u : utts) m.records.push_back({"train", "train.dgud", u.id});
    write_manifest(dir / "manifest.txt", m);
    const Manifest mb = read_manifest(dir / "manifest.txt");
    CHECK(mb.seed == 42);
    CHECK(mb.records.size() == 20);
    CHECK(mb.inventory.symbols() == inv.symbols());
    CHECK(mb.inventory.symbol(mb.inventory.sil()) == "SIL");
  }
}
