// src/phoneme_lm/phoneme_lm.cpp

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

#include "dgu/phoneme_lm/phoneme_lm.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <thread>

#include "dgu/numerics/binary_io.hpp"
#include "dgu/training/silence.hpp"

namespace dgu::lm {

namespace {

Matrix scaled_normal(Index rows, Index cols, double sd, Rng& rng) {
  return standard_normal(rows, cols, rng) * sd;
}

void add_dense(ParamStore& ps, const std::string& prefix, Index in, Index out, Rng& rng) {
  ps.add(prefix + ".w", scaled_normal(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng));
  ps.add(prefix + ".b", Matrix::Zero(1, out));
}

void add_norm(ParamStore& ps, const std::string& prefix, Index width) {
  ps.add(prefix + ".gain", Matrix::Ones(1, width));
  ps.add(prefix + ".bias", Matrix::Zero(1, width));
}

int draw(const RowVector& p, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

PhonemeIds mask_positions(const PhonemeIds& ids, double frac, int mask_id, Rng& rng,
                          std::vector<int>& masked, double noise = 0.0) {
  masked.clear();
  std::bernoulli_distribution coin(frac);
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (coin(rng)) masked.push_back(static_cast<int>(i));
  if (masked.empty())
    masked.push_back(std::uniform_int_distribution<int>(0, static_cast<int>(ids.size()) - 1)(rng));
  PhonemeIds out = ids;
  if (noise > 0.0) {
    // Random substitutions in the visible context teach the model to
    // read past errors, which keeps Gibbs chains from freezing on them.
    std::bernoulli_distribution flip(noise);
    std::uniform_int_distribution<int> any(0, mask_id - 1);
    for (int& id : out)
      if (flip(rng)) id = any(rng);
  }
  for (int m : masked) out[static_cast<std::size_t>(m)] = mask_id;
  return out;
}

}  // namespace

MaskedLm::MaskedLm(int vocab, const MlmConfig& cfg, Rng& rng)
    : vocab_(vocab), width_(cfg.width), heads_(cfg.heads), blocks_(cfg.blocks), ffn_(cfg.ffn) {
  if (vocab < 1) throw ConfigError("LM vocabulary must be nonempty");
  if (cfg.width < 2 || cfg.heads < 1 || cfg.width % cfg.heads != 0 || cfg.blocks < 0 || cfg.ffn < 1)
    throw ConfigError("LM width must be a positive multiple of the head count");
  params_.add("lm.embed", scaled_normal(vocab + 1, width_, 1.0, rng));
  for (int b = 0; b < blocks_; ++b) {
    const std::string p = "lm.block" + std::to_string(b);
    add_norm(params_, p + ".ln1", width_);
    for (const char* n : {".q", ".k", ".v", ".o"}) add_dense(params_, p + n, width_, width_, rng);
    add_norm(params_, p + ".ln2", width_);
    add_dense(params_, p + ".ff1", width_, ffn_, rng);
    add_dense(params_, p + ".ff2", ffn_, width_, rng);
  }
  add_norm(params_, "lm.lnf", width_);
  params_.add("lm.out.w", Matrix::Zero(width_, vocab));
  params_.add("lm.out.b", Matrix::Zero(1, vocab));
}

Matrix MaskedLm::conditionals(const PhonemeIds& ids) const {
  EagerContext ctx(params_);
  return softmax_rows(logits(ctx, ids));
}

void MaskedLm::save(const std::filesystem::path& path) const {
  NamedMatrices out;
  Matrix meta(1, 5);
  meta << vocab_, width_, heads_, blocks_, ffn_;
  out.emplace_back("lm.meta", meta);
  for (const auto& [name, e] : params_.entries()) out.emplace_back(name, e.value);
  save_named_matrices(path, out);
}

MaskedLm MaskedLm::load(const std::filesystem::path& path) {
  NamedMatrices in = load_named_matrices(path);
  auto meta = std::find_if(in.begin(), in.end(), [](const auto& e) { return e.first == "lm.meta"; });
  if (meta == in.end() || meta->second.size() != 5)
    throw FormatError(path.string() + ": not a language model weight file");
  MaskedLm lm;
  lm.vocab_ = static_cast<int>(meta->second(0, 0));
  lm.width_ = static_cast<int>(meta->second(0, 1));
  lm.heads_ = static_cast<int>(meta->second(0, 2));
  lm.blocks_ = static_cast<int>(meta->second(0, 3));
  lm.ffn_ = static_cast<int>(meta->second(0, 4));
  for (auto& [name, m] : in)
    if (name != "lm.meta") lm.params_.add(name, std::move(m));
  return lm;
}

Matrix sinusoidal_positions(Index length, Index width) {
  Matrix pe(length, width);
  for (Index p = 0; p < length; ++p)
    for (Index i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      pe(p, i) = (i % 2 == 0) ? std::sin(static_cast<double>(p) * rate) : std::cos(static_cast<double>(p) * rate);
    }
  return pe;
}

MaskedLm train_mlm(const std::vector<PhonemeIds>& corpus, int vocab, const MlmConfig& cfg, Rng& rng,
                   MlmTrace* trace) {
  if (corpus.empty()) throw InputError("train_mlm: empty corpus");
  if (!(cfg.mask_frac > 0.0 && cfg.mask_frac < 1.0)) throw ConfigError("mask fraction must lie in (0, 1)");
  for (const auto& s : corpus)
    if (s.empty()) throw InputError("train_mlm: empty sentence in corpus");
  MaskedLm lm(vocab, cfg, rng);
  AdamOptions adam;
  adam.lr = cfg.lr;
  adam.beta1 = 0.9;
  adam.beta2 = 0.98;
  std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
  std::vector<int> masked;
  for (int step = 0; step < cfg.steps; ++step) {
    Tape tape;
    TapeContext ctx(tape, lm.params(), true);
    std::vector<Var> terms;
    std::size_t count = 0;
    for (int b = 0; b < cfg.batch; ++b) {
      const PhonemeIds& ids = corpus[pick(rng)];
      const PhonemeIds input = mask_positions(ids, cfg.mask_frac, lm.mask_id(), rng, masked, cfg.context_noise);
      Matrix target = Matrix::Zero(static_cast<Index>(ids.size()), vocab);
      for (int m : masked) target(m, ids[static_cast<std::size_t>(m)]) = 1.0;
      count += masked.size();
      terms.push_back(sum(mul(log_softmax_rows(lm.logits(ctx, input)), tape.constant(std::move(target)))));
    }
    Var total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
    const Var loss = scale(total, -1.0 / static_cast<double>(count));
    tape.backward(loss, lm.params());
    adam_step(lm.params(), adam);
    if (trace) trace->loss.push_back(loss.scalar());
  }
  return lm;
}

MaskedEval evaluate_masked(const MaskedLm& lm, const std::vector<PhonemeIds>& corpus, double mask_frac,
                           Rng& rng) {
  if (corpus.empty()) throw InputError("evaluate_masked: empty corpus");
  double nll = 0.0, hits = 0.0;
  std::size_t count = 0;
  std::vector<int> masked;
  for (const auto& ids : corpus) {
    const Matrix p = lm.conditionals(mask_positions(ids, mask_frac, lm.mask_id(), rng, masked));
    for (int m : masked) {
      const int truth = ids[static_cast<std::size_t>(m)];
      nll -= std::log(p(m, truth));
      Index best;
      p.row(m).maxCoeff(&best);
      hits += (best == truth) ? 1.0 : 0.0;
      ++count;
    }
  }
  return {nll / static_cast<double>(count), hits / static_cast<double>(count)};
}

Sample sample_with_length(const MaskedLm& lm, int target_len, int sweeps, Rng& rng,
                          const std::optional<PhonemeIds>& init) {
  if (target_len < 1) throw InputError("sample_with_length: target length must be positive");
  if (sweeps < 1) throw ConfigError("sample_with_length: sweeps must be positive");
  Sample s;
  if (init) {
    if (static_cast<int>(init->size()) != target_len)
      throw InputError("sample_with_length: initial sequence has the wrong length");
    s.ids = *init;
  } else {
    std::uniform_int_distribution<int> uni(0, lm.vocab() - 1);
    s.ids.resize(static_cast<std::size_t>(target_len));
    for (int& id : s.ids) id = uni(rng);
  }
  s.dense = Matrix::Zero(target_len, lm.vocab());
  std::vector<int> order(static_cast<std::size_t>(target_len));
  std::iota(order.begin(), order.end(), 0);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int pos : order) {
      PhonemeIds masked = s.ids;
      masked[static_cast<std::size_t>(pos)] = lm.mask_id();
      const Matrix p = lm.conditionals(masked);
      s.dense.row(pos) = p.row(pos);
      s.ids[static_cast<std::size_t>(pos)] = draw(p.row(pos), rng);
    }
  }
  return s;
}

double nll_score(const MaskedLm& lm, const PhonemeIds& ids) {
  if (ids.empty()) throw InputError("nll_score: empty sequence");
  for (int id : ids)
    if (id < 0 || id >= lm.vocab()) throw InputError("nll_score: unknown phoneme id " + std::to_string(id));
  double total = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    PhonemeIds masked = ids;
    masked[i] = lm.mask_id();
    const Matrix p = lm.conditionals(masked);
    total -= std::log(p(static_cast<Index>(i), ids[i]));
  }
  return total / static_cast<double>(ids.size());
}

namespace {

RefEntry one_reference(const MaskedLm* lm, const std::vector<Sentence>& corpus, int sil, int target,
                       const RefPoolOptions& opt, Rng& rng) {
  const Sentence& seed = corpus[std::uniform_int_distribution<std::size_t>(0, corpus.size() - 1)(rng)];
  PhonemeIds seq = training::silence_insert(seed, opt.p_sil, sil, rng);
  if (seq.empty()) throw InputError("build_ref_pool: empty corpus sentence");
  if (opt.mode == RefMode::kCorpus) {
    const int vocab = lm ? lm->vocab() : sil + 1;
    RefEntry e{seq, Matrix::Zero(static_cast<Index>(seq.size()), vocab)};
    for (std::size_t i = 0; i < seq.size(); ++i) e.dense(static_cast<Index>(i), seq[i]) = 1.0;
    return e;
  }
  if (opt.mode == RefMode::kLengthGuided) {
    // Too short: continue with further corpus sentences, joined like words.
    const auto len = static_cast<std::size_t>(target);
    std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
    std::bernoulli_distribution joiner(opt.p_sil);
    while (seq.size() < len) {
      if (joiner(rng)) seq.push_back(sil);
      const PhonemeIds more = training::silence_insert(corpus[pick(rng)], opt.p_sil, sil, rng);
      seq.insert(seq.end(), more.begin(), more.end());
    }
    seq.resize(len);
  }
  Sample s = sample_with_length(*lm, static_cast<int>(seq.size()), opt.sweeps, rng, seq);
  return {std::move(s.ids), std::move(s.dense)};
}

}  // namespace

RefPool build_ref_pool(const MaskedLm* lm, const std::vector<Sentence>& corpus, int sil,
                       const std::vector<std::string>& utterance_ids,
                       const std::map<std::string, int>& length_targets, const RefPoolOptions& opt,
                       std::uint64_t seed) {
  if (opt.a < 1 || opt.epochs < 1) throw ConfigError("build_ref_pool: a and E must be positive");
  if (corpus.empty()) throw InputError("build_ref_pool: empty text corpus");
  if (opt.mode != RefMode::kCorpus && lm == nullptr)
    throw InputError("build_ref_pool: language model required for sampling");
  if (lm && sil >= lm->vocab()) throw InputError("build_ref_pool: silence id outside LM vocabulary");
  std::vector<int> targets;
  for (const auto& id : utterance_ids) {
    auto it = length_targets.find(id);
    if (it == length_targets.end()) throw InputError("build_ref_pool: no length target for " + id);
    if (it->second < 1) throw InputError("build_ref_pool: nonpositive length target for " + id);
    targets.push_back(it->second);
  }

  const std::size_t n = utterance_ids.size();
  const int per_utt = opt.a * opt.epochs;
  std::vector<std::vector<RefEntry>> results(n);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t u = begin; u < n; u += stride) {
      Rng rng = make_rng(seed, "refpool/" + utterance_ids[u]);
      auto& out = results[u];
      out.reserve(static_cast<std::size_t>(per_utt));
      for (int k = 0; k < per_utt; ++k) out.push_back(one_reference(lm, corpus, sil, targets[u], opt, rng));
    }
  };
  const std::size_t threads = static_cast<std::size_t>(std::max(1, opt.threads));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          work(t, threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  RefPool pool;
  for (std::size_t u = 0; u < n; ++u) pool.entries[utterance_ids[u]] = std::move(results[u]);
  return pool;
}

void write_ref_pool(const std::filesystem::path& path, const RefPool& pool) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  io::write_magic(out, "DGUR");
  io::write_string(out, pool.config_hash);
  io::write_u32(out, static_cast<std::uint32_t>(pool.entries.size()));
  for (const auto& [id, entries] : pool.entries) {
    io::write_string(out, id);
    io::write_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
      io::write_u32(out, static_cast<std::uint32_t>(e.ids.size()));
      for (int p : e.ids) io::write_u32(out, static_cast<std::uint32_t>(p));
      io::write_matrix(out, e.dense);
    }
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

RefPool read_ref_pool(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  io::expect_header(in, "DGUR", path.string());
  RefPool pool;
  pool.config_hash = io::read_string(in);
  const std::uint32_t n = io::read_u32(in);
  for (std::uint32_t u = 0; u < n; ++u) {
    std::string id = io::read_string(in);
    std::vector<RefEntry> entries(io::read_u32(in));
    for (auto& e : entries) {
      e.ids.resize(io::read_u32(in));
      for (int& p : e.ids) p = static_cast<int>(io::read_u32(in));
      e.dense = io::read_matrix(in);
      if (e.dense.rows() != static_cast<Index>(e.ids.size()))
        throw FormatError(path.string() + ": reference length mismatch for " + id);
    }
    pool.entries.emplace(std::move(id), std::move(entries));
  }
  return pool;
}

}  // namespace dgu::lm
