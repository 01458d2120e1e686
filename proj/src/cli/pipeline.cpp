// src/cli/pipeline.cpp

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

#include "dgu/cli/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "dgu/adversarial/adversarial.hpp"
#include "dgu/evaluation/evaluation.hpp"
#include "dgu/features/dataset.hpp"
#include "dgu/training/silence.hpp"

namespace dgu::cli {

namespace fs = std::filesystem;

namespace {

const char* const kSplits[] = {"train", "dev", "eval"};

void require(const fs::path& file) {
  if (!fs::exists(file)) throw MissingArtifactError(file);
}

void require_hash(const std::string& found, const std::string& expected, const fs::path& file) {
  if (found != expected)
    throw HashMismatchError(file.string() + " was built with config hash " + found + ", expected " + expected);
}

std::string sentence_key(const lm::Sentence& s) {
  std::string key;
  for (const PhonemeIds& w : s)
    for (int p : w) key += std::to_string(p) + ",";
  return key;
}

features::Manifest load_manifest(const RunConfig& cfg, const Layout& L) {
  require(L.manifest());
  features::Manifest m = features::read_manifest(L.manifest());
  require_hash(m.config_hash, data_hash(cfg), L.manifest());
  return m;
}

std::vector<features::SegmentSequence> load_segments(const Layout& L, const std::string& split) {
  require(L.segments(split));
  return features::read_segments(L.segments(split));
}

lm::MaskedLm load_lm(const RunConfig& cfg, const Layout& L) {
  require(L.lm());
  require(L.lm().string() + ".txt");
  require_hash(training::read_checkpoint_sidecar(L.lm()).config_hash, lm_hash(cfg), L.lm());
  return lm::MaskedLm::load(L.lm());
}

std::vector<Matrix> matrices_of(const std::vector<features::SegmentSequence>& segs) {
  std::vector<Matrix> out;
  out.reserve(segs.size());
  for (const auto& s : segs) out.push_back(s.segments);
  return out;
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void write_text(const fs::path& path, const std::vector<lm::Sentence>& text, const features::Inventory& inv) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const lm::Sentence& s : text) {
    for (std::size_t w = 0; w < s.size(); ++w) {
      if (w > 0) out << " | ";
      out << inv.to_string(s[w]);
    }
    out << '\n';
  }
}

std::vector<lm::Sentence> read_text(const fs::path& path, const features::Inventory& inv) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::vector<lm::Sentence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    lm::Sentence s;
    std::size_t start = 0;
    while (true) {
      const auto bar = line.find('|', start);
      const PhonemeIds word = inv.parse(line.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
      if (word.empty()) throw FormatError(path.string() + ": empty word");
      for (int p : word)
        if (p == inv.sil()) throw FormatError(path.string() + ": SIL inside the text corpus");
      s.push_back(word);
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw FormatError(path.string() + ": empty text corpus");
  return out;
}

void cmd_gen_data(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const Layout L{out};
  fs::create_directories(out);
  const std::uint64_t seed = cfg.seed();
  const GrammarConfig gc = cfg.grammar();
  const DataSizes sizes = cfg.sizes();
  const features::Inventory inv = features::Inventory::standard(gc.phonemes);

  Rng grammar_rng = make_rng(seed, "gen-data/grammar");
  const PhonotacticGrammar grammar(gc, grammar_rng);
  Rng embed_rng = make_rng(seed, "gen-data/embeddings");
  const Matrix embeddings = features::make_phoneme_embeddings(inv.size(), cfg.synth().d_raw, embed_rng);

  Rng audio_rng = make_rng(seed, "gen-data/audio");
  Rng sil_rng = make_rng(seed, "gen-data/silence");
  Rng synth_rng = make_rng(seed, "gen-data/frames");
  std::set<std::string> spoken;
  std::map<std::string, std::vector<features::Utterance>> splits;
  const int counts[] = {sizes.train, sizes.dev, sizes.eval};
  features::Manifest manifest;
  for (int s = 0; s < 3; ++s) {
    auto& utts = splits[kSplits[s]];
    for (int i = 0; i < counts[s]; ++i) {
      const lm::Sentence sentence = grammar.sample(audio_rng);
      spoken.insert(sentence_key(sentence));
      char id[32];
      std::snprintf(id, sizeof(id), "%s%05d", kSplits[s], i);
      const PhonemeIds hidden = training::silence_insert(sentence, sizes.p_sil, inv.sil(), sil_rng);
      utts.push_back(features::synth_features(id, hidden, embeddings, cfg.synth(), synth_rng));
      manifest.records.push_back({kSplits[s], L.split(kSplits[s]).filename().string(), id});
    }
  }

  Rng text_rng = make_rng(seed, "gen-data/text");
  std::vector<lm::Sentence> text;
  const long max_draws = 1000L * sizes.text;
  for (long draws = 0; static_cast<int>(text.size()) < sizes.text; ++draws) {
    if (draws >= max_draws) throw ConfigError("grammar too small to draw text disjoint from the spoken side");
    lm::Sentence s = grammar.sample(text_rng);
    if (!spoken.count(sentence_key(s))) text.push_back(std::move(s));
  }

  Rng feat_rng = make_rng(seed, "gen-data/features");
  const features::FeaturePipeline pipe = features::fit_pipeline(splits["train"], cfg.pipeline(), feat_rng);
  for (const char* name : kSplits) {
    features::write_split(L.split(name), splits[name], inv);
    std::vector<features::SegmentSequence> segs;
    for (const auto& u : splits[name]) segs.push_back(features::make_segments(pipe, u));
    features::write_segments(L.segments(name), segs);
  }
  write_text(L.text(), text, inv);

  manifest.seed = seed;
  manifest.config_hash = data_hash(cfg);
  manifest.inventory = inv;
  manifest.text_file = L.text().filename().string();
  features::write_manifest(L.manifest(), manifest);
}

void cmd_train_lm(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const Layout L{out};
  const features::Manifest m = load_manifest(cfg, L);
  require(L.text());
  const std::vector<lm::Sentence> text = read_text(L.text(), m.inventory);
  // The LM sees text with silences, as references will.
  Rng sil_rng = make_rng(cfg.seed(), "train-lm/silence");
  std::vector<PhonemeIds> corpus;
  for (const lm::Sentence& s : text)
    corpus.push_back(training::silence_insert(s, cfg.get_double("train.p_sil"), m.inventory.sil(), sil_rng));
  Rng rng = make_rng(cfg.seed(), "train-lm");
  const lm::MlmConfig mc = cfg.mlm();
  const lm::MaskedLm model = lm::train_mlm(corpus, m.inventory.size(), mc, rng);
  model.save(L.lm());
  training::write_sidecar(L.lm(), lm_hash(cfg), mc.steps);
}

void cmd_sample_refs(const RunConfig& cfg, const fs::path& out, const training::Ablations& ablations, int threads) {
  cfg.validate();
  const Layout L{out};
  const features::Manifest m = load_manifest(cfg, L);
  const lm::RefMode mode = ref_mode(ablations);
  std::optional<lm::MaskedLm> model;
  if (mode != lm::RefMode::kCorpus) model = load_lm(cfg, L);
  require(L.text());
  const std::vector<lm::Sentence> text = read_text(L.text(), m.inventory);
  const auto segs = load_segments(L, "train");
  std::vector<std::string> ids;
  std::map<std::string, int> targets;
  for (const auto& s : segs) {
    ids.push_back(s.source_id);
    targets[s.source_id] = static_cast<int>(s.segments.rows());
  }
  lm::RefPoolOptions opt = cfg.ref_options(mode);
  opt.threads = std::max(1, threads);
  lm::RefPool pool = lm::build_ref_pool(model ? &*model : nullptr, text, m.inventory.sil(), ids, targets, opt,
                                        derive_seed(cfg.seed(), "sample-refs/" + ref_mode_name(mode)));
  pool.config_hash = refs_hash(cfg, mode);
  fs::create_directories(L.refs(mode).parent_path());
  lm::write_ref_pool(L.refs(mode), pool);
}

TrainSummary cmd_train(const RunConfig& cfg, const fs::path& out, const training::Ablations& ablations) {
  cfg.validate();
  const Layout L{out};
  const features::Manifest m = load_manifest(cfg, L);
  const lm::MaskedLm model = load_lm(cfg, L);
  const lm::RefMode mode = ref_mode(ablations);
  require(L.refs(mode));
  const lm::RefPool pool = lm::read_ref_pool(L.refs(mode));
  require_hash(pool.config_hash, refs_hash(cfg, mode), L.refs(mode));
  const auto train_segs = load_segments(L, "train");
  const auto dev_segs = load_segments(L, "dev");

  training::TrainData data;
  for (const auto& s : train_segs) data.ids.push_back(s.source_id);
  data.segments = matrices_of(train_segs);
  data.refs = &pool;
  const std::vector<Matrix> dev = matrices_of(dev_segs);

  training::TrainState state(cfg.train(m.inventory.size(), ablations));
  training::train(state, data, dev, &model);

  const fs::path dir = L.run(ablations);
  fs::create_directories(dir);
  const std::string hash = train_hash(cfg, ablations);
  training::write_metrics_csv(dir / "metrics.csv", state.history);
  training::write_sidecar(dir / "metrics.csv", hash, state.step);
  for (std::size_t e = 0; e < state.snapshots.size(); ++e) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch%03zu.dguw", e + 1);
    training::save_checkpoint(dir / name, state.snapshots[e], hash, state.checkpoints[e].step);
  }
  const training::Selection sel = training::select_checkpoint(state.checkpoints, state.cfg.usage_floor);
  const training::CheckpointEval& chosen = state.checkpoints[sel.index];
  training::save_checkpoint(dir / "selected.dguw", state.snapshots[sel.index], hash, chosen.step);
  if (sel.fallback)
    std::cerr << "warning stage=train kind=usage-floor detail=\"no checkpoint reached usage "
              << state.cfg.usage_floor << "; selected the widest one\"\n";

  TrainSummary sum;
  sum.selected_epoch = sel.index + 1;
  sum.selected_step = chosen.step;
  sum.fallback = sel.fallback;
  sum.lm_nll = chosen.lm_nll;
  sum.vocab_usage = chosen.vocab_usage;
  sum.steps = state.step;
  sum.truncated_pairs = state.truncated_pairs;

  std::ofstream info(dir / "selection.txt");
  info << "config_hash=" << hash << "\nepoch=" << sum.selected_epoch << "\nstep=" << sum.selected_step
       << "\nfallback=" << (sum.fallback ? 1 : 0) << "\nlm_nll=" << (sum.lm_nll ? number(*sum.lm_nll) : "")
       << "\nvocab_usage=" << number(sum.vocab_usage) << "\ntruncated_pairs=" << sum.truncated_pairs << '\n';
  return sum;
}

EvalSummary cmd_evaluate(const RunConfig& cfg, const fs::path& out, const training::Ablations& ablations,
                         const std::optional<fs::path>& checkpoint, const std::string& split) {
  cfg.validate();
  const Layout L{out};
  const features::Manifest m = load_manifest(cfg, L);
  const fs::path dir = L.run(ablations);
  const fs::path ckpt = checkpoint ? *checkpoint : dir / "selected.dguw";
  require(ckpt);
  require(ckpt.string() + ".txt");
  const std::string hash = train_hash(cfg, ablations);
  require_hash(training::read_checkpoint_sidecar(ckpt).config_hash, hash, ckpt);

  training::TrainConfig tc = cfg.train(m.inventory.size(), ablations);
  const adversarial::NetConfig net = tc.effective_net();
  const ParamStore gen = load_weights(ckpt);
  if (split != "train" && split != "dev" && split != "eval") throw ConfigError("unknown split " + split);
  require(L.split(split));
  const std::vector<features::Utterance> utts = features::read_split(L.split(split), m.inventory);
  const auto segs = load_segments(L, split);
  if (segs.size() != utts.size()) throw FormatError(split + " split and segment file disagree in size");

  const int sil = m.inventory.sil();
  EagerContext ctx(gen);
  std::vector<PhonemeIds> hyps, refs;
  std::vector<int> lengths;
  std::vector<evaluation::ReportRow> rows;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (segs[i].source_id != utts[i].id) throw FormatError(split + " split and segment file disagree in order");
    const Matrix output = adversarial::generate(ctx, net, segs[i].segments);
    PhonemeIds ref;
    for (int p : utts[i].hidden_phonemes)
      if (p != sil) ref.push_back(p);
    hyps.push_back(evaluation::decode(output, sil));
    lengths.push_back(static_cast<int>(output.rows()));
    rows.push_back({utts[i].id, evaluation::edit_distance(hyps.back(), ref), ref.size()});
    refs.push_back(std::move(ref));
  }
  EvalSummary sum;
  sum.per = evaluation::per(hyps, refs);
  Rng rng = make_rng(cfg.seed(), "evaluate/baseline");
  sum.baseline_per =
      evaluation::random_baseline_per(lengths, refs, m.inventory.size(), sil, cfg.baseline_trials(), rng);

  fs::create_directories(dir);
  const std::string report = split == "eval" ? "report.csv" : "report_" + split + ".csv";
  evaluation::write_report(dir / report, rows);
  std::ofstream info(dir / (report + ".txt"));
  info << "config_hash=" << hash << "\ncheckpoint=" << ckpt.filename().string() << "\nper=" << number(sum.per)
       << "\nbaseline_per=" << number(sum.baseline_per) << '\n';
  return sum;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const fs::path& out, const std::vector<std::string>& which,
                                    int threads) {
  cfg.validate();
  std::vector<std::string> names = which.empty() ? training::ablation_names() : which;
  std::vector<training::Ablations> variants = {training::Ablations{}};
  for (const std::string& n : names) {
    training::Ablations a;
    training::enable_ablation(a, n);
    variants.push_back(a);
  }
  const Layout L{out};
  std::vector<AblationRow> rows;
  for (const training::Ablations& a : variants) {
    // Pools are deterministic in their hash, so a matching one is reused.
    const lm::RefMode mode = ref_mode(a);
    if (!fs::exists(L.refs(mode)) || lm::read_ref_pool(L.refs(mode)).config_hash != refs_hash(cfg, mode))
      cmd_sample_refs(cfg, out, a, threads);
    AblationRow row;
    row.variant = a.label();
    row.train = cmd_train(cfg, out, a);
    row.eval = cmd_evaluate(cfg, out, a);
    rows.push_back(row);
  }

  const fs::path dir = out / "ablate";
  fs::create_directories(dir);
  std::ofstream csv(dir / "comparison.csv");
  csv << "variant,per,baseline_per,lm_nll,vocab_usage,selected_epoch,fallback,full_per_leq\n";
  const double full = rows.front().eval.per;
  for (const AblationRow& r : rows) {
    csv << r.variant << ',' << number(r.eval.per) << ',' << number(r.eval.baseline_per) << ','
        << (r.train.lm_nll ? number(*r.train.lm_nll) : "") << ',' << number(r.train.vocab_usage) << ','
        << r.train.selected_epoch << ',' << (r.train.fallback ? 1 : 0) << ',';
    if (r.variant != "full") csv << (full <= r.eval.per ? 1 : 0);
    csv << '\n';
  }
  training::write_sidecar(dir / "comparison.csv", cfg.hash({""}), 0);
  return rows;
}

}  // namespace dgu::cli
