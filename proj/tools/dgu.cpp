// tools/dgu.cpp

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

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dgu/cli/pipeline.hpp"

namespace {

using namespace dgu;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "dgu_out";
  std::vector<std::string> ablate;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string split = "eval";
};

int threads_from_env() {
  const char* v = std::getenv("DGU_THREADS");
  if (!v || !*v) return 1;
  const int n = std::atoi(v);
  if (n < 1) throw ConfigError("DGU_THREADS must be a positive integer");
  return n;
}

cli::RunConfig load(const Options& o) {
  cli::RunConfig cfg = o.config.empty() ? cli::RunConfig() : cli::RunConfig::from_file(o.config);
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  cfg.validate();
  return cfg;
}

training::Ablations ablations_of(const Options& o) {
  training::Ablations a;
  for (const std::string& n : o.ablate) training::enable_ablation(a, n);
  return a;
}

std::string quoted(std::string s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

int fail(const std::string& stage, const char* kind, int code, const std::string& message) {
  std::cerr << "error stage=" << stage << " kind=" << kind << " message=" << quoted(message) << '\n';
  return code;
}

int run(const std::string& stage, const Options& o) {
  const cli::RunConfig cfg = load(o);
  const int threads = threads_from_env();
  if (stage == "gen-data") {
    cli::cmd_gen_data(cfg, o.out);
  } else if (stage == "train-lm") {
    cli::cmd_train_lm(cfg, o.out);
  } else if (stage == "sample-refs") {
    cli::cmd_sample_refs(cfg, o.out, ablations_of(o), threads);
  } else if (stage == "train") {
    const auto s = cli::cmd_train(cfg, o.out, ablations_of(o));
    std::cout << "train steps=" << s.steps << " selected_epoch=" << s.selected_epoch
              << " vocab_usage=" << s.vocab_usage << " lm_nll=" << (s.lm_nll ? std::to_string(*s.lm_nll) : "")
              << " fallback=" << s.fallback << '\n';
  } else if (stage == "evaluate") {
    std::optional<std::filesystem::path> ckpt;
    if (!o.checkpoint.empty()) ckpt = o.checkpoint;
    const auto s = cli::cmd_evaluate(cfg, o.out, ablations_of(o), ckpt, o.split);
    std::cout << "evaluate per=" << s.per << " baseline_per=" << s.baseline_per << '\n';
  } else if (stage == "ablate") {
    for (const auto& r : cli::cmd_ablate(cfg, o.out, o.ablate, threads))
      std::cout << "ablate variant=" << r.variant << " per=" << r.eval.per << " baseline_per=" << r.eval.baseline_per
                << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-GAN unsupervised phoneme recognition, desk-scale pipeline"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  const std::vector<std::pair<std::string, std::string>> stages = {
      {"gen-data", "synthesize the dataset, text corpus and segment features"},
      {"train-lm", "train the masked phoneme language model"},
      {"sample-refs", "build the reference pool"},
      {"train", "adversarial training with checkpoint selection"},
      {"evaluate", "score a checkpoint on a held-out split"},
      {"ablate", "full model and ablations, with a comparison CSV"},
  };
  for (const auto& [name, help] : stages) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--set", o.overrides, "override one config key, KEY=VALUE");
    if (name == "sample-refs" || name == "train" || name == "evaluate" || name == "ablate")
      sub->add_option("--ablate", o.ablate, "ablation: no_bert, no_length, no_tdisc, no_unet");
    if (name == "evaluate") {
      sub->add_option("--checkpoint", o.checkpoint, "weights file (default: selected)");
      sub->add_option("--split", o.split, "train, dev or eval")->capture_default_str();
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("cli", "usage", 2, e.what());
  }
  const std::string stage = app.get_subcommands().front()->get_name();
  if (app.get_subcommands().front()->count("--seed")) o.seed = seed;
  try {
    return run(stage, o);
  } catch (const ConfigError& e) {
    return fail(stage, "config", 2, e.what());
  } catch (const cli::MissingArtifactError& e) {
    return fail(stage, "missing-artifact", 3, e.what());
  } catch (const cli::HashMismatchError& e) {
    return fail(stage, "hash-mismatch", 4, e.what());
  } catch (const ProvisioningError& e) {
    return fail(stage, "provisioning", 5, e.what());
  } catch (const training::DivergenceError& e) {
    return fail(stage, "divergence", 6, e.what());
  } catch (const InputError& e) {
    return fail(stage, "input", 7, e.what());
  } catch (const DimensionError& e) {
    return fail(stage, "input", 7, e.what());
  } catch (const FormatError& e) {
    return fail(stage, "format", 7, e.what());
  } catch (const std::exception& e) {
    return fail(stage, "internal", 1, e.what());
  }
}
