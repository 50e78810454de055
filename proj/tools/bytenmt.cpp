// Copyright (c) 2026 The bytenmt Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: prepare data, induce BPE, train, translate,
// score, print corpus statistics, and run ablation grids.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training
// divergence.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "bytenmt/ablate.hpp"
#include "bytenmt/bleu.hpp"
#include "bytenmt/checkpoint.hpp"
#include "bytenmt/config.hpp"
#include "bytenmt/decode.hpp"
#include "bytenmt/pipeline.hpp"

using namespace bytenmt;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  RunConfig rc = config_path.empty() ? RunConfig() : RunConfig::from_file(config_path);
  for (const auto& kv : overrides) rc.set_from_flag(kv);
  return rc;
}

int cmd_prepare(const std::string& src, const std::string& tgt, const std::string& out_dir,
                const PrepareOptions& opts) {
  const PrepareSummary s = prepare_data(src, tgt, out_dir, opts);
  std::printf("loaded=%zu removed=%zu train=%zu valid=%zu test=%zu\n", s.loaded, s.removed,
              s.train, s.valid, s.test);
  std::printf("prepared data written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_bpe_train(const std::vector<std::string>& inputs, int merges, const std::string& model_out,
                  const std::string& vocab_out, const std::string& marker) {
  std::vector<std::string> lines;
  for (const auto& path : inputs) {
    auto l = read_lines(path);
    lines.insert(lines.end(), l.begin(), l.end());
  }
  const BpeModel model = bpe_train(lines, merges, marker);
  save_bpe(model, model_out);
  std::printf("learned %zu merges -> %s\n", model.merges.size(), model_out.c_str());
  if (!vocab_out.empty()) {
    model.vocab.save(vocab_out);
    std::printf("vocab (%d tokens) -> %s\n", model.vocab.size(), vocab_out.c_str());
  }
  return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& data_dir_flag, const std::string& out_dir) {
  RunConfig rc = load_run_config(config_path, overrides);
  const std::string data_dir = data_dir_flag.empty() ? rc.get_str("data_dir", "") : data_dir_flag;
  if (data_dir.empty()) throw UsageError("train: set data_dir in the config or pass --data-dir");

  if (rc.get_int("steps", 5000) == 0)
    std::fprintf(stderr, "warning: steps=0, writing the initialization checkpoint only\n");

  const TrainRunResult run = run_training<float>(data_dir, rc, out_dir);
  for (const auto& m : run.train.metrics)
    std::printf("step=%lld lr=%.6g train_loss=%.4f valid_loss=%.4f\n",
                static_cast<long long>(m.step), m.lr, m.train_loss, m.valid_loss);
  std::printf("best checkpoints:\n");
  for (const auto& e : run.train.best)
    std::printf("  step=%lld valid_loss=%.6f %s\n", static_cast<long long>(e.step), e.valid_loss,
                e.path.c_str());
  std::printf("averaged checkpoint -> %s\n", run.averaged_path.c_str());
  return 0;
}

int cmd_translate(const std::string& ckpt_path, const std::string& in_path,
                  const std::string& out_path, const std::string& vocab_path,
                  const std::string& bpe_path, const DecodeOptions& opts) {
  if (opts.beam < 1) throw UsageError("translate: beam size must be >= 1");
  if (opts.threads < 1) throw UsageError("translate: threads must be >= 1");
  const Checkpoint<float> ckpt = load_checkpoint<float>(ckpt_path);
  ModelParams<float> params = params_from_checkpoint(ckpt);

  Vocab vocab;
  if (params.config.scheme == Scheme::kByte) {
    vocab = Vocab::byte_vocab();
  } else {
    if (vocab_path.empty()) throw UsageError("translate: char/bpe checkpoints need --vocab");
    vocab = Vocab::load(params.config.scheme, vocab_path);
  }
  std::optional<BpeModel> bpe;
  if (params.config.scheme == Scheme::kBpe) {
    if (bpe_path.empty()) throw UsageError("translate: bpe checkpoints need --bpe-model");
    bpe = load_bpe(bpe_path);
    bpe->vocab = vocab;
  }
  if (static_cast<int32_t>(vocab.size()) != params.config.vocab_size)
    throw DataError("translate: vocab size does not match the checkpoint");

  const TranslateStats st =
      translate_file(params, vocab, bpe ? &*bpe : nullptr, in_path, out_path, opts);
  std::printf("translated %zu lines -> %s", st.lines, out_path.c_str());
  if (st.malformed) std::printf(" (%zu lines contained malformed byte output)", st.malformed);
  if (st.truncated) std::printf(" (%zu lines truncated at max length)", st.truncated);
  std::printf("\n");
  return 0;
}

int cmd_score(const std::string& hyp_path, const std::string& ref_path, const std::string& tok,
              const std::string& json_out) {
  const auto hyps = read_lines(hyp_path);
  const auto refs = read_lines(ref_path);
  const BleuReport report = corpus_bleu(hyps, refs, bleu_tokenizer_from_name(tok));
  std::printf("%s\n", report.to_line().c_str());
  if (!json_out.empty()) {
    nlohmann::json j{{"bleu", report.bleu},
                     {"precisions", report.precisions},
                     {"brevity_penalty", report.brevity_penalty},
                     {"hyp_len", report.hyp_len},
                     {"ref_len", report.ref_len},
                     {"tokenizer", bleu_tokenizer_name(report.tokenizer)}};
    std::ofstream out(json_out);
    if (!out) throw DataError("cannot write JSON report: " + json_out);
    out << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_stats(const std::string& src, const std::string& tgt, const std::string& bpe_path,
              const std::string& src_lang, const std::string& tgt_lang) {
  const ParallelCorpus corpus = load_parallel(src, tgt, src_lang, tgt_lang);
  std::optional<BpeModel> bpe;
  if (!bpe_path.empty()) bpe = load_bpe(bpe_path);
  const auto rows = corpus_stats(corpus, bpe ? &*bpe : nullptr);
  std::printf("side\tsentences\tbpe\tchar\tbyte\n");
  for (const auto& row : rows) {
    if (std::isnan(row.bpe))
      std::printf("%s\t%zu\t-\t%.1f\t%.1f\n", row.side.c_str(), corpus.size(), row.chars,
                  row.bytes);
    else
      std::printf("%s\t%zu\t%.1f\t%.1f\t%.1f\n", row.side.c_str(), corpus.size(), row.bpe,
                  row.chars, row.bytes);
  }
  return 0;
}

int cmd_ablate(const std::string& data_dir, const std::string& out_dir, ExperimentSpec spec) {
  std::filesystem::create_directories(out_dir);
  const auto results = run_ablation(data_dir, spec, out_dir);
  const std::string report = render_ablation_report(results);
  std::ofstream out(out_dir + "/ablation.tsv");
  if (!out) throw DataError("cannot write ablation report: " + out_dir + "/ablation.tsv");
  out << report;
  std::fputs(report.c_str(), stdout);
  for (const auto& r : results)
    if (!r.ok) return 2;  // grid completed but some cells failed
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"byte-level NMT toolkit: embeddingless and embedding transformers"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "clean, split, and index a parallel corpus");
  std::string p_src, p_tgt, p_out;
  PrepareOptions p_opts;
  p_opts.seed = 0;  // 0 = take BYTENMT_SEED/default later
  prepare->add_option("--src", p_src, "source-side text file")->required();
  prepare->add_option("--tgt", p_tgt, "target-side text file")->required();
  prepare->add_option("--out-dir", p_out, "output directory")->required();
  prepare->add_option("--max-bytes", p_opts.max_bytes, "length cutoff in bytes (default 800)");
  prepare->add_option("--drop-fraction", p_opts.drop_fraction,
                      "total fraction removed by cleaning (default 0.05)");
  prepare->add_option("--valid-frac", p_opts.valid_frac, "validation fraction (default 0.01)");
  prepare->add_option("--test-frac", p_opts.test_frac, "test fraction (default 0.01)");
  prepare->add_option("--seed", p_opts.seed, "split seed (default $BYTENMT_SEED or 1)");
  prepare->add_option("--bpe-merges", p_opts.bpe_merges, "also train BPE with this many merges");
  prepare->add_option("--src-lang", p_opts.src_lang, "source language id");
  prepare->add_option("--tgt-lang", p_opts.tgt_lang, "target language id");

  // bpe-train
  auto* bpe = app.add_subcommand("bpe-train", "induce a BPE merge table from text");
  std::vector<std::string> b_inputs;
  int b_merges = 10000;
  std::string b_model, b_vocab, b_marker = "@@";
  bpe->add_option("--input", b_inputs, "training text file(s)")->required();
  bpe->add_option("--merges", b_merges, "merge steps (default 10000)");
  bpe->add_option("--model-out", b_model, "output merge table")->required();
  bpe->add_option("--vocab-out", b_vocab, "output vocab file");
  bpe->add_option("--marker", b_marker, "continuation marker (default @@)");

  // train
  auto* train = app.add_subcommand("train", "train a model from a prepared data directory");
  std::string t_config, t_data_dir, t_out;
  std::vector<std::string> t_sets;
  train->add_option("--config", t_config, "key = value config file");
  train->add_option("--data-dir", t_data_dir, "prepared data directory");
  train->add_option("--out-dir", t_out, "run output directory")->required();
  train->add_option("--set", t_sets, "override config keys, key=value");

  // translate
  auto* translate = app.add_subcommand("translate", "decode a file line by line");
  std::string x_ckpt, x_in, x_out, x_vocab, x_bpe;
  DecodeOptions x_opts;
  translate->add_option("--ckpt", x_ckpt, "checkpoint file")->required();
  translate->add_option("--input", x_in, "input text file")->required();
  translate->add_option("--output", x_out, "output text file")->required();
  translate->add_option("--vocab", x_vocab, "vocab file (char/bpe schemes)");
  translate->add_option("--bpe-model", x_bpe, "BPE merge table (bpe scheme)");
  translate->add_option("--beam", x_opts.beam, "beam size (default 5)");
  translate->add_option("--alpha", x_opts.length_penalty, "length penalty (default 1.0)");
  translate->add_option("--max-len", x_opts.max_len, "generation cap (default 2*src+16)");
  translate->add_option("--threads", x_opts.threads, "decoding threads (default 1)");

  // score
  auto* score = app.add_subcommand("score", "corpus BLEU of a hypothesis file");
  std::string s_hyp, s_ref, s_tok = "13a", s_json;
  score->add_option("--hyp", s_hyp, "hypothesis file")->required();
  score->add_option("--ref", s_ref, "reference file (raw text)")->required();
  score->add_option("--tokenizer", s_tok, "13a, char, or none (default 13a)");
  score->add_option("--json", s_json, "also write a machine-readable record here");

  // stats
  auto* stats = app.add_subcommand("stats", "average sequence lengths per tokenization scheme");
  std::string st_src, st_tgt, st_bpe, st_sl = "src", st_tl = "tgt";
  stats->add_option("--src", st_src, "source-side text file")->required();
  stats->add_option("--tgt", st_tgt, "target-side text file")->required();
  stats->add_option("--bpe-model", st_bpe, "BPE merge table for the bpe column");
  stats->add_option("--src-lang", st_sl, "source language id");
  stats->add_option("--tgt-lang", st_tl, "target language id");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run a scheme x dropout x token-dropout grid");
  std::string a_data, a_out, a_config;
  std::vector<std::string> a_sets;
  ExperimentSpec a_spec;
  ablate->add_option("--data-dir", a_data, "prepared data directory")->required();
  ablate->add_option("--out-dir", a_out, "grid output directory")->required();
  ablate->add_option("--config", a_config, "base config file for every cell");
  ablate->add_option("--set", a_sets, "override base config keys, key=value");
  ablate->add_option("--schemes", a_spec.schemes,
                     "grid schemes: byte, byte-embeddingless, char, bpe");
  ablate->add_option("--dropouts", a_spec.dropouts, "model dropout grid (default 0.2)");
  ablate->add_option("--token-dropouts", a_spec.token_dropouts,
                     "token dropout grid (default 0 0.2)");
  ablate->add_option("--seeds", a_spec.seeds, "seed grid (default 1)");
  ablate->add_option("--workers", a_spec.workers, "concurrent cells (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*prepare) {
      if (p_opts.seed == 0) p_opts.seed = default_seed_from_env();
      return cmd_prepare(p_src, p_tgt, p_out, p_opts);
    }
    if (*bpe) return cmd_bpe_train(b_inputs, b_merges, b_model, b_vocab, b_marker);
    if (*train) return cmd_train(t_config, t_sets, t_data_dir, t_out);
    if (*translate) return cmd_translate(x_ckpt, x_in, x_out, x_vocab, x_bpe, x_opts);
    if (*score) return cmd_score(s_hyp, s_ref, s_tok, s_json);
    if (*stats) return cmd_stats(st_src, st_tgt, st_bpe, st_sl, st_tl);
    if (*ablate) {
      a_spec.base = load_run_config(a_config, a_sets);
      return cmd_ablate(a_data, a_out, a_spec);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 3;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
