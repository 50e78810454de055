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

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "bytenmt/bleu.hpp"
#include "bytenmt/bpe.hpp"
#include "bytenmt/checkpoint.hpp"
#include "bytenmt/config.hpp"
#include "bytenmt/corpus.hpp"
#include "bytenmt/decode.hpp"
#include "bytenmt/errors.hpp"
#include "bytenmt/train.hpp"

namespace bytenmt {

struct PrepareOptions {
  size_t max_bytes = 800;
  double drop_fraction = 0.05;
  double valid_frac = 0.01;
  double test_frac = 0.01;
  uint64_t seed = 1;
  int bpe_merges = 0;  // 0 = skip BPE
  std::string src_lang = "src";
  std::string tgt_lang = "tgt";
};

struct PrepareSummary {
  size_t loaded = 0;
  size_t removed = 0;
  size_t train = 0, valid = 0, test = 0;
};

namespace pipeline_detail {

inline void write_side(const ParallelCorpus& corpus, const std::string& base) {
  std::ofstream src(base + ".src", std::ios::binary);
  std::ofstream tgt(base + ".tgt", std::ios::binary);
  if (!src || !tgt) throw DataError("cannot write corpus split: " + base);
  for (const auto& [s, t] : corpus.pairs) {
    src << s << '\n';
    tgt << t << '\n';
  }
}

inline std::vector<std::string> side_lines(const ParallelCorpus& corpus, bool source) {
  std::vector<std::string> lines;
  lines.reserve(corpus.size());
  for (const auto& [s, t] : corpus.pairs) lines.push_back(source ? s : t);
  return lines;
}

}  // namespace pipeline_detail

// Cleans, splits, and writes a prepared data directory: train/valid/test
// splits, the cleaning report, per-scheme vocabs, and optionally a BPE
// model. Deterministic for a fixed seed.
inline PrepareSummary prepare_data(const std::string& src_path, const std::string& tgt_path,
                                   const std::string& out_dir, const PrepareOptions& opts) {
  std::filesystem::create_directories(out_dir);
  const ParallelCorpus raw = load_parallel(src_path, tgt_path, opts.src_lang, opts.tgt_lang);
  const auto [cleaned, report] = clean_corpus(raw, opts.max_bytes, opts.drop_fraction);
  write_clean_report(report, out_dir + "/clean_report.txt");
  const CorpusSplit split = split_corpus(cleaned, opts.valid_frac, opts.test_frac, opts.seed);

  pipeline_detail::write_side(split.train, out_dir + "/train");
  pipeline_detail::write_side(split.valid, out_dir + "/valid");
  pipeline_detail::write_side(split.test, out_dir + "/test");

  Vocab::byte_vocab().save(out_dir + "/vocab.byte.txt");
  std::vector<std::string> train_lines = pipeline_detail::side_lines(split.train, true);
  {
    const auto tgt_lines = pipeline_detail::side_lines(split.train, false);
    train_lines.insert(train_lines.end(), tgt_lines.begin(), tgt_lines.end());
  }
  build_char_vocab(train_lines).save(out_dir + "/vocab.char.txt");
  if (opts.bpe_merges > 0) {
    const BpeModel bpe = bpe_train(train_lines, opts.bpe_merges);
    save_bpe(bpe, out_dir + "/bpe.model");
    bpe.vocab.save(out_dir + "/vocab.bpe.txt");
  }

  std::ofstream meta(out_dir + "/prepare.meta");
  meta << "src_lang = " << opts.src_lang << "\ntgt_lang = " << opts.tgt_lang
       << "\nseed = " << opts.seed << "\nloaded = " << raw.size()
       << "\nremoved = " << report.removed.size() << "\n";

  return {raw.size(), report.removed.size(), split.train.size(), split.valid.size(),
          split.test.size()};
}

struct SchemeResources {
  Vocab vocab;
  std::optional<BpeModel> bpe;

  const BpeModel* bpe_ptr() const { return bpe ? &*bpe : nullptr; }
};

inline SchemeResources load_scheme(const std::string& data_dir, Scheme scheme) {
  SchemeResources res;
  switch (scheme) {
    case Scheme::kByte:
      res.vocab = Vocab::load(Scheme::kByte, data_dir + "/vocab.byte.txt");
      break;
    case Scheme::kChar:
      res.vocab = Vocab::load(Scheme::kChar, data_dir + "/vocab.char.txt");
      break;
    case Scheme::kBpe:
      res.vocab = Vocab::load(Scheme::kBpe, data_dir + "/vocab.bpe.txt");
      res.bpe = load_bpe(data_dir + "/bpe.model");
      res.bpe->vocab = res.vocab;
      break;
  }
  return res;
}

struct TrainRunResult {
  TrainResult train;
  std::string averaged_path;
  ModelConfig model_config;
  double final_valid_loss = 0.0;
};

// End-to-end training from a prepared directory: tokenize and batch under
// the byte budget, train, then average the retained checkpoints into
// averaged.bin.
template <typename T = float>
TrainRunResult run_training(const std::string& data_dir, const RunConfig& rc,
                            const std::string& out_dir,
                            const std::function<bool(int64_t, ModelParams<T>&)>& stop = nullptr) {
  ModelConfig mc = rc.to_model_config();
  const SchemeResources res = load_scheme(data_dir, mc.scheme);
  mc.vocab_size = res.vocab.size();
  mc.set_specials(res.vocab.specials());
  mc.validate();

  const ParallelCorpus train_corpus =
      load_parallel(data_dir + "/train.src", data_dir + "/train.tgt");
  const ParallelCorpus valid_corpus =
      load_parallel(data_dir + "/valid.src", data_dir + "/valid.tgt");
  const int64_t budget = rc.batch_bytes();
  const auto train_batches = batch_by_bytes(
      tokenize_corpus(train_corpus, mc.scheme, res.vocab, res.bpe_ptr()), budget,
      res.vocab.specials());
  const auto valid_batches = batch_by_bytes(
      tokenize_corpus(valid_corpus, mc.scheme, res.vocab, res.bpe_ptr()), budget,
      res.vocab.specials());

  const TrainConfig tc = rc.to_train_config(default_seed_from_env());
  ModelParams<T> params = ModelParams<T>::init(mc, tc.seed);
  AdamState<T> opt = AdamState<T>::init(params);

  TrainRunResult out;
  out.model_config = mc;
  out.train = train_loop(params, opt, train_batches, valid_batches, tc, out_dir, stop);

  std::vector<Checkpoint<T>> best;
  for (const auto& e : out.train.best) best.push_back(load_checkpoint<T>(e.path));
  Checkpoint<T> averaged = average_checkpoints(best);
  out.averaged_path = out_dir + "/averaged.bin";
  save_checkpoint(averaged, out.averaged_path);
  out.final_valid_loss = out.train.best.front().valid_loss;
  return out;
}

struct EvalResult {
  BleuReport bleu;
  double exact_match = 0.0;
  size_t lines = 0;
  size_t malformed = 0;
};

// Decodes the sources and scores against raw references.
template <typename T>
EvalResult evaluate_model(ModelParams<T>& params, const Vocab& vocab, const BpeModel* bpe,
                          const std::vector<std::string>& src_lines,
                          const std::vector<std::string>& ref_lines,
                          const DecodeOptions& opts = {},
                          BleuTokenizer tok = BleuTokenizer::k13a) {
  if (src_lines.size() != ref_lines.size())
    throw DataError("evaluate_model: source/reference line counts differ");
  std::vector<TokenSeq> srcs;
  srcs.reserve(src_lines.size());
  for (const auto& line : src_lines) srcs.push_back(encode_line(line, vocab.scheme(), vocab, bpe));

  std::vector<std::string> hyps;
  hyps.reserve(srcs.size());
  EvalResult result;
  if (opts.beam <= 1) {
    for (const auto& d : greedy_decode_batch(params, srcs, opts)) {
      bool malformed = false;
      hyps.push_back(detokenize_output(d.ids, vocab, &malformed));
      if (malformed) ++result.malformed;
    }
  } else {
    for (const auto& s : srcs) {
      const DecodedSeq d = beam_decode(params, s, opts);
      bool malformed = false;
      hyps.push_back(detokenize_output(d.ids, vocab, &malformed));
      if (malformed) ++result.malformed;
    }
  }

  result.lines = hyps.size();
  size_t exact = 0;
  for (size_t i = 0; i < hyps.size(); ++i)
    if (hyps[i] == ref_lines[i]) ++exact;
  result.exact_match = hyps.empty() ? 0.0 : static_cast<double>(exact) / hyps.size();
  result.bleu = corpus_bleu(hyps, ref_lines, tok);
  return result;
}

}  // namespace bytenmt
