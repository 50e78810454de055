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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "bytenmt/bpe.hpp"
#include "bytenmt/corpus.hpp"
#include "bytenmt/errors.hpp"
#include "bytenmt/model.hpp"
#include "bytenmt/tokenize.hpp"
#include "bytenmt/vocab.hpp"

namespace bytenmt {

struct DecodeOptions {
  int beam = 5;
  double length_penalty = 1.0;  // hypotheses ranked by score / len^alpha
  int max_len = 0;              // 0 = 2 * source token count + 16
  int threads = 1;
};

struct DecodedSeq {
  TokenSeq ids;  // content tokens only, no BOS/EOS
  double score = 0.0;
  bool truncated = false;
};

namespace decode_detail {

inline int effective_max_len(const DecodeOptions& opts, size_t src_tokens, int model_max_len) {
  const int by_src = 2 * static_cast<int>(src_tokens) + 16;
  int limit = opts.max_len > 0 ? opts.max_len : by_src;
  // leave room for BOS in the decoder window
  return std::min(limit, model_max_len - 1);
}

// Log-probabilities of the next token for every (src, prefix) row, with
// ids >= valid vocab masked to -inf so non-tokens are never emitted.
// prefixes must share one length and include BOS.
template <typename T>
Tensor<double> next_logprobs(ModelParams<T>& params,
                             const std::vector<const std::vector<int32_t>*>& srcs,
                             const std::vector<std::vector<int32_t>>& prefixes) {
  const ModelConfig& c = params.config;
  const int bsz = static_cast<int>(srcs.size());
  const int tgt_len = static_cast<int>(prefixes.front().size());
  Batch batch;
  batch.batch_size = bsz;
  batch.tgt_len = tgt_len;
  for (const auto* s : srcs) batch.src_len = std::max(batch.src_len, static_cast<int>(s->size()));
  batch.src_ids.assign(static_cast<size_t>(bsz) * batch.src_len, c.pad_id);
  batch.dec_in_ids.assign(static_cast<size_t>(bsz) * tgt_len, c.pad_id);
  for (int b = 0; b < bsz; ++b) {
    std::copy(srcs[b]->begin(), srcs[b]->end(), batch.src_ids.begin() + b * batch.src_len);
    std::copy(prefixes[b].begin(), prefixes[b].end(), batch.dec_in_ids.begin() + b * tgt_len);
    batch.src_lens.push_back(static_cast<int>(srcs[b]->size()));
    batch.tgt_lens.push_back(tgt_len);
  }

  Graph<T> g;
  BoundParams<T> bp = bind_params(g, params, /*with_grad=*/false);
  Var<T> logits = transformer_forward(bp, batch, /*train=*/false);
  const Tensor<T>& z = logits.value();

  Tensor<double> lp(bsz, c.vocab_size);
  for (int b = 0; b < bsz; ++b) {
    const T* row = z.row_ptr(b * tgt_len + (tgt_len - 1));
    double mx = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < c.vocab_size; ++v) mx = std::max(mx, static_cast<double>(row[v]));
    double denom = 0.0;
    for (int v = 0; v < c.vocab_size; ++v) denom += std::exp(static_cast<double>(row[v]) - mx);
    const double lse = mx + std::log(denom);
    for (int v = 0; v < c.vocab_size; ++v) lp(b, v) = static_cast<double>(row[v]) - lse;
  }
  return lp;
}

inline int argmax_row(const Tensor<double>& lp, int row) {
  int best = 0;
  for (int v = 1; v < lp.cols; ++v)
    if (lp(row, v) > lp(row, best)) best = v;
  return best;
}

}  // namespace decode_detail

// Greedy decoding of many sources at once; finished sentences drop out of
// the batch. Deterministic: argmax ties resolve to the lowest id.
template <typename T>
std::vector<DecodedSeq> greedy_decode_batch(ModelParams<T>& params,
                                            const std::vector<TokenSeq>& srcs,
                                            const DecodeOptions& opts = {}) {
  const ModelConfig& c = params.config;
  const int n = static_cast<int>(srcs.size());
  std::vector<DecodedSeq> out(n);
  std::vector<std::vector<int32_t>> prefixes(n);
  std::vector<int> limits(n);
  std::vector<int> active;
  for (int i = 0; i < n; ++i) {
    out[i].ids.scheme = c.scheme;
    if (srcs[i].empty()) continue;  // nothing to condition on; emit empty
    prefixes[i] = {c.bos_id};
    limits[i] = decode_detail::effective_max_len(opts, srcs[i].size(), c.max_len);
    active.push_back(i);
  }

  while (!active.empty()) {
    std::vector<const std::vector<int32_t>*> batch_srcs;
    std::vector<std::vector<int32_t>> batch_prefixes;
    for (int i : active) {
      batch_srcs.push_back(&srcs[i].ids);
      batch_prefixes.push_back(prefixes[i]);
    }
    const Tensor<double> lp = decode_detail::next_logprobs(params, batch_srcs, batch_prefixes);

    std::vector<int> still_active;
    for (size_t r = 0; r < active.size(); ++r) {
      const int i = active[r];
      const int tok = decode_detail::argmax_row(lp, static_cast<int>(r));
      out[i].score += lp(static_cast<int>(r), tok);
      if (tok == c.eos_id) continue;
      out[i].ids.ids.push_back(tok);
      prefixes[i].push_back(tok);
      if (static_cast<int>(out[i].ids.size()) >= limits[i]) {
        out[i].truncated = true;
        continue;
      }
      still_active.push_back(i);
    }
    active = std::move(still_active);
  }
  return out;
}

template <typename T>
DecodedSeq greedy_decode(ModelParams<T>& params, const TokenSeq& src,
                         const DecodeOptions& opts = {}) {
  return greedy_decode_batch(params, std::vector<TokenSeq>{src}, opts).front();
}

// Beam search over one source. Hypotheses score by summed log-probs and
// rank by score / len^alpha; the greedy path is kept in the candidate pool
// as a floor, so the returned hypothesis never scores below it.
template <typename T>
DecodedSeq beam_decode(ModelParams<T>& params, const TokenSeq& src, const DecodeOptions& opts = {}) {
  if (opts.beam < 1) throw UsageError("beam_decode: beam size must be >= 1");
  const ModelConfig& c = params.config;
  if (src.empty()) {
    DecodedSeq empty;
    empty.ids.scheme = c.scheme;
    return empty;
  }
  if (opts.beam == 1) return greedy_decode(params, src, opts);

  struct Hyp {
    std::vector<int32_t> prefix;  // includes BOS
    double score = 0.0;
    bool truncated = false;
  };
  const int limit = decode_detail::effective_max_len(opts, src.size(), c.max_len);
  std::vector<Hyp> live{{{c.bos_id}, 0.0, false}};
  std::vector<Hyp> finished;

  for (int step = 0; step < limit && !live.empty(); ++step) {
    std::vector<const std::vector<int32_t>*> batch_srcs(live.size(), &src.ids);
    std::vector<std::vector<int32_t>> batch_prefixes;
    for (const auto& h : live) batch_prefixes.push_back(h.prefix);
    const Tensor<double> lp = decode_detail::next_logprobs(params, batch_srcs, batch_prefixes);

    struct Cand {
      double score;
      int hyp;
      int32_t tok;
    };
    std::vector<Cand> cands;
    cands.reserve(live.size() * c.vocab_size);
    for (size_t h = 0; h < live.size(); ++h)
      for (int v = 0; v < c.vocab_size; ++v)
        cands.push_back({live[h].score + lp(static_cast<int>(h), v), static_cast<int>(h), v});
    const size_t take = std::min(cands.size(), static_cast<size_t>(2 * opts.beam));
    std::partial_sort(cands.begin(), cands.begin() + take, cands.end(),
                      [](const Cand& a, const Cand& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.hyp != b.hyp) return a.hyp < b.hyp;
                        return a.tok < b.tok;
                      });

    std::vector<Hyp> next_live;
    for (size_t k = 0; k < take; ++k) {
      const Cand& cand = cands[k];
      Hyp h = live[cand.hyp];
      h.score = cand.score;
      if (cand.tok == c.eos_id) {
        finished.push_back(std::move(h));
      } else if (next_live.size() < static_cast<size_t>(opts.beam)) {
        h.prefix.push_back(cand.tok);
        next_live.push_back(std::move(h));
      }
      if (finished.size() >= static_cast<size_t>(opts.beam)) break;
    }
    if (finished.size() >= static_cast<size_t>(opts.beam)) {
      live.clear();
      break;
    }
    live = std::move(next_live);
  }
  for (auto& h : live) {
    h.truncated = true;
    finished.push_back(h);
  }

  // candidate floor: the greedy hypothesis
  DecodedSeq greedy = greedy_decode(params, src, opts);
  {
    Hyp g;
    g.prefix = {c.bos_id};
    for (int32_t t : greedy.ids.ids) g.prefix.push_back(t);
    g.score = greedy.score;
    g.truncated = greedy.truncated;
    finished.push_back(std::move(g));
  }

  const auto rank = [&](const Hyp& h) {
    // generated length including EOS when present; at least 1
    const double len = std::max<double>(1.0, static_cast<double>(h.prefix.size()) - 1.0 +
                                                 (h.truncated ? 0.0 : 1.0));
    return h.score / std::pow(len, opts.length_penalty);
  };
  const Hyp* best = &finished.front();
  for (const auto& h : finished)
    if (rank(h) > rank(*best)) best = &h;

  DecodedSeq out;
  out.ids.scheme = c.scheme;
  out.ids.ids.assign(best->prefix.begin() + 1, best->prefix.end());
  out.score = best->score;
  out.truncated = best->truncated;
  return out;
}

// Scheme-appropriate surface string for decoded ids.
inline std::string detokenize_output(const TokenSeq& seq, const Vocab& vocab, bool* malformed) {
  switch (vocab.scheme()) {
    case Scheme::kByte: {
      const auto r = byte_decode(seq);
      if (malformed && !r.clean) *malformed = true;
      return r.text;
    }
    case Scheme::kChar:
      return char_decode(seq, vocab);
    case Scheme::kBpe:
      return bpe_detokenize(seq, vocab);
  }
  throw UsageError("detokenize_output: unknown scheme");
}

struct TranslateStats {
  size_t lines = 0;
  size_t malformed = 0;  // byte outputs that needed replacement characters
  size_t truncated = 0;
};

// Line-aligned file translation. Beam width 1 uses the batched greedy path;
// wider beams decode per line, optionally across threads (output order is
// restored, so results do not depend on the thread count).
template <typename T>
TranslateStats translate_file(ModelParams<T>& params, const Vocab& vocab, const BpeModel* bpe,
                              const std::string& in_path, const std::string& out_path,
                              const DecodeOptions& opts = {}) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw DataError("cannot open input file: " + in_path);
  std::vector<std::string> lines;
  std::string line;
  size_t lineno = 0;
  std::vector<TokenSeq> srcs;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      srcs.push_back(encode_line(line, vocab.scheme(), vocab, bpe));
    } catch (const DataError& e) {
      throw DataError(in_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    lines.push_back(std::move(line));
  }

  std::vector<DecodedSeq> decoded(srcs.size());
  if (opts.beam <= 1) {
    decoded = greedy_decode_batch(params, srcs, opts);
  } else {
    const int threads = std::max(1, opts.threads);
    std::atomic<size_t> next{0};
    const auto worker = [&]() {
      for (size_t i = next.fetch_add(1); i < srcs.size(); i = next.fetch_add(1))
        decoded[i] = beam_decode(params, srcs[i], opts);
    };
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write output file: " + out_path);
  TranslateStats stats;
  for (const auto& d : decoded) {
    bool malformed = false;
    out << detokenize_output(d.ids, vocab, &malformed) << '\n';
    ++stats.lines;
    if (malformed) ++stats.malformed;
    if (d.truncated) ++stats.truncated;
  }
  if (!out) throw DataError("failed writing output file: " + out_path);
  return stats;
}

}  // namespace bytenmt
