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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bytenmt/bpe.hpp"
#include "bytenmt/errors.hpp"
#include "bytenmt/tokenize.hpp"
#include "bytenmt/utf8.hpp"
#include "bytenmt/vocab.hpp"

namespace bytenmt {

struct ParallelCorpus {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string src_lang;
  std::string tgt_lang;

  size_t size() const { return pairs.size(); }
};

// Reads two aligned one-sentence-per-line files. Lines must be valid
// UTF-8; pairs where either side is empty are dropped.
inline ParallelCorpus load_parallel(const std::string& src_path, const std::string& tgt_path,
                                    std::string src_lang = "src", std::string tgt_lang = "tgt") {
  const auto read_lines = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file: " + path);
    std::vector<std::string> lines;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!utf8::is_valid(line))
        throw DataError(path + ":" + std::to_string(lineno) + ": line is not valid UTF-8");
      lines.push_back(std::move(line));
    }
    return lines;
  };
  auto src = read_lines(src_path);
  auto tgt = read_lines(tgt_path);
  if (src.size() != tgt.size())
    throw DataError("corpus files have different line counts: " + src_path + " has " +
                    std::to_string(src.size()) + ", " + tgt_path + " has " + std::to_string(tgt.size()));
  ParallelCorpus corpus;
  corpus.src_lang = std::move(src_lang);
  corpus.tgt_lang = std::move(tgt_lang);
  corpus.pairs.reserve(src.size());
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i].empty() || tgt[i].empty()) continue;
    corpus.pairs.emplace_back(std::move(src[i]), std::move(tgt[i]));
  }
  return corpus;
}

struct CleanRemoval {
  size_t line = 0;  // 0-based index into the input corpus
  std::string reason;
};

struct CleanReport {
  size_t original = 0;
  size_t kept = 0;
  std::vector<CleanRemoval> removed;
};

inline void write_clean_report(const CleanReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write cleaning report: " + path);
  out << "# original=" << report.original << " kept=" << report.kept
      << " removed=" << report.removed.size() << '\n';
  for (const auto& r : report.removed) out << r.line + 1 << '\t' << r.reason << '\n';
}

// Two-stage cleaning: drop pairs where either side exceeds max_bytes, then
// drop the worst max/min byte-length-ratio pairs until the combined removal
// reaches ceil(drop_fraction * N). Stage one exceeding that count removes
// stage two entirely.
inline std::pair<ParallelCorpus, CleanReport> clean_corpus(const ParallelCorpus& corpus,
                                                           size_t max_bytes = 800,
                                                           double drop_fraction = 0.05) {
  if (corpus.size() < 2) throw DataError("clean_corpus: corpus has fewer than 2 pairs");
  if (drop_fraction < 0.0 || drop_fraction >= 1.0)
    throw UsageError("clean_corpus: drop_fraction must be in [0, 1)");
  const size_t n = corpus.size();
  // epsilon shields ceil against binary representation of fractions like 0.05
  const auto target = static_cast<size_t>(std::ceil(drop_fraction * static_cast<double>(n) - 1e-9));

  CleanReport report;
  report.original = n;
  std::vector<uint8_t> drop(n, 0);
  struct Ranked {
    double ratio;
    size_t line;
  };
  std::vector<Ranked> survivors;
  survivors.reserve(n);
  size_t removed = 0;
  for (size_t i = 0; i < n; ++i) {
    const auto s = corpus.pairs[i].first.size();
    const auto t = corpus.pairs[i].second.size();
    if (s > max_bytes || t > max_bytes) {
      drop[i] = 1;
      ++removed;
      report.removed.push_back({i, "length>" + std::to_string(max_bytes)});
    } else {
      const double ratio = static_cast<double>(std::max(s, t)) / static_cast<double>(std::min(s, t));
      survivors.push_back({ratio, i});
    }
  }

  if (removed < target) {
    std::stable_sort(survivors.begin(), survivors.end(), [](const Ranked& a, const Ranked& b) {
      if (a.ratio != b.ratio) return a.ratio > b.ratio;
      return a.line < b.line;
    });
    const size_t extra = std::min(target - removed, survivors.size());
    for (size_t k = 0; k < extra; ++k) {
      drop[survivors[k].line] = 1;
      char buf[48];
      std::snprintf(buf, sizeof(buf), "ratio=%.4f", survivors[k].ratio);
      report.removed.push_back({survivors[k].line, buf});
    }
  }

  ParallelCorpus cleaned;
  cleaned.src_lang = corpus.src_lang;
  cleaned.tgt_lang = corpus.tgt_lang;
  for (size_t i = 0; i < n; ++i)
    if (!drop[i]) cleaned.pairs.push_back(corpus.pairs[i]);
  report.kept = cleaned.size();
  std::sort(report.removed.begin(), report.removed.end(),
            [](const CleanRemoval& a, const CleanRemoval& b) { return a.line < b.line; });
  return {std::move(cleaned), std::move(report)};
}

struct CorpusSplit {
  ParallelCorpus train, valid, test;
};

// Seeded random split; original line order is preserved inside each part.
inline CorpusSplit split_corpus(const ParallelCorpus& corpus, double valid_frac, double test_frac,
                                uint64_t seed) {
  const size_t n = corpus.size();
  const auto n_valid = std::max<size_t>(1, static_cast<size_t>(std::llround(valid_frac * n)));
  const auto n_test = std::max<size_t>(1, static_cast<size_t>(std::llround(test_frac * n)));
  if (n_valid + n_test >= n)
    throw DataError("split_corpus: corpus too small for the requested split");
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  std::vector<size_t> valid_idx(idx.begin(), idx.begin() + n_valid);
  std::vector<size_t> test_idx(idx.begin() + n_valid, idx.begin() + n_valid + n_test);
  std::vector<size_t> train_idx(idx.begin() + n_valid + n_test, idx.end());
  std::sort(valid_idx.begin(), valid_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  CorpusSplit split;
  const auto take = [&](const std::vector<size_t>& which, ParallelCorpus& out) {
    out.src_lang = corpus.src_lang;
    out.tgt_lang = corpus.tgt_lang;
    for (size_t i : which) out.pairs.push_back(corpus.pairs[i]);
  };
  take(train_idx, split.train);
  take(valid_idx, split.valid);
  take(test_idx, split.test);
  return split;
}

struct TokenizedPair {
  TokenSeq src;
  TokenSeq tgt;
  int64_t byte_cost = 0;  // max(raw src bytes, raw tgt bytes); scheme-independent
  size_t line = 0;
};

inline TokenSeq encode_line(const std::string& line, Scheme scheme, const Vocab& vocab,
                            const BpeModel* bpe) {
  switch (scheme) {
    case Scheme::kByte: return byte_encode(line);
    case Scheme::kChar: return char_encode(line, vocab);
    case Scheme::kBpe:
      if (!bpe) throw UsageError("encode_line: BPE scheme requires a trained BPE model");
      return bpe_apply(*bpe, line);
  }
  throw UsageError("encode_line: unknown scheme");
}

inline std::vector<TokenizedPair> tokenize_corpus(const ParallelCorpus& corpus, Scheme scheme,
                                                  const Vocab& vocab, const BpeModel* bpe = nullptr) {
  std::vector<TokenizedPair> out;
  out.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto& [s, t] = corpus.pairs[i];
    TokenizedPair p;
    p.src = encode_line(s, scheme, vocab, bpe);
    p.tgt = encode_line(t, scheme, vocab, bpe);
    p.byte_cost = static_cast<int64_t>(std::max(s.size(), t.size()));
    p.line = i;
    out.push_back(std::move(p));
  }
  return out;
}

// One padded training batch. Target rows are stored teacher-forcing style:
// decoder input BOS+y, decoder output y+EOS, both padded to tgt_len.
struct Batch {
  int batch_size = 0;
  int src_len = 0;
  int tgt_len = 0;
  std::vector<int32_t> src_ids;      // [batch_size x src_len]
  std::vector<int32_t> dec_in_ids;   // [batch_size x tgt_len]
  std::vector<int32_t> dec_out_ids;  // [batch_size x tgt_len]
  std::vector<uint8_t> src_mask;     // 1 where src_ids is a real token
  std::vector<uint8_t> tgt_mask;     // 1 where dec rows hold real tokens
  std::vector<int> src_lens;
  std::vector<int> tgt_lens;
  int64_t byte_cost = 0;
  std::vector<size_t> lines;
};

inline Batch pad_batch(const std::vector<const TokenizedPair*>& pairs, const Specials& sp) {
  if (pairs.empty()) throw UsageError("pad_batch: empty batch");
  Batch b;
  b.batch_size = static_cast<int>(pairs.size());
  for (const auto* p : pairs) {
    b.src_len = std::max(b.src_len, static_cast<int>(p->src.size()));
    b.tgt_len = std::max(b.tgt_len, static_cast<int>(p->tgt.size()) + 1);
  }
  b.src_len = std::max(b.src_len, 1);
  b.src_ids.assign(static_cast<size_t>(b.batch_size) * b.src_len, sp.pad);
  b.dec_in_ids.assign(static_cast<size_t>(b.batch_size) * b.tgt_len, sp.pad);
  b.dec_out_ids.assign(static_cast<size_t>(b.batch_size) * b.tgt_len, sp.pad);
  b.src_mask.assign(b.src_ids.size(), 0);
  b.tgt_mask.assign(b.dec_in_ids.size(), 0);
  for (int r = 0; r < b.batch_size; ++r) {
    const auto& src = pairs[r]->src.ids;
    const auto& tgt = pairs[r]->tgt.ids;
    for (size_t j = 0; j < src.size(); ++j) {
      b.src_ids[r * b.src_len + j] = src[j];
      b.src_mask[r * b.src_len + j] = 1;
    }
    b.dec_in_ids[r * b.tgt_len + 0] = sp.bos;
    for (size_t j = 0; j < tgt.size(); ++j) {
      b.dec_in_ids[r * b.tgt_len + j + 1] = tgt[j];
      b.dec_out_ids[r * b.tgt_len + j] = tgt[j];
    }
    b.dec_out_ids[r * b.tgt_len + tgt.size()] = sp.eos;
    for (size_t j = 0; j <= tgt.size(); ++j) b.tgt_mask[r * b.tgt_len + j] = 1;
    b.src_lens.push_back(static_cast<int>(src.size()));
    b.tgt_lens.push_back(static_cast<int>(tgt.size()) + 1);
    b.byte_cost += pairs[r]->byte_cost;
    b.lines.push_back(pairs[r]->line);
  }
  return b;
}

// Packs pairs into batches under a total byte budget. Pairs are ordered by
// their scheme-independent byte cost so every tokenization scheme sees the
// same batch boundaries (and therefore the same number of batches per
// epoch); the training loop shuffles batch order per epoch.
inline std::vector<Batch> batch_by_bytes(const std::vector<TokenizedPair>& pairs,
                                         int64_t budget_bytes, const Specials& sp) {
  if (pairs.empty()) throw DataError("batch_by_bytes: no pairs to batch");
  for (const auto& p : pairs)
    if (p.byte_cost > budget_bytes)
      throw DataError("batch_by_bytes: pair at line " + std::to_string(p.line + 1) + " costs " +
                      std::to_string(p.byte_cost) + " bytes, over the budget of " +
                      std::to_string(budget_bytes));

  std::vector<const TokenizedPair*> order;
  order.reserve(pairs.size());
  for (const auto& p : pairs) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const TokenizedPair* a, const TokenizedPair* b) {
    if (a->byte_cost != b->byte_cost) return a->byte_cost < b->byte_cost;
    return a->line < b->line;
  });

  std::vector<Batch> batches;
  std::vector<const TokenizedPair*> current;
  int64_t cost = 0;
  for (const auto* p : order) {
    if (!current.empty() && cost + p->byte_cost > budget_bytes) {
      batches.push_back(pad_batch(current, sp));
      current.clear();
      cost = 0;
    }
    current.push_back(p);
    cost += p->byte_cost;
  }
  if (!current.empty()) batches.push_back(pad_batch(current, sp));
  return batches;
}

}  // namespace bytenmt
