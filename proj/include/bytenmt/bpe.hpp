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

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bytenmt/errors.hpp"
#include "bytenmt/tokenize.hpp"
#include "bytenmt/utf8.hpp"
#include "bytenmt/vocab.hpp"

namespace bytenmt {

// Learned byte-pair-encoding merges plus the vocab observed when applying
// them to the training corpus. Word-internal subwords carry `marker` as a
// suffix ("Бу@@ дь" style); detokenization strips it. Immutable once built.
struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;
  std::string marker = "@@";
  Vocab vocab;

  std::unordered_map<std::string, int> merge_rank;  // "left\x01right" -> merge index

  void build_rank_index() {
    merge_rank.clear();
    for (size_t i = 0; i < merges.size(); ++i)
      merge_rank[merges[i].first + '\x01' + merges[i].second] = static_cast<int>(i);
  }
};

namespace detail {

// Applies merges to one pre-token: repeatedly merge the adjacent pair with
// the lowest training rank until none applies.
inline std::vector<std::string> bpe_segment_word(const BpeModel& model, const std::string& word) {
  std::vector<std::string> syms;
  for (char32_t cp : utf8::decode(word).codepoints) syms.push_back(utf8::encode(cp));
  while (syms.size() > 1) {
    int best_rank = -1;
    for (size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = model.merge_rank.find(syms[i] + '\x01' + syms[i + 1]);
      if (it != model.merge_rank.end() && (best_rank < 0 || it->second < best_rank)) best_rank = it->second;
    }
    if (best_rank < 0) break;
    const auto& [left, right] = model.merges[best_rank];
    std::vector<std::string> merged;
    merged.reserve(syms.size());
    for (size_t i = 0; i < syms.size();) {
      if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
        merged.push_back(left + right);
        i += 2;
      } else {
        merged.push_back(syms[i]);
        ++i;
      }
    }
    syms = std::move(merged);
  }
  return syms;
}

inline std::vector<std::string> marked_subwords(const BpeModel& model, const std::string& word) {
  auto syms = bpe_segment_word(model, word);
  for (size_t i = 0; i + 1 < syms.size(); ++i) syms[i] += model.marker;
  return syms;
}

}  // namespace detail

// Greedy most-frequent-pair merging for `merge_steps` steps, or fewer if
// no adjacent pair occurs at least twice. Ties are broken toward the
// lexicographically smallest (left, right) pair so runs are reproducible.
inline BpeModel bpe_train(const std::vector<std::string>& corpus, int merge_steps,
                          std::string marker = "@@") {
  if (merge_steps < 0) throw UsageError("bpe_train: merge step count must be >= 0");
  if (corpus.empty()) throw DataError("bpe_train: empty corpus");

  std::map<std::string, int64_t> word_freq;
  for (const auto& line : corpus)
    for (auto& w : pre_tokenize(line)) ++word_freq[w];
  if (word_freq.empty()) throw DataError("bpe_train: corpus contains no tokens");

  struct Word {
    std::vector<std::string> syms;
    int64_t freq;
  };
  std::vector<Word> words;
  words.reserve(word_freq.size());
  for (const auto& [w, f] : word_freq) {
    Word word{{}, f};
    for (char32_t cp : utf8::decode(w).codepoints) word.syms.push_back(utf8::encode(cp));
    words.push_back(std::move(word));
  }

  using Pair = std::pair<std::string, std::string>;
  std::map<Pair, int64_t> pair_count;
  std::map<Pair, std::set<int>> pair_words;

  const auto add_word = [&](int wi, int64_t sign) {
    const Word& w = words[wi];
    for (size_t i = 0; i + 1 < w.syms.size(); ++i) {
      Pair p{w.syms[i], w.syms[i + 1]};
      auto& c = pair_count[p];
      c += sign * w.freq;
      if (sign > 0) {
        pair_words[p].insert(wi);
      } else if (c <= 0) {
        pair_count.erase(p);
        pair_words.erase(p);
      }
    }
  };
  for (int wi = 0; wi < static_cast<int>(words.size()); ++wi) add_word(wi, +1);

  BpeModel model;
  model.marker = std::move(marker);
  for (int step = 0; step < merge_steps; ++step) {
    const Pair* best = nullptr;
    int64_t best_count = 0;
    for (const auto& [p, c] : pair_count) {
      if (c > best_count || (c == best_count && best && p < *best)) {
        best = &p;
        best_count = c;
      }
    }
    if (!best || best_count < 2) break;
    const Pair merged_pair = *best;
    model.merges.push_back(merged_pair);

    const std::set<int> affected = pair_words[merged_pair];
    for (int wi : affected) {
      add_word(wi, -1);
      auto& syms = words[wi].syms;
      std::vector<std::string> merged;
      merged.reserve(syms.size());
      for (size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == merged_pair.first && syms[i + 1] == merged_pair.second) {
          merged.push_back(merged_pair.first + merged_pair.second);
          i += 2;
        } else {
          merged.push_back(syms[i]);
          ++i;
        }
      }
      syms = std::move(merged);
      add_word(wi, +1);
    }
  }
  model.build_rank_index();

  // Vocab = everything the trained merges emit on their own training corpus.
  std::set<std::string> seen;
  for (const auto& [w, f] : word_freq)
    for (auto& t : detail::marked_subwords(model, w)) seen.insert(t);
  model.vocab =
      Vocab::from_tokens(Scheme::kBpe, std::vector<std::string>(seen.begin(), seen.end()));
  return model;
}

// Subword strings (with continuation markers) for one sentence.
inline std::vector<std::string> bpe_tokens(const BpeModel& model, std::string_view text) {
  std::vector<std::string> out;
  for (const auto& w : pre_tokenize(text))
    for (auto& t : detail::marked_subwords(model, w)) out.push_back(std::move(t));
  return out;
}

inline TokenSeq bpe_apply(const BpeModel& model, std::string_view text) {
  TokenSeq seq;
  seq.scheme = Scheme::kBpe;
  for (const auto& t : bpe_tokens(model, text)) seq.ids.push_back(model.vocab.id_of(t));
  return seq;
}

// Joins subwords back into words (stripping markers), words with spaces.
inline std::string bpe_detokenize(const TokenSeq& seq, const Vocab& vocab,
                                  const std::string& marker = "@@") {
  std::string out, word;
  const auto flush = [&](bool word_done) {
    if (word_done) {
      if (!out.empty()) out += ' ';
      out += word;
      word.clear();
    }
  };
  for (int32_t id : seq.ids) {
    if (id == vocab.specials().pad || id == vocab.specials().bos || id == vocab.specials().eos) continue;
    const std::string& tok = vocab.token_of(id);
    if (tok.size() >= marker.size() && tok.compare(tok.size() - marker.size(), marker.size(), marker) == 0) {
      word += tok.substr(0, tok.size() - marker.size());
    } else {
      word += tok;
      flush(true);
    }
  }
  flush(!word.empty());
  return out;
}

inline void save_bpe(const BpeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write BPE model file: " + path);
  out << "bytenmt-bpe 1 " << model.merges.size() << ' ' << model.marker << '\n';
  for (const auto& [l, r] : model.merges) out << l << ' ' << r << '\n';
}

// The vocab is stored separately (see Vocab::save); callers re-attach it.
inline BpeModel load_bpe(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read BPE model file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw DataError("empty BPE model file: " + path);
  std::istringstream hs(header);
  std::string magic;
  int version = 0;
  size_t count = 0;
  BpeModel model;
  if (!(hs >> magic >> version >> count >> model.marker) || magic != "bytenmt-bpe" || version != 1)
    throw DataError("bad BPE model header: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw DataError("bad merge line in " + path + ": " + line);
    model.merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  if (model.merges.size() != count)
    throw DataError("BPE model merge count mismatch in " + path);
  model.build_rank_index();
  return model;
}

}  // namespace bytenmt
