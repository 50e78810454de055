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

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bytenmt/bpe.hpp"
#include "bytenmt/corpus.hpp"
#include "bytenmt/errors.hpp"
#include "bytenmt/utf8.hpp"

namespace bytenmt {

namespace bleu_detail {

inline bool in_13a_punct_class(unsigned char c) {
  // ASCII ranges {-~, [-`, space-&, (-+, :-@ plus /
  return (c >= '{' && c <= '~') || (c >= '[' && c <= '`') || (c >= ' ' && c <= '&') ||
         (c >= '(' && c <= '+') || (c >= ':' && c <= '@') || c == '/';
}

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Left-to-right non-overlapping two-character rewrite, mirroring a regex
// substitution with a pair pattern.
template <typename Match, typename Emit>
std::string rewrite_pairs(const std::string& s, Match&& match, Emit&& emit) {
  std::string out;
  out.reserve(s.size() * 2);
  size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && match(static_cast<unsigned char>(s[i]), static_cast<unsigned char>(s[i + 1]))) {
      emit(out, s[i], s[i + 1]);
      i += 2;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace bleu_detail

// The mteval-v13a rule set: unescape a few entities, isolate common ASCII
// punctuation, split period/comma except between digits, split a dash after
// a digit, then split on whitespace. Case is preserved and non-ASCII text
// passes through untouched.
inline std::vector<std::string> tokenize_13a(std::string_view text) {
  namespace d = bleu_detail;
  std::string line(text);
  d::replace_all(line, "<skipped>", "");
  d::replace_all(line, "-\n", "");
  d::replace_all(line, "\n", " ");
  if (line.find('&') != std::string::npos) {
    d::replace_all(line, "&quot;", "\"");
    d::replace_all(line, "&amp;", "&");
    d::replace_all(line, "&lt;", "<");
    d::replace_all(line, "&gt;", ">");
  }
  line = " " + line + " ";

  std::string spaced;
  spaced.reserve(line.size() * 2);
  for (char ch : line) {
    const auto c = static_cast<unsigned char>(ch);
    if (d::in_13a_punct_class(c) && c != '.' && c != ',') {
      spaced.push_back(' ');
      spaced.push_back(ch);
      spaced.push_back(' ');
    } else {
      spaced.push_back(ch);
    }
  }

  spaced = d::rewrite_pairs(
      spaced, [](unsigned char a, unsigned char b) { return !d::is_digit(a) && (b == '.' || b == ','); },
      [](std::string& out, char a, char b) {
        out.push_back(a);
        out.push_back(' ');
        out.push_back(b);
        out.push_back(' ');
      });
  spaced = d::rewrite_pairs(
      spaced, [](unsigned char a, unsigned char b) { return (a == '.' || a == ',') && !d::is_digit(b); },
      [](std::string& out, char a, char b) {
        out.push_back(' ');
        out.push_back(a);
        out.push_back(' ');
        out.push_back(b);
      });
  spaced = d::rewrite_pairs(
      spaced, [](unsigned char a, unsigned char b) { return d::is_digit(a) && b == '-'; },
      [](std::string& out, char a, char b) {
        out.push_back(a);
        out.push_back(' ');
        out.push_back(b);
        out.push_back(' ');
      });

  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < spaced.size()) {
    while (i < spaced.size() && std::isspace(static_cast<unsigned char>(spaced[i]))) ++i;
    size_t j = i;
    while (j < spaced.size() && !std::isspace(static_cast<unsigned char>(spaced[j]))) ++j;
    if (j > i) tokens.push_back(spaced.substr(i, j - i));
    i = j;
  }
  return tokens;
}

enum class BleuTokenizer { k13a, kChar, kNone };

inline const char* bleu_tokenizer_name(BleuTokenizer t) {
  switch (t) {
    case BleuTokenizer::k13a: return "13a";
    case BleuTokenizer::kChar: return "char";
    case BleuTokenizer::kNone: return "none";
  }
  return "?";
}

inline BleuTokenizer bleu_tokenizer_from_name(std::string_view name) {
  if (name == "13a") return BleuTokenizer::k13a;
  if (name == "char") return BleuTokenizer::kChar;
  if (name == "none") return BleuTokenizer::kNone;
  throw UsageError("unknown BLEU tokenizer: " + std::string(name));
}

inline std::vector<std::string> bleu_tokenize(std::string_view text, BleuTokenizer tok) {
  switch (tok) {
    case BleuTokenizer::k13a:
      return tokenize_13a(text);
    case BleuTokenizer::kChar: {
      std::vector<std::string> out;
      for (char32_t cp : utf8::decode(text).codepoints)
        if (cp != U' ' && cp != U'\t' && cp != U'\n' && cp != U'\r') out.push_back(utf8::encode(cp));
      return out;
    }
    case BleuTokenizer::kNone: {
      std::vector<std::string> out;
      size_t i = 0;
      while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
      }
      return out;
    }
  }
  throw UsageError("bleu_tokenize: unknown tokenizer");
}

struct BleuReport {
  double bleu = 0.0;
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  int64_t hyp_len = 0;
  int64_t ref_len = 0;
  BleuTokenizer tokenizer = BleuTokenizer::k13a;

  std::string to_line() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "bleu=%.4f p1=%.4f p2=%.4f p3=%.4f p4=%.4f bp=%.4f hyp_len=%lld ref_len=%lld "
                  "tokenizer=%s",
                  bleu, precisions[0], precisions[1], precisions[2], precisions[3], brevity_penalty,
                  static_cast<long long>(hyp_len), static_cast<long long>(ref_len),
                  bleu_tokenizer_name(tokenizer));
    return buf;
  }
};

// Corpus-level 4-gram BLEU with brevity penalty and no smoothing: clipped
// n-gram matches are aggregated over the whole corpus before the
// precisions are taken. References are raw text, tokenized only here.
inline BleuReport corpus_bleu(const std::vector<std::string>& hyps,
                              const std::vector<std::string>& refs,
                              BleuTokenizer tok = BleuTokenizer::k13a) {
  if (hyps.size() != refs.size())
    throw DataError("corpus_bleu: hypothesis and reference line counts differ (" +
                    std::to_string(hyps.size()) + " vs " + std::to_string(refs.size()) + ")");

  BleuReport report;
  report.tokenizer = tok;
  std::array<int64_t, 4> matches{};
  std::array<int64_t, 4> totals{};

  const auto ngram_counts = [](const std::vector<std::string>& toks, int n) {
    std::unordered_map<std::string, int64_t> counts;
    if (static_cast<int>(toks.size()) >= n) {
      for (size_t i = 0; i + n <= toks.size(); ++i) {
        std::string key;
        for (int k = 0; k < n; ++k) {
          if (k) key.push_back('\x1F');
          key += toks[i + k];
        }
        ++counts[key];
      }
    }
    return counts;
  };

  for (size_t i = 0; i < hyps.size(); ++i) {
    const auto h = bleu_tokenize(hyps[i], tok);
    const auto r = bleu_tokenize(refs[i], tok);
    report.hyp_len += static_cast<int64_t>(h.size());
    report.ref_len += static_cast<int64_t>(r.size());
    for (int n = 1; n <= 4; ++n) {
      const auto hc = ngram_counts(h, n);
      const auto rc = ngram_counts(r, n);
      for (const auto& [gram, count] : hc) {
        auto it = rc.find(gram);
        if (it != rc.end()) matches[n - 1] += std::min(count, it->second);
      }
      totals[n - 1] += std::max<int64_t>(0, static_cast<int64_t>(h.size()) - n + 1);
    }
  }

  for (int n = 0; n < 4; ++n)
    // an order with no hypothesis n-grams at all is vacuously perfect, so
    // identical corpora of very short lines still score 100
    report.precisions[n] = totals[n] > 0 ? static_cast<double>(matches[n]) / totals[n] : 1.0;
  if (report.hyp_len == 0 && report.ref_len > 0) {
    report.brevity_penalty = 0.0;
    report.bleu = 0.0;
    return report;
  }
  report.brevity_penalty =
      report.hyp_len >= report.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(report.ref_len) / static_cast<double>(report.hyp_len));
  double log_sum = 0.0;
  bool any_zero = false;
  for (double p : report.precisions) {
    if (p <= 0.0) {
      any_zero = true;
      break;
    }
    log_sum += std::log(p);
  }
  report.bleu = any_zero ? 0.0 : 100.0 * report.brevity_penalty * std::exp(log_sum / 4.0);
  return report;
}

struct CorpusStatsRow {
  std::string side;
  double bpe = 0.0;   // NaN when no BPE model was supplied
  double chars = 0.0;
  double bytes = 0.0;
};

// Mean token count per sentence for each tokenization scheme, per language
// side (the sequence-length table machinery).
inline std::vector<CorpusStatsRow> corpus_stats(const ParallelCorpus& corpus,
                                                const BpeModel* bpe = nullptr) {
  if (corpus.pairs.empty()) throw DataError("corpus_stats: empty corpus");
  std::vector<CorpusStatsRow> rows;
  for (int side = 0; side < 2; ++side) {
    CorpusStatsRow row;
    row.side = side == 0 ? corpus.src_lang : corpus.tgt_lang;
    double bpe_sum = 0.0, char_sum = 0.0, byte_sum = 0.0;
    for (const auto& [s, t] : corpus.pairs) {
      const std::string& line = side == 0 ? s : t;
      byte_sum += static_cast<double>(line.size());
      char_sum += static_cast<double>(utf8::count_codepoints(line));
      if (bpe) bpe_sum += static_cast<double>(bpe_tokens(*bpe, line).size());
    }
    const double n = static_cast<double>(corpus.pairs.size());
    row.bytes = byte_sum / n;
    row.chars = char_sum / n;
    row.bpe = bpe ? bpe_sum / n : std::nan("");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bytenmt
