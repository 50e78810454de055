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
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bytenmt/errors.hpp"
#include "bytenmt/utf8.hpp"
#include "bytenmt/vocab.hpp"

namespace bytenmt {

// One token per UTF-8 byte; ids are the byte values. No specials added.
inline TokenSeq byte_encode(std::string_view text) {
  if (!utf8::is_valid(text)) throw DataError("byte_encode: input is not valid UTF-8");
  TokenSeq seq;
  seq.scheme = Scheme::kByte;
  seq.ids.reserve(text.size());
  for (char c : text) seq.ids.push_back(static_cast<uint8_t>(c));
  return seq;
}

struct ByteDecodeResult {
  std::string text;
  bool clean = true;  // false if malformed bytes were replaced
};

// Inverse of byte_encode. Ids outside 0..255 (specials) are dropped;
// byte runs that do not form valid UTF-8 — possible in raw model output —
// decode to U+FFFD and flag the result instead of failing.
inline ByteDecodeResult byte_decode(const TokenSeq& seq) {
  if (seq.scheme != Scheme::kByte) throw DataError("byte_decode: sequence is not byte-tokenized");
  std::string bytes;
  bytes.reserve(seq.ids.size());
  for (int32_t id : seq.ids) {
    if (id < 0 || id > 255) continue;
    bytes.push_back(static_cast<char>(id));
  }
  const auto decoded = utf8::decode(bytes);
  return {utf8::from_codepoints(decoded.codepoints), decoded.clean};
}

// Content tokens of a char vocab: every distinct scalar value in the
// corpus, in increasing codepoint order.
inline Vocab build_char_vocab(const std::vector<std::string>& lines) {
  std::set<char32_t> seen;
  for (const auto& line : lines) {
    if (!utf8::is_valid(line)) throw DataError("build_char_vocab: corpus line is not valid UTF-8");
    for (char32_t cp : utf8::decode(line).codepoints) seen.insert(cp);
  }
  std::vector<std::string> tokens;
  tokens.reserve(seen.size());
  for (char32_t cp : seen) tokens.push_back(utf8::encode(cp));
  return Vocab::from_tokens(Scheme::kChar, tokens);
}

// One id per Unicode scalar value; out-of-vocab characters map to UNK.
inline TokenSeq char_encode(std::string_view text, const Vocab& vocab) {
  if (!utf8::is_valid(text)) throw DataError("char_encode: input is not valid UTF-8");
  TokenSeq seq;
  seq.scheme = Scheme::kChar;
  for (char32_t cp : utf8::decode(text).codepoints) seq.ids.push_back(vocab.id_of(utf8::encode(cp)));
  return seq;
}

inline std::string char_decode(const TokenSeq& seq, const Vocab& vocab) {
  std::string out;
  for (int32_t id : seq.ids) {
    if (id == vocab.specials().pad || id == vocab.specials().bos || id == vocab.specials().eos) continue;
    out += vocab.token_of(id);
  }
  return out;
}

namespace detail {
inline bool is_ascii_punct(char32_t cp) { return cp < 128 && std::ispunct(static_cast<int>(cp)); }
}  // namespace detail

// Rule-based pre-tokenizer for BPE: split on whitespace, then detach
// leading and trailing ASCII punctuation as separate tokens.
inline std::vector<std::string> pre_tokenize(std::string_view text) {
  std::vector<std::string> out;
  const auto cps = utf8::decode(text).codepoints;
  size_t i = 0;
  const auto is_space = [](char32_t c) { return c == U' ' || c == U'\t' || c == U'\r' || c == U'\n'; };
  while (i < cps.size()) {
    while (i < cps.size() && is_space(cps[i])) ++i;
    size_t j = i;
    while (j < cps.size() && !is_space(cps[j])) ++j;
    if (j > i) {
      size_t lead = i, trail = j;
      while (lead < trail && detail::is_ascii_punct(cps[lead])) ++lead;
      while (trail > lead && detail::is_ascii_punct(cps[trail - 1])) --trail;
      for (size_t k = i; k < lead; ++k) out.push_back(utf8::encode(cps[k]));
      if (lead < trail) {
        std::string core;
        for (size_t k = lead; k < trail; ++k) utf8::append(core, cps[k]);
        out.push_back(std::move(core));
      }
      for (size_t k = trail; k < j; ++k) out.push_back(utf8::encode(cps[k]));
    }
    i = j;
  }
  return out;
}

}  // namespace bytenmt
