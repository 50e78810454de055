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
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bytenmt/errors.hpp"

namespace bytenmt {

enum class Scheme { kByte, kChar, kBpe };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kByte: return "byte";
    case Scheme::kChar: return "char";
    case Scheme::kBpe: return "bpe";
  }
  return "?";
}

inline Scheme scheme_from_name(std::string_view name) {
  if (name == "byte") return Scheme::kByte;
  if (name == "char") return Scheme::kChar;
  if (name == "bpe") return Scheme::kBpe;
  throw UsageError("unknown tokenization scheme: " + std::string(name));
}

struct Specials {
  int32_t pad = -1;
  int32_t bos = -1;
  int32_t eos = -1;
  int32_t unk = -1;
};

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kBosToken = "<bos>";
inline constexpr const char* kEosToken = "<eos>";
inline constexpr const char* kUnkToken = "<unk>";

// Bidirectional token/id map. Byte scheme: ids 0..255 are the byte values
// and the 4 specials sit at 256..259. Char/BPE schemes: specials occupy
// ids 0..3 and content tokens follow.
class Vocab {
 public:
  Vocab() = default;

  static Vocab byte_vocab() {
    Vocab v;
    v.scheme_ = Scheme::kByte;
    v.tokens_.reserve(260);
    char buf[8];
    for (int b = 0; b < 256; ++b) {
      std::snprintf(buf, sizeof(buf), "<0x%02X>", b);
      v.tokens_.emplace_back(buf);
    }
    v.specials_ = {256, 257, 258, 259};
    v.tokens_.push_back(kPadToken);
    v.tokens_.push_back(kBosToken);
    v.tokens_.push_back(kEosToken);
    v.tokens_.push_back(kUnkToken);
    v.rebuild_index();
    return v;
  }

  // Specials first, then the given content tokens in order.
  static Vocab from_tokens(Scheme scheme, const std::vector<std::string>& content) {
    if (scheme == Scheme::kByte) throw UsageError("byte vocab is fixed; use byte_vocab()");
    Vocab v;
    v.scheme_ = scheme;
    v.specials_ = {0, 1, 2, 3};
    v.tokens_ = {kPadToken, kBosToken, kEosToken, kUnkToken};
    for (const auto& t : content) {
      if (v.id_of_.count(t) || t == kPadToken || t == kBosToken || t == kEosToken || t == kUnkToken)
        throw DataError("duplicate token in vocab: " + t);
      v.id_of_[t] = static_cast<int32_t>(v.tokens_.size());
      v.tokens_.push_back(t);
    }
    v.rebuild_index();
    return v;
  }

  Scheme scheme() const { return scheme_; }
  const Specials& specials() const { return specials_; }
  int32_t size() const { return static_cast<int32_t>(tokens_.size()); }

  bool is_special(int32_t id) const {
    return id == specials_.pad || id == specials_.bos || id == specials_.eos || id == specials_.unk;
  }

  // Returns UNK for unknown tokens.
  int32_t id_of(std::string_view token) const {
    auto it = id_of_.find(std::string(token));
    return it == id_of_.end() ? specials_.unk : it->second;
  }

  bool contains(std::string_view token) const { return id_of_.count(std::string(token)) > 0; }

  const std::string& token_of(int32_t id) const {
    if (id < 0 || id >= size()) throw DataError("token id out of range: " + std::to_string(id));
    return tokens_[id];
  }

  // One token per line, id = line index.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocab file: " + path);
    for (const auto& t : tokens_) out << t << '\n';
  }

  static Vocab load(Scheme scheme, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read vocab file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    if (scheme == Scheme::kByte) {
      Vocab v = byte_vocab();
      if (lines != v.tokens_) throw DataError("byte vocab file does not match the fixed byte layout: " + path);
      return v;
    }
    if (lines.size() < 4 || lines[0] != kPadToken || lines[1] != kBosToken || lines[2] != kEosToken ||
        lines[3] != kUnkToken)
      throw DataError("vocab file missing special tokens header: " + path);
    return from_tokens(scheme, std::vector<std::string>(lines.begin() + 4, lines.end()));
  }

 private:
  void rebuild_index() {
    id_of_.clear();
    for (size_t i = 0; i < tokens_.size(); ++i) id_of_[tokens_[i]] = static_cast<int32_t>(i);
  }

  Scheme scheme_ = Scheme::kByte;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int32_t> id_of_;
  Specials specials_;
};

// Token ids of one sentence, tagged with the scheme that produced them.
struct TokenSeq {
  std::vector<int32_t> ids;
  Scheme scheme = Scheme::kByte;

  size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

}  // namespace bytenmt
