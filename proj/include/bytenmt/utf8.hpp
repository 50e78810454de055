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
#include <string>
#include <string_view>
#include <vector>

namespace bytenmt::utf8 {

inline constexpr char32_t kReplacementChar = 0xFFFD;

// Appends the UTF-8 encoding of one scalar value.
inline void append(std::string& out, char32_t cp) {
  if (cp <= 0x7F) {
    out.push_back(static_cast<char>(cp));
  } else if (cp <= 0x7FF) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp <= 0xFFFF) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(char32_t cp) {
  std::string s;
  append(s, cp);
  return s;
}

namespace detail {

// Decodes one scalar value at `pos`. Returns the codepoint and sets
// `consumed`; on malformed input returns kReplacementChar and consumes the
// maximal valid prefix (at least one byte), per the usual substitution
// policy.
inline char32_t decode_one(std::string_view s, size_t pos, size_t& consumed, bool& ok) {
  const auto b = [&](size_t i) { return static_cast<uint8_t>(s[pos + i]); };
  const uint8_t b0 = b(0);
  ok = true;
  if (b0 < 0x80) {
    consumed = 1;
    return b0;
  }

  int need = 0;
  char32_t cp = 0;
  uint8_t lo = 0x80, hi = 0xBF;
  if (b0 >= 0xC2 && b0 <= 0xDF) {
    need = 1;
    cp = b0 & 0x1F;
  } else if (b0 >= 0xE0 && b0 <= 0xEF) {
    need = 2;
    cp = b0 & 0x0F;
    if (b0 == 0xE0) lo = 0xA0;       // reject overlong
    if (b0 == 0xED) hi = 0x9F;       // reject surrogates
  } else if (b0 >= 0xF0 && b0 <= 0xF4) {
    need = 3;
    cp = b0 & 0x07;
    if (b0 == 0xF0) lo = 0x90;       // reject overlong
    if (b0 == 0xF4) hi = 0x8F;       // reject > U+10FFFF
  } else {
    // lone continuation byte, overlong C0/C1, or invalid F5..FF
    consumed = 1;
    ok = false;
    return kReplacementChar;
  }

  size_t got = 1;
  for (int i = 1; i <= need; ++i) {
    if (pos + i >= s.size()) break;
    const uint8_t c = b(i);
    const uint8_t l = (i == 1) ? lo : 0x80;
    const uint8_t h = (i == 1) ? hi : 0xBF;
    if (c < l || c > h) break;
    cp = (cp << 6) | (c & 0x3F);
    ++got;
  }
  if (got != static_cast<size_t>(need) + 1) {
    consumed = got;
    ok = false;
    return kReplacementChar;
  }
  consumed = got;
  return cp;
}

}  // namespace detail

inline bool is_valid(std::string_view s) {
  size_t pos = 0;
  while (pos < s.size()) {
    size_t consumed = 0;
    bool ok = false;
    detail::decode_one(s, pos, consumed, ok);
    if (!ok) return false;
    pos += consumed;
  }
  return true;
}

struct DecodeResult {
  std::vector<char32_t> codepoints;
  bool clean = true;  // false if any replacement was substituted
};

// Decodes to scalar values, substituting U+FFFD for malformed sequences.
inline DecodeResult decode(std::string_view s) {
  DecodeResult r;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t consumed = 0;
    bool ok = false;
    const char32_t cp = detail::decode_one(s, pos, consumed, ok);
    if (!ok) r.clean = false;
    r.codepoints.push_back(cp);
    pos += consumed;
  }
  return r;
}

// Number of Unicode scalar values; input must be valid UTF-8.
inline size_t count_codepoints(std::string_view s) { return decode(s).codepoints.size(); }

inline std::string from_codepoints(const std::vector<char32_t>& cps) {
  std::string out;
  for (char32_t cp : cps) append(out, cp);
  return out;
}

}  // namespace bytenmt::utf8
