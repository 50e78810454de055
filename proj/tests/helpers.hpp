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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bytenmt/model.hpp"
#include "bytenmt/vocab.hpp"

namespace test_helpers {

inline double rel_err(double got, double want) {
  const double scale = std::max({std::abs(got), std::abs(want), 1e-8});
  return std::abs(got - want) / scale;
}

// Central finite differences over every trainable parameter, compared
// against the analytic gradients produced by `loss_and_grads`. The loss
// closure must be a deterministic function of the parameters (dropout off
// or externally fixed). Returns the worst relative error seen.
struct FdCheckResult {
  double worst_rel_err = 0.0;
  std::string worst_param;
};

inline FdCheckResult finite_difference_check(
    bytenmt::ModelParams<double>& params,
    const std::function<double(bytenmt::ModelParams<double>&)>& loss_of,
    const std::function<void(bytenmt::ModelParams<double>&, std::vector<bytenmt::Tensor<double>>&)>&
        loss_and_grads,
    double h = 1e-5) {
  std::vector<bytenmt::Tensor<double>> grads;
  loss_and_grads(params, grads);

  FdCheckResult result;
  for (size_t p = 0; p < params.params.size(); ++p) {
    auto& [name, tensor] = params.params[p];
    for (size_t j = 0; j < tensor.size(); ++j) {
      const double saved = tensor.data[j];
      tensor.data[j] = saved + h;
      const double up = loss_of(params);
      tensor.data[j] = saved - h;
      const double down = loss_of(params);
      tensor.data[j] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = grads[p].data[j];
      const double err =
          std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6});
      if (err > result.worst_rel_err) {
        result.worst_rel_err = err;
        result.worst_param = name;
      }
    }
  }
  return result;
}

// A char-style vocab with `content` single-letter tokens; small enough for
// embeddingless models at tiny d.
inline bytenmt::Vocab tiny_vocab(int content_tokens) {
  std::vector<std::string> toks;
  for (int i = 0; i < content_tokens; ++i) toks.push_back(std::string(1, static_cast<char>('a' + i)));
  return bytenmt::Vocab::from_tokens(bytenmt::Scheme::kChar, toks);
}

inline bytenmt::ModelConfig tiny_config(bytenmt::ModelMode mode, int d, int layers, int heads,
                                        const bytenmt::Vocab& vocab) {
  bytenmt::ModelConfig c;
  c.mode = mode;
  c.scheme = vocab.scheme();
  c.vocab_size = vocab.size();
  c.d_model = d;
  c.ffn_dim = 2 * d;
  c.layers = layers;
  c.heads = heads;
  c.dropout = 0.0;
  c.token_dropout = 0.0;
  c.max_len = 32;
  c.set_specials(vocab.specials());
  return c;
}

// Deterministic padded batch over explicit id sequences.
inline bytenmt::Batch make_batch(const std::vector<std::vector<int32_t>>& src,
                                 const std::vector<std::vector<int32_t>>& tgt,
                                 const bytenmt::Specials& sp) {
  std::vector<bytenmt::TokenizedPair> pairs(src.size());
  std::vector<const bytenmt::TokenizedPair*> ptrs;
  for (size_t i = 0; i < src.size(); ++i) {
    pairs[i].src.ids = src[i];
    pairs[i].tgt.ids = tgt[i];
    pairs[i].byte_cost = static_cast<int64_t>(std::max(src[i].size(), tgt[i].size()));
    pairs[i].line = i;
  }
  for (const auto& p : pairs) ptrs.push_back(&p);
  return bytenmt::pad_batch(ptrs, sp);
}

inline std::string temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("bytenmt_test_" + tag + "_" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  return dir.string();
}

// Random valid UTF-8 string: codepoints drawn across the BMP and beyond,
// excluding surrogates.
inline std::string random_utf8(std::mt19937_64& rng, int max_chars = 40) {
  std::uniform_int_distribution<int> len_dist(0, max_chars);
  std::uniform_int_distribution<int> class_dist(0, 9);
  std::string out;
  const int n = len_dist(rng);
  for (int i = 0; i < n; ++i) {
    char32_t cp = 0;
    switch (class_dist(rng)) {
      case 0: case 1: case 2: case 3:  // ASCII
        cp = std::uniform_int_distribution<uint32_t>(0x20, 0x7E)(rng);
        break;
      case 4: case 5:  // two-byte range
        cp = std::uniform_int_distribution<uint32_t>(0x80, 0x7FF)(rng);
        break;
      case 6: case 7:  // three-byte range, skipping surrogates
        do {
          cp = std::uniform_int_distribution<uint32_t>(0x800, 0xFFFF)(rng);
        } while (cp >= 0xD800 && cp <= 0xDFFF);
        break;
      case 8:  // four-byte range
        cp = std::uniform_int_distribution<uint32_t>(0x10000, 0x10FFFF)(rng);
        break;
      default:  // control characters other than newline
        cp = std::uniform_int_distribution<uint32_t>(0x01, 0x09)(rng);
        break;
    }
    bytenmt::utf8::append(out, cp);
  }
  return out;
}

}  // namespace test_helpers
