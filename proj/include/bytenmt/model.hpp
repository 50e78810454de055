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
#include <functional>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "bytenmt/autograd.hpp"
#include "bytenmt/corpus.hpp"
#include "bytenmt/errors.hpp"
#include "bytenmt/tensor.hpp"
#include "bytenmt/vocab.hpp"

namespace bytenmt {

enum class ModelMode { kEmbedding, kEmbeddingless };
enum class PositionKind { kSinusoidal, kLearned };

inline const char* mode_name(ModelMode m) {
  return m == ModelMode::kEmbedding ? "embedding" : "embeddingless";
}

inline ModelMode mode_from_name(std::string_view name) {
  if (name == "embedding") return ModelMode::kEmbedding;
  if (name == "embeddingless") return ModelMode::kEmbeddingless;
  throw UsageError("unknown model mode: " + std::string(name));
}

// Architecture and regularization knobs. Full scale is d=512/ffn=1024/
// 6 layers/4 heads; desk scale defaults below train on a laptop CPU.
struct ModelConfig {
  ModelMode mode = ModelMode::kEmbedding;
  Scheme scheme = Scheme::kByte;
  int vocab_size = 260;
  int d_model = 64;
  int ffn_dim = 128;
  int layers = 2;
  int heads = 2;
  double dropout = 0.2;        // residual-sublayer and input dropout
  double token_dropout = 0.0;  // decoder-input row dropout
  int max_len = 1024;
  double label_smoothing = 0.1;
  PositionKind positions = PositionKind::kSinusoidal;
  int32_t pad_id = -1, bos_id = -1, eos_id = -1, unk_id = -1;

  static ModelConfig full_scale() {
    ModelConfig c;
    c.d_model = 512;
    c.ffn_dim = 1024;
    c.layers = 6;
    c.heads = 4;
    return c;
  }

  void set_specials(const Specials& sp) {
    pad_id = sp.pad;
    bos_id = sp.bos;
    eos_id = sp.eos;
    unk_id = sp.unk;
  }

  void validate() const {
    if (vocab_size < 2) throw UsageError("config: vocab_size must be at least 2");
    if (d_model < 1 || ffn_dim < 1 || layers < 1 || heads < 1 || max_len < 1)
      throw UsageError("config: dimensions must be positive");
    if (d_model % heads != 0) throw UsageError("config: d_model must be divisible by heads");
    if (mode == ModelMode::kEmbeddingless && vocab_size > d_model)
      throw UsageError("config: embeddingless mode requires vocab_size <= d_model (" +
                       std::to_string(vocab_size) + " > " + std::to_string(d_model) + ")");
    if (dropout < 0.0 || dropout >= 1.0) throw UsageError("config: dropout must be in [0, 1)");
    if (token_dropout < 0.0 || token_dropout >= 1.0)
      throw UsageError("config: token_dropout must be in [0, 1)");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0)
      throw UsageError("config: label_smoothing must be in [0, 1)");
    if (pad_id < 0 || bos_id < 0 || eos_id < 0)
      throw UsageError("config: special token ids are unset");
  }

  // Width of the output logits: vocab projection in embedding mode, the
  // full latent dimension in embeddingless mode.
  int logit_dim() const { return mode == ModelMode::kEmbedding ? vocab_size : d_model; }

  std::map<std::string, std::string> to_kv() const;
  static ModelConfig from_kv(const std::map<std::string, std::string>& kv);
};

namespace detail {
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline std::map<std::string, std::string> ModelConfig::to_kv() const {
  return {
      {"mode", mode_name(mode)},
      {"scheme", scheme_name(scheme)},
      {"vocab_size", std::to_string(vocab_size)},
      {"d_model", std::to_string(d_model)},
      {"ffn_dim", std::to_string(ffn_dim)},
      {"layers", std::to_string(layers)},
      {"heads", std::to_string(heads)},
      {"dropout", detail::fmt_double(dropout)},
      {"token_dropout", detail::fmt_double(token_dropout)},
      {"max_len", std::to_string(max_len)},
      {"label_smoothing", detail::fmt_double(label_smoothing)},
      {"positions", positions == PositionKind::kSinusoidal ? "sinusoidal" : "learned"},
      {"pad_id", std::to_string(pad_id)},
      {"bos_id", std::to_string(bos_id)},
      {"eos_id", std::to_string(eos_id)},
      {"unk_id", std::to_string(unk_id)},
  };
}

inline ModelConfig ModelConfig::from_kv(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  const auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(std::string("checkpoint config missing key: ") + key);
    return it->second;
  };
  c.mode = mode_from_name(get("mode"));
  c.scheme = scheme_from_name(get("scheme"));
  c.vocab_size = std::stoi(get("vocab_size"));
  c.d_model = std::stoi(get("d_model"));
  c.ffn_dim = std::stoi(get("ffn_dim"));
  c.layers = std::stoi(get("layers"));
  c.heads = std::stoi(get("heads"));
  c.dropout = std::stod(get("dropout"));
  c.token_dropout = std::stod(get("token_dropout"));
  c.max_len = std::stoi(get("max_len"));
  c.label_smoothing = std::stod(get("label_smoothing"));
  c.positions = get("positions") == "learned" ? PositionKind::kLearned : PositionKind::kSinusoidal;
  c.pad_id = std::stoi(get("pad_id"));
  c.bos_id = std::stoi(get("bos_id"));
  c.eos_id = std::stoi(get("eos_id"));
  c.unk_id = std::stoi(get("unk_id"));
  return c;
}

// Single source of truth for trainable array names and shapes; parameter
// initialization, the optimizer, checkpoints, and param_count all walk this
// enumeration in the same order.
template <typename Fn>
void for_each_param_shape(const ModelConfig& c, Fn&& fn) {
  const int d = c.d_model, f = c.ffn_dim;
  if (c.mode == ModelMode::kEmbedding) {
    fn("embedding", c.vocab_size, d);
  } else {
    fn("scale.enc", 1, 1);
    fn("scale.dec_in", 1, 1);
    fn("scale.dec_out", 1, 1);
  }
  if (c.positions == PositionKind::kLearned) fn("pos", c.max_len, d);
  const auto attn = [&](const std::string& prefix) {
    fn(prefix + ".wq", d, d);
    fn(prefix + ".bq", 1, d);
    fn(prefix + ".wk", d, d);
    fn(prefix + ".bk", 1, d);
    fn(prefix + ".wv", d, d);
    fn(prefix + ".bv", 1, d);
    fn(prefix + ".wo", d, d);
    fn(prefix + ".bo", 1, d);
  };
  const auto ln = [&](const std::string& prefix) {
    fn(prefix + ".g", 1, d);
    fn(prefix + ".b", 1, d);
  };
  const auto ffn = [&](const std::string& prefix) {
    fn(prefix + ".w1", d, f);
    fn(prefix + ".b1", 1, f);
    fn(prefix + ".w2", f, d);
    fn(prefix + ".b2", 1, d);
  };
  for (int i = 0; i < c.layers; ++i) {
    const std::string p = "enc." + std::to_string(i);
    attn(p + ".self");
    ln(p + ".ln1");
    ffn(p + ".ffn");
    ln(p + ".ln2");
  }
  for (int i = 0; i < c.layers; ++i) {
    const std::string p = "dec." + std::to_string(i);
    attn(p + ".self");
    ln(p + ".ln1");
    attn(p + ".cross");
    ln(p + ".ln2");
    ffn(p + ".ffn");
    ln(p + ".ln3");
  }
}

struct ParamCount {
  std::map<std::string, int64_t> by_component;
  int64_t total = 0;
};

// Exact trainable parameter counts, grouped by top-level component.
inline ParamCount param_count(const ModelConfig& config) {
  ParamCount pc;
  for_each_param_shape(config, [&](const std::string& name, int rows, int cols) {
    const int64_t n = static_cast<int64_t>(rows) * cols;
    std::string component = name.substr(0, name.find('.'));
    if (component == "enc" || component == "dec")
      component = component == "enc" ? "encoder" : "decoder";
    else if (component == "scale")
      component = "scales";
    pc.by_component[component] += n;
    pc.total += n;
  });
  return pc;
}

// The fixed sinusoid table P[pos][2i] = sin(pos / 10000^(2i/d)),
// P[pos][2i+1] = cos of the same angle.
template <typename T>
Tensor<T> sinusoid_positions(int max_len, int d) {
  Tensor<T> p(max_len, d);
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i * 2 < d; ++i) {
      const double angle = pos / std::pow(10000.0, (2.0 * i) / d);
      p(pos, 2 * i) = static_cast<T>(std::sin(angle));
      if (2 * i + 1 < d) p(pos, 2 * i + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return p;
}

// All trainable arrays of one model plus the fixed sinusoid table.
template <typename T>
struct ModelParams {
  ModelConfig config;
  std::vector<std::pair<std::string, Tensor<T>>> params;
  std::unordered_map<std::string, int> index;
  Tensor<T> sin_positions;

  static ModelParams init(const ModelConfig& config, uint64_t seed) {
    config.validate();
    ModelParams mp;
    mp.config = config;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const double emb_std = 1.0 / std::sqrt(static_cast<double>(config.d_model));
    for_each_param_shape(config, [&](const std::string& name, int rows, int cols) {
      Tensor<T> t(rows, cols);
      if (name.rfind("scale.", 0) == 0) {
        t(0, 0) = static_cast<T>(std::sqrt(static_cast<double>(config.d_model)));
      } else if (name == "embedding" || name == "pos") {
        for (T& v : t.data) v = static_cast<T>(normal(rng) * emb_std);
      } else if (name.size() > 2 && name[name.size() - 2] == '.' &&
                 (name.back() == 'g')) {  // layer-norm gain
        t.fill(T(1));
      } else if (name.find(".w") != std::string::npos) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        for (T& v : t.data) v = static_cast<T>(uniform(rng) * limit);
      }  // biases and layer-norm shifts stay zero
      mp.index[name] = static_cast<int>(mp.params.size());
      mp.params.emplace_back(name, std::move(t));
    });
    if (config.positions == PositionKind::kSinusoidal)
      mp.sin_positions = sinusoid_positions<T>(config.max_len, config.d_model);
    return mp;
  }

  Tensor<T>& param(const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw std::invalid_argument("unknown parameter: " + name);
    return params[it->second].second;
  }
  const Tensor<T>& param(const std::string& name) const {
    return const_cast<ModelParams*>(this)->param(name);
  }

  int64_t num_params() const {
    int64_t n = 0;
    for (const auto& [name, t] : params) n += static_cast<int64_t>(t.size());
    return n;
  }
};

// Parameters registered as leaves of one graph, aligned with
// ModelParams::params so gradients can be read back by position.
template <typename T>
struct BoundParams {
  ModelParams<T>* model = nullptr;
  Graph<T>* graph = nullptr;
  std::vector<Var<T>> vars;

  Var<T> operator[](const std::string& name) const {
    return vars[model->index.at(name)];
  }
  const ModelConfig& config() const { return model->config; }
};

template <typename T>
BoundParams<T> bind_params(Graph<T>& g, ModelParams<T>& mp, bool with_grad) {
  BoundParams<T> bp;
  bp.model = &mp;
  bp.graph = &g;
  bp.vars.reserve(mp.params.size());
  for (auto& [name, tensor] : mp.params) bp.vars.push_back(leaf(g, tensor, with_grad));
  return bp;
}

// Fixed one-hot rows: row i carries 1 at column ids[i]; pad rows are
// all-zero so padding contributes nothing downstream.
template <typename T>
Tensor<T> one_hot(const std::vector<int32_t>& ids, int d, int32_t pad_id) {
  Tensor<T> x(static_cast<int>(ids.size()), d);
  for (size_t i = 0; i < ids.size(); ++i) {
    const int32_t id = ids[i];
    if (id == pad_id) continue;
    if (id < 0 || id >= d)
      throw std::invalid_argument("one_hot: id " + std::to_string(id) +
                                  " does not fit in dimension " + std::to_string(d));
    x(static_cast<int>(i), id) = T(1);
  }
  return x;
}

// mask[i][j] = 0 with probability p, else 1/(1-p).
template <typename T>
Tensor<T> dropout_mask(int rows, int cols, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout_mask: p must be in [0, 1)");
  Tensor<T> m(rows, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (T& v : m.data) v = (u(rng) < p) ? T(0) : keep;
  return m;
}

// Whole-row dropout; a draw is made only for rows marked active, so pad
// rows are never touched.
template <typename T>
Tensor<T> row_dropout_mask(int rows, int cols, double p, std::mt19937_64& rng,
                           const std::vector<uint8_t>& row_active) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("row_dropout_mask: p must be in [0, 1)");
  Tensor<T> m = Tensor<T>::full(rows, cols, T(1));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (int r = 0; r < rows; ++r) {
    if (!row_active.empty() && !row_active[r]) continue;
    const T v = (u(rng) < p) ? T(0) : keep;
    T* row = m.row_ptr(r);
    for (int j = 0; j < cols; ++j) row[j] = v;
  }
  return m;
}

enum class InputSite { kEncoder, kDecoderIn };

namespace detail {

template <typename T>
Tensor<T> tile_rows(const Tensor<T>& table, int batch, int len, int d) {
  Tensor<T> tiled(batch * len, d);
  for (int b = 0; b < batch; ++b)
    for (int i = 0; i < len; ++i)
      std::copy(table.row_ptr(i), table.row_ptr(i) + d, tiled.row_ptr(b * len + i));
  return tiled;
}

// x + P tiled per sentence. Learned position tables receive gradients
// summed across the batch; the sinusoid table is a fixed constant.
template <typename T>
Var<T> add_positions(BoundParams<T>& bp, Var<T> x, int batch, int len) {
  const ModelConfig& c = bp.config();
  if (len > c.max_len)
    throw std::invalid_argument("sequence length " + std::to_string(len) +
                                " exceeds max_len " + std::to_string(c.max_len));
  if (c.positions == PositionKind::kSinusoidal)
    return add_tensor(x, tile_rows(bp.model->sin_positions, batch, len, c.d_model));

  Graph<T>& g = *bp.graph;
  Var<T> pos = bp[std::string("pos")];
  Tensor<T> out = x.value();
  out.map() += tile_rows(pos.value(), batch, len, c.d_model).map();
  const int xid = x.id, pid = pos.id, d = c.d_model;
  int id = g.add_node(std::move(out), {xid, pid}, [xid, pid, batch, len, d](Graph<T>& g, int self) {
    const Tensor<T>& go = g.grad(self);
    if (g.needs_grad(xid)) g.grad(xid).map() += go.map();
    if (g.needs_grad(pid)) {
      Tensor<T>& gp = g.grad(pid);
      for (int b = 0; b < batch; ++b)
        for (int i = 0; i < len; ++i) {
          const T* src = go.row_ptr(b * len + i);
          T* dst = gp.row_ptr(i);
          for (int j = 0; j < d; ++j) dst[j] += src[j];
        }
    }
  });
  return {&g, id};
}

inline std::vector<uint8_t> active_rows(const std::vector<int32_t>& ids, int32_t pad_id) {
  std::vector<uint8_t> act(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) act[i] = ids[i] != pad_id ? 1 : 0;
  return act;
}

}  // namespace detail

// Token rows entering the encoder or decoder stack:
//   embedding mode     sqrt(d) * (X E) + P, dropout after adding positions
//   embeddingless mode s * X + P, with decoder-input dropout applied to the
//                      scaled one-hot rows before positions (dropping a row
//                      removes the token's identity but keeps its position)
//                      and no dropout at all on the encoder input
// Token dropout (any mode) zeroes whole rows before positions are added.
template <typename T>
Var<T> input_rows(BoundParams<T>& bp, const std::vector<int32_t>& ids, int batch, int len,
                  InputSite site, bool train, std::mt19937_64* rng) {
  const ModelConfig& c = bp.config();
  Graph<T>& g = *bp.graph;
  if (static_cast<int>(ids.size()) != batch * len)
    throw std::invalid_argument("input_rows: id count does not match batch layout");
  const bool decoder = site == InputSite::kDecoderIn;

  Var<T> rows;
  if (c.mode == ModelMode::kEmbedding) {
    for (int32_t id : ids)
      if (id != c.pad_id && id >= c.vocab_size)
        throw std::invalid_argument("input_rows: token id out of vocab range");
    rows = rows_lookup(bp[std::string("embedding")], ids, c.pad_id);
    rows = scale_const(rows, static_cast<T>(std::sqrt(static_cast<double>(c.d_model))));
  } else {
    rows = constant(g, one_hot<T>(ids, c.d_model, c.pad_id));
    rows = scale_by(rows, bp[std::string(decoder ? "scale.dec_in" : "scale.enc")]);
  }

  if (decoder && train && c.token_dropout > 0.0) {
    if (!rng) throw std::invalid_argument("input_rows: dropout requires an RNG");
    rows = mul_mask(rows, row_dropout_mask<T>(batch * len, c.d_model, c.token_dropout, *rng,
                                              detail::active_rows(ids, c.pad_id)));
  }
  if (c.mode == ModelMode::kEmbeddingless && decoder && train && c.dropout > 0.0) {
    if (!rng) throw std::invalid_argument("input_rows: dropout requires an RNG");
    rows = mul_mask(rows, dropout_mask<T>(batch * len, c.d_model, c.dropout, *rng));
  }

  Var<T> x = detail::add_positions(bp, rows, batch, len);

  if (c.mode == ModelMode::kEmbedding && train && c.dropout > 0.0) {
    if (!rng) throw std::invalid_argument("input_rows: dropout requires an RNG");
    x = mul_mask(x, dropout_mask<T>(batch * len, c.d_model, c.dropout, *rng));
  }
  return x;
}

template <typename T>
Var<T> encoder_input(BoundParams<T>& bp, const std::vector<int32_t>& ids, bool train,
                     std::mt19937_64* rng = nullptr) {
  return input_rows(bp, ids, 1, static_cast<int>(ids.size()), InputSite::kEncoder, train, rng);
}

template <typename T>
Var<T> decoder_input(BoundParams<T>& bp, const std::vector<int32_t>& ids, bool train,
                     std::mt19937_64* rng = nullptr) {
  return input_rows(bp, ids, 1, static_cast<int>(ids.size()), InputSite::kDecoderIn, train, rng);
}

namespace detail {

// Post-norm residual wiring: x = LN(x + dropout(sublayer_out)).
template <typename T>
Var<T> residual(BoundParams<T>& bp, Var<T> x, Var<T> sub, const std::string& ln_prefix, bool train,
                std::mt19937_64* rng) {
  const ModelConfig& c = bp.config();
  if (train && c.dropout > 0.0)
    sub = mul_mask(sub, dropout_mask<T>(sub.rows(), sub.cols(), c.dropout, *rng));
  return layer_norm(add(x, sub), bp[ln_prefix + ".g"], bp[ln_prefix + ".b"]);
}

template <typename T>
Var<T> attn_block(BoundParams<T>& bp, const std::string& prefix, Var<T> x, Var<T> memory,
                  const AttnShape& shape) {
  Var<T> q = linear(x, bp[prefix + ".wq"], bp[prefix + ".bq"]);
  Var<T> k = linear(memory, bp[prefix + ".wk"], bp[prefix + ".bk"]);
  Var<T> v = linear(memory, bp[prefix + ".wv"], bp[prefix + ".bv"]);
  Var<T> a = attention(q, k, v, shape);
  return linear(a, bp[prefix + ".wo"], bp[prefix + ".bo"]);
}

template <typename T>
Var<T> ffn_block(BoundParams<T>& bp, const std::string& prefix, Var<T> x) {
  Var<T> h = relu(linear(x, bp[prefix + ".w1"], bp[prefix + ".b1"]));
  return linear(h, bp[prefix + ".w2"], bp[prefix + ".b2"]);
}

}  // namespace detail

template <typename T>
Var<T> encoder_stack(BoundParams<T>& bp, Var<T> x, const AttnShape& self_shape, bool train,
                     std::mt19937_64* rng) {
  const ModelConfig& c = bp.config();
  for (int i = 0; i < c.layers; ++i) {
    const std::string p = "enc." + std::to_string(i);
    x = detail::residual(bp, x, detail::attn_block(bp, p + ".self", x, x, self_shape), p + ".ln1",
                         train, rng);
    x = detail::residual(bp, x, detail::ffn_block(bp, p + ".ffn", x), p + ".ln2", train, rng);
  }
  return x;
}

template <typename T>
Var<T> decoder_stack(BoundParams<T>& bp, Var<T> x, Var<T> memory, const AttnShape& self_shape,
                     const AttnShape& cross_shape, bool train, std::mt19937_64* rng) {
  const ModelConfig& c = bp.config();
  for (int i = 0; i < c.layers; ++i) {
    const std::string p = "dec." + std::to_string(i);
    x = detail::residual(bp, x, detail::attn_block(bp, p + ".self", x, x, self_shape), p + ".ln1",
                         train, rng);
    x = detail::residual(bp, x, detail::attn_block(bp, p + ".cross", x, memory, cross_shape),
                         p + ".ln2", train, rng);
    x = detail::residual(bp, x, detail::ffn_block(bp, p + ".ffn", x), p + ".ln3", train, rng);
  }
  return x;
}

// Full encoder-decoder pass over one padded batch. Returns logits of shape
// [B*tgt_len x logit_dim()]: the tied projection Y E^T in embedding mode,
// s_dec_out * Y (no dropout) in embeddingless mode.
template <typename T>
Var<T> transformer_forward(BoundParams<T>& bp, const Batch& batch, bool train,
                           std::mt19937_64* rng = nullptr) {
  const ModelConfig& c = bp.config();
  if (train && (c.dropout > 0.0 || c.token_dropout > 0.0) && !rng)
    throw std::invalid_argument("transformer_forward: training with dropout requires an RNG");
  AttnShape enc_shape{batch.batch_size, batch.src_len, batch.src_len,
                      batch.src_lens,   batch.src_lens, c.heads,
                      false};
  AttnShape dec_self{batch.batch_size, batch.tgt_len, batch.tgt_len,
                     batch.tgt_lens,   batch.tgt_lens, c.heads,
                     true};
  AttnShape dec_cross{batch.batch_size, batch.tgt_len, batch.src_len,
                      batch.tgt_lens,   batch.src_lens, c.heads,
                      false};

  Var<T> enc_x = input_rows(bp, batch.src_ids, batch.batch_size, batch.src_len,
                            InputSite::kEncoder, train, rng);
  Var<T> memory = encoder_stack(bp, enc_x, enc_shape, train, rng);

  Var<T> dec_x = input_rows(bp, batch.dec_in_ids, batch.batch_size, batch.tgt_len,
                            InputSite::kDecoderIn, train, rng);
  Var<T> y = decoder_stack(bp, dec_x, memory, dec_self, dec_cross, train, rng);

  if (c.mode == ModelMode::kEmbedding) return matmul_nt(y, bp[std::string("embedding")]);
  return scale_by(y, bp[std::string("scale.dec_out")]);
}

// Label-smoothed cross entropy against the batch's shifted targets,
// averaged over non-pad tokens.
template <typename T>
Var<T> batch_loss(BoundParams<T>& bp, const Batch& batch, Var<T> logits,
                  int* token_count = nullptr) {
  const ModelConfig& c = bp.config();
  return label_smoothed_ce(logits, batch.dec_out_ids, c.pad_id, c.label_smoothing, c.vocab_size,
                           token_count);
}

}  // namespace bytenmt
