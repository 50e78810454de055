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
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bytenmt/errors.hpp"
#include "bytenmt/model.hpp"
#include "bytenmt/tensor.hpp"

namespace bytenmt {

// Versioned binary snapshot: config as key-value text, free-form metadata
// (step, validation loss, sources), then named arrays with shape and raw
// little-endian payload. Round trips are bit-exact. Optimizer moments ride
// along under the "adam." prefix and are dropped by averaging.
template <typename T>
struct Checkpoint {
  ModelConfig config;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor<T>>> arrays;

  const Tensor<T>* find(const std::string& name) const {
    for (const auto& [n, t] : arrays)
      if (n == name) return &t;
    return nullptr;
  }
};

namespace ckpt_detail {

inline constexpr char kMagic[9] = "BNMTCKP1";

inline void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
  const uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw DataError("checkpoint truncated");
  return s;
}

}  // namespace ckpt_detail

template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::string& path) {
  namespace d = ckpt_detail;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(d::kMagic, 8);
  d::write_u32(out, static_cast<uint32_t>(sizeof(T)));
  const auto kv = ckpt.config.to_kv();
  d::write_u32(out, static_cast<uint32_t>(kv.size()));
  for (const auto& [k, v] : kv) {
    d::write_string(out, k);
    d::write_string(out, v);
  }
  d::write_u32(out, static_cast<uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    d::write_string(out, k);
    d::write_string(out, v);
  }
  d::write_u32(out, static_cast<uint32_t>(ckpt.arrays.size()));
  for (const auto& [name, t] : ckpt.arrays) {
    d::write_string(out, name);
    d::write_u32(out, static_cast<uint32_t>(t.rows));
    d::write_u32(out, static_cast<uint32_t>(t.cols));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.size() * sizeof(T)));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  namespace d = ckpt_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, d::kMagic, 8) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path);
  const uint32_t dtype = d::read_u32(in);
  if (dtype != sizeof(T))
    throw DataError("checkpoint scalar width " + std::to_string(dtype) + " does not match " +
                    std::to_string(sizeof(T)) + ": " + path);
  Checkpoint<T> ckpt;
  std::map<std::string, std::string> kv;
  const uint32_t n_config = d::read_u32(in);
  for (uint32_t i = 0; i < n_config; ++i) {
    auto k = d::read_string(in);
    kv[k] = d::read_string(in);
  }
  ckpt.config = ModelConfig::from_kv(kv);
  const uint32_t n_meta = d::read_u32(in);
  for (uint32_t i = 0; i < n_meta; ++i) {
    auto k = d::read_string(in);
    ckpt.meta[k] = d::read_string(in);
  }
  const uint32_t n_arrays = d::read_u32(in);
  for (uint32_t i = 0; i < n_arrays; ++i) {
    auto name = d::read_string(in);
    const int rows = static_cast<int>(d::read_u32(in));
    const int cols = static_cast<int>(d::read_u32(in));
    Tensor<T> t(rows, cols);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.size() * sizeof(T)));
    if (!in) throw DataError("checkpoint truncated: " + path);
    ckpt.arrays.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

template <typename T>
Checkpoint<T> checkpoint_from_params(const ModelParams<T>& params,
                                     std::map<std::string, std::string> meta = {}) {
  Checkpoint<T> ckpt;
  ckpt.config = params.config;
  ckpt.meta = std::move(meta);
  ckpt.arrays = params.params;
  return ckpt;
}

template <typename T>
ModelParams<T> params_from_checkpoint(const Checkpoint<T>& ckpt) {
  ModelParams<T> mp;
  mp.config = ckpt.config;
  mp.config.validate();
  for_each_param_shape(ckpt.config, [&](const std::string& name, int rows, int cols) {
    const Tensor<T>* t = ckpt.find(name);
    if (!t) throw DataError("checkpoint is missing parameter: " + name);
    if (t->rows != rows || t->cols != cols)
      throw DataError("checkpoint parameter " + name + " has unexpected shape");
    mp.index[name] = static_cast<int>(mp.params.size());
    mp.params.emplace_back(name, *t);
  });
  if (ckpt.config.positions == PositionKind::kSinusoidal)
    mp.sin_positions = sinusoid_positions<T>(ckpt.config.max_len, ckpt.config.d_model);
  return mp;
}

// Elementwise mean of the model parameters of several checkpoints.
// Optimizer state is dropped; metadata records the source steps.
// Accumulation runs in 64-bit so averaging identical checkpoints is exact.
template <typename T>
Checkpoint<T> average_checkpoints(const std::vector<Checkpoint<T>>& ckpts) {
  if (ckpts.empty()) throw std::invalid_argument("average_checkpoints: no checkpoints");
  const auto ref_kv = ckpts.front().config.to_kv();
  for (const auto& c : ckpts)
    if (c.config.to_kv() != ref_kv)
      throw std::invalid_argument("average_checkpoints: configs differ");

  Checkpoint<T> out;
  out.config = ckpts.front().config;
  std::string sources;
  for (const auto& c : ckpts) {
    auto it = c.meta.find("step");
    if (!sources.empty()) sources += ',';
    sources += it == c.meta.end() ? "?" : it->second;
  }
  out.meta["averaged_from"] = sources;

  for_each_param_shape(out.config, [&](const std::string& name, int rows, int cols) {
    std::vector<double> acc(static_cast<size_t>(rows) * cols, 0.0);
    for (const auto& c : ckpts) {
      const Tensor<T>* t = c.find(name);
      if (!t) throw std::invalid_argument("average_checkpoints: missing parameter " + name);
      if (t->rows != rows || t->cols != cols)
        throw std::invalid_argument("average_checkpoints: shape mismatch for " + name);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(t->data[i]);
    }
    Tensor<T> mean(rows, cols);
    const double inv = 1.0 / static_cast<double>(ckpts.size());
    for (size_t i = 0; i < acc.size(); ++i) mean.data[i] = static_cast<T>(acc[i] * inv);
    out.arrays.emplace_back(name, std::move(mean));
  });
  return out;
}

}  // namespace bytenmt
