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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bytenmt/checkpoint.hpp"
#include "bytenmt/corpus.hpp"
#include "bytenmt/errors.hpp"
#include "bytenmt/model.hpp"
#include "bytenmt/optim.hpp"

namespace bytenmt {

struct TrainConfig {
  double peak_lr = 5e-4;
  int64_t warmup = 4000;
  double weight_decay = 1e-4;
  int64_t steps = 5000;
  uint64_t seed = 1;
  int64_t validate_every = 200;
  int keep_top_k = 5;
  bool freeze_scales = false;
  double clip_norm = 0.0;  // 0 = off
  AdamConfig adam;

  void validate() const {
    if (warmup < 1) throw UsageError("train config: warmup must be >= 1");
    if (steps < 0) throw UsageError("train config: steps must be >= 0");
    if (validate_every < 1) throw UsageError("train config: validate_every must be >= 1");
    if (keep_top_k < 1) throw UsageError("train config: keep_top_k must be >= 1");
    if (peak_lr <= 0.0) throw UsageError("train config: peak_lr must be positive");
  }
};

// Zeroes each active row with probability p and rescales survivors by
// 1/(1-p). In embeddingless mode this coincides with elementwise dropout
// on the one-hot decoder input, which is the effect being controlled for.
template <typename T>
void token_dropout(Tensor<T>& rows, double p, std::mt19937_64& rng,
                   const std::vector<uint8_t>& row_active = {}) {
  if (p == 0.0) return;
  const Tensor<T> mask = row_dropout_mask<T>(rows.rows, rows.cols, p, rng, row_active);
  rows.map() = rows.map().cwiseProduct(mask.map());
}

struct MetricsRecord {
  int64_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct CheckpointEntry {
  int64_t step = 0;
  double valid_loss = 0.0;
  std::string path;
};

struct TrainResult {
  std::vector<MetricsRecord> metrics;
  std::vector<CheckpointEntry> best;  // ascending validation loss, ties by earlier step
  std::string metrics_path;
  int64_t steps_run = 0;
  bool stopped_early = false;
};

// Token-weighted mean validation loss with every form of dropout disabled.
template <typename T>
double validation_loss(ModelParams<T>& params, const std::vector<Batch>& valid_batches) {
  double total = 0.0;
  int64_t tokens = 0;
  for (const auto& batch : valid_batches) {
    Graph<T> g;
    BoundParams<T> bp = bind_params(g, params, /*with_grad=*/false);
    int count = 0;
    Var<T> loss = batch_loss(bp, batch, transformer_forward(bp, batch, /*train=*/false), &count);
    total += static_cast<double>(loss.value()(0, 0)) * count;
    tokens += count;
  }
  if (tokens == 0) throw DataError("validation_loss: validation set is empty");
  return total / static_cast<double>(tokens);
}

namespace train_detail {

inline void write_manifest(const std::string& dir, const std::vector<CheckpointEntry>& best) {
  std::ofstream out(dir + "/best_k.txt", std::ios::binary);
  if (!out) throw DataError("cannot write manifest in " + dir);
  for (const auto& e : best) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%lld\t%.10g\t", static_cast<long long>(e.step), e.valid_loss);
    out << buf << std::filesystem::path(e.path).filename().string() << '\n';
  }
}

}  // namespace train_detail

// Optimization loop: Adam with the inverse-sqrt schedule, per-epoch batch
// shuffling, periodic validation, and top-k checkpoint retention. A stop
// callback (invoked after each validation) may end the run early. All
// randomness is derived from tc.seed, so a fixed seed reproduces the
// metrics log byte for byte.
template <typename T>
TrainResult train_loop(ModelParams<T>& params, AdamState<T>& opt,
                       const std::vector<Batch>& train_batches,
                       const std::vector<Batch>& valid_batches, const TrainConfig& tc,
                       const std::string& out_dir,
                       const std::function<bool(int64_t, ModelParams<T>&)>& stop_after_validation =
                           nullptr) {
  tc.validate();
  if (train_batches.empty()) throw DataError("train_loop: no training batches");
  std::filesystem::create_directories(out_dir);

  TrainResult result;
  result.metrics_path = out_dir + "/metrics.tsv";
  std::ofstream metrics_out(result.metrics_path, std::ios::binary);
  if (!metrics_out) throw DataError("cannot write metrics log: " + result.metrics_path);

  std::mt19937_64 shuffle_rng(tc.seed * 0x9E3779B97F4A7C15ULL + 1);
  std::mt19937_64 dropout_rng(tc.seed * 0x9E3779B97F4A7C15ULL + 2);

  const auto save_step_checkpoint = [&](int64_t step, double vloss) {
    char name[48];
    std::snprintf(name, sizeof(name), "ckpt_%lld.bin", static_cast<long long>(step));
    const std::string path = out_dir + "/" + name;
    Checkpoint<T> ckpt = checkpoint_from_params(params);
    ckpt.meta["step"] = std::to_string(step);
    ckpt.meta["valid_loss"] = detail::fmt_double(vloss);
    for (size_t i = 0; i < params.params.size(); ++i) {
      ckpt.arrays.emplace_back("adam.m." + params.params[i].first, opt.m[i]);
      ckpt.arrays.emplace_back("adam.v." + params.params[i].first, opt.v[i]);
    }
    ckpt.meta["adam.step"] = std::to_string(opt.step);
    save_checkpoint(ckpt, path);
    return path;
  };

  const auto retain_top_k = [&](int64_t step, double vloss) {
    const std::string path = save_step_checkpoint(step, vloss);
    result.best.push_back({step, vloss, path});
    std::sort(result.best.begin(), result.best.end(),
              [](const CheckpointEntry& a, const CheckpointEntry& b) {
                if (a.valid_loss != b.valid_loss) return a.valid_loss < b.valid_loss;
                return a.step < b.step;
              });
    while (result.best.size() > static_cast<size_t>(tc.keep_top_k)) {
      std::filesystem::remove(result.best.back().path);
      result.best.pop_back();
    }
    train_detail::write_manifest(out_dir, result.best);
  };

  if (tc.steps == 0) {
    retain_top_k(0, validation_loss(params, valid_batches));
    return result;
  }

  std::vector<size_t> order(train_batches.size());
  std::iota(order.begin(), order.end(), size_t{0});
  size_t cursor = order.size();  // forces a shuffle before the first step

  double window_loss = 0.0;
  int64_t window_tokens = 0;
  std::vector<Tensor<T>*> grads(params.params.size(), nullptr);

  for (int64_t step = 1; step <= tc.steps; ++step) {
    if (cursor >= order.size()) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
    }
    const Batch& batch = train_batches[order[cursor++]];

    Graph<T> g;
    BoundParams<T> bp = bind_params(g, params, /*with_grad=*/true);
    int count = 0;
    Var<T> loss = batch_loss(bp, batch, transformer_forward(bp, batch, true, &dropout_rng), &count);
    const double loss_value = static_cast<double>(loss.value()(0, 0));
    if (!std::isfinite(loss_value)) {
      save_step_checkpoint(step - 1, std::numeric_limits<double>::quiet_NaN());
      throw DivergenceError("training loss is not finite at step " + std::to_string(step) +
                            "; last good parameters saved");
    }
    g.backward(loss.id);
    for (size_t i = 0; i < bp.vars.size(); ++i) grads[i] = &bp.vars[i].grad();
    if (tc.clip_norm > 0.0) clip_grad_norm(grads, tc.clip_norm);

    const double lr = lr_inverse_sqrt(step, tc.peak_lr, tc.warmup);
    try {
      adam_step(params, grads, opt, lr, tc.adam, tc.weight_decay, tc.freeze_scales);
    } catch (const DivergenceError& e) {
      save_step_checkpoint(step - 1, std::numeric_limits<double>::quiet_NaN());
      throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step) +
                            "; last good parameters saved");
    }
    window_loss += loss_value * count;
    window_tokens += count;
    result.steps_run = step;

    if (step % tc.validate_every == 0 || step == tc.steps) {
      const double vloss = validation_loss(params, valid_batches);
      const double train_loss = window_tokens > 0 ? window_loss / window_tokens : 0.0;
      window_loss = 0.0;
      window_tokens = 0;
      result.metrics.push_back({step, lr, train_loss, vloss});
      char line[128];
      std::snprintf(line, sizeof(line), "%lld\t%.10g\t%.10g\t%.10g\n",
                    static_cast<long long>(step), lr, train_loss, vloss);
      metrics_out << line;
      metrics_out.flush();
      retain_top_k(step, vloss);
      if (stop_after_validation && stop_after_validation(step, params)) {
        result.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace bytenmt
