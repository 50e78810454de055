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
#include <stdexcept>
#include <string>
#include <vector>

#include "bytenmt/errors.hpp"
#include "bytenmt/model.hpp"
#include "bytenmt/tensor.hpp"

namespace bytenmt {

// lr(step) = peak * min(step/warmup, sqrt(warmup/step)). Linear ramp to the
// peak at step == warmup, inverse-sqrt decay after.
inline double lr_inverse_sqrt(int64_t step, double peak, int64_t warmup) {
  if (step < 1) throw std::invalid_argument("lr_inverse_sqrt: step must be >= 1");
  if (warmup < 1) throw std::invalid_argument("lr_inverse_sqrt: warmup must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return peak * std::min(s / w, std::sqrt(w / s));
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  int64_t step = 0;

  static AdamState init(const ModelParams<T>& params) {
    AdamState st;
    st.m.reserve(params.params.size());
    st.v.reserve(params.params.size());
    for (const auto& [name, t] : params.params) {
      st.m.emplace_back(t.rows, t.cols);
      st.v.emplace_back(t.rows, t.cols);
    }
    return st;
  }
};

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
template <typename T>
double clip_grad_norm(std::vector<Tensor<T>*>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto* g : grads)
    for (T v : g->data) sq += static_cast<double>(v) * static_cast<double>(v);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto* g : grads)
      for (T& v : g->data) v *= scale;
  }
  return norm;
}

// One Adam update with bias correction. Weight decay is coupled L2: it is
// added to the gradient before the moment updates. Math runs in 64-bit;
// parameter storage stays in T.
template <typename T>
void adam_step(ModelParams<T>& params, const std::vector<Tensor<T>*>& grads, AdamState<T>& state,
               double lr, const AdamConfig& cfg, double weight_decay = 0.0,
               bool freeze_scales = false) {
  if (grads.size() != params.params.size() || state.m.size() != params.params.size())
    throw std::invalid_argument("adam_step: gradient/state alignment mismatch");
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i]->all_finite())
      throw DivergenceError("non-finite gradient in parameter " + params.params[i].first);
    if (!grads[i]->same_shape(params.params[i].second))
      throw std::invalid_argument("adam_step: gradient shape mismatch for " +
                                  params.params[i].first);
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < grads.size(); ++i) {
    const std::string& name = params.params[i].first;
    if (freeze_scales && name.rfind("scale.", 0) == 0) continue;
    Tensor<T>& theta = params.params[i].second;
    Tensor<T>& m = state.m[i];
    Tensor<T>& v = state.v[i];
    const Tensor<T>& g = *grads[i];
    for (size_t j = 0; j < theta.size(); ++j) {
      const double gj = static_cast<double>(g.data[j]) + weight_decay * static_cast<double>(theta.data[j]);
      const double mj = cfg.beta1 * static_cast<double>(m.data[j]) + (1.0 - cfg.beta1) * gj;
      const double vj = cfg.beta2 * static_cast<double>(v.data[j]) + (1.0 - cfg.beta2) * gj * gj;
      m.data[j] = static_cast<T>(mj);
      v.data[j] = static_cast<T>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      theta.data[j] = static_cast<T>(static_cast<double>(theta.data[j]) -
                                     lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

}  // namespace bytenmt
