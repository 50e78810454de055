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
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "bytenmt/tensor.hpp"

namespace bytenmt {

// Reverse-mode tape over Tensor-valued nodes. Nodes are appended in
// topological order by construction; backward walks the tape in reverse.
// One Graph instance serves one forward/backward pass and is cleared
// between steps.
template <typename T>
class Graph {
 public:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool needs_grad = false;
    std::vector<int> parents;
    std::function<void(Graph&, int)> backward;
  };

  int add_leaf(Tensor<T> value, bool needs_grad) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.grad = Tensor<T>::zeros(n.value.rows, n.value.cols);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int add_node(Tensor<T> value, std::vector<int> parents,
               std::function<void(Graph&, int)> backward_fn) {
    Node n;
    n.value = std::move(value);
    n.parents = std::move(parents);
    n.needs_grad = false;
    for (int p : n.parents) {
      if (nodes_[p].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    if (n.needs_grad) {
      n.grad = Tensor<T>::zeros(n.value.rows, n.value.cols);
      n.backward = std::move(backward_fn);
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  Tensor<T>& value(int id) { return nodes_[id].value; }
  const Tensor<T>& value(int id) const { return nodes_[id].value; }
  Tensor<T>& grad(int id) { return nodes_[id].grad; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable leaf.
  void backward(int loss_id) {
    auto& loss = nodes_[loss_id];
    if (loss.value.rows != 1 || loss.value.cols != 1)
      throw std::invalid_argument("backward: loss must be a scalar node");
    if (!loss.needs_grad)
      throw std::invalid_argument("backward: loss is detached from all parameters");
    if (!loss.value.all_finite())
      throw std::runtime_error("backward: loss is not finite");

    std::vector<uint8_t> reachable(nodes_.size(), 0);
    mark_reachable(loss_id, reachable);
    loss.grad(0, 0) = T(1);
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (reachable[id] && n.backward) n.backward(*this, id);
    }
  }

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

 private:
  void mark_reachable(int root, std::vector<uint8_t>& reachable) {
    std::vector<int> stack{root};
    reachable[root] = 1;
    while (!stack.empty()) {
      int id = stack.back();
      stack.pop_back();
      for (int p : nodes_[id].parents) {
        if (!reachable[p] && nodes_[p].needs_grad) {
          reachable[p] = 1;
          stack.push_back(p);
        }
      }
    }
  }

  std::vector<Node> nodes_;
};

// Lightweight handle to a tape node.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  int id = -1;

  Tensor<T>& value() const { return graph->value(id); }
  Tensor<T>& grad() const { return graph->grad(id); }
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
};

template <typename T>
Var<T> leaf(Graph<T>& g, Tensor<T> value, bool needs_grad = false) {
  return {&g, g.add_leaf(std::move(value), needs_grad)};
}

template <typename T>
Var<T> constant(Graph<T>& g, Tensor<T> value) {
  return {&g, g.add_leaf(std::move(value), false)};
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.graph;
  int aid = a.id, bid = b.id;
  int id = g.add_node(matmul(g.value(aid), g.value(bid)), {aid, bid},
                      [aid, bid](Graph<T>& g, int self) {
                        const Tensor<T>& go = g.grad(self);
                        if (g.needs_grad(aid)) g.grad(aid).map().noalias() += go.map() * g.value(bid).map().transpose();
                        if (g.needs_grad(bid)) g.grad(bid).map().noalias() += g.value(aid).map().transpose() * go.map();
                      });
  return {&g, id};
}

// a . b^T; used for the tied output head (logits = Y E^T).
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.graph;
  int aid = a.id, bid = b.id;
  int id = g.add_node(matmul_nt(g.value(aid), g.value(bid)), {aid, bid},
                      [aid, bid](Graph<T>& g, int self) {
                        const Tensor<T>& go = g.grad(self);
                        if (g.needs_grad(aid)) g.grad(aid).map().noalias() += go.map() * g.value(bid).map();
                        if (g.needs_grad(bid)) g.grad(bid).map().noalias() += go.map().transpose() * g.value(aid).map();
                      });
  return {&g, id};
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.graph;
  g.value(a.id).check_same_shape(g.value(b.id));
  int aid = a.id, bid = b.id;
  Tensor<T> out = g.value(aid);
  out.map() += g.value(bid).map();
  int id = g.add_node(std::move(out), {aid, bid}, [aid, bid](Graph<T>& g, int self) {
    const Tensor<T>& go = g.grad(self);
    if (g.needs_grad(aid)) g.grad(aid).map() += go.map();
    if (g.needs_grad(bid)) g.grad(bid).map() += go.map();
  });
  return {&g, id};
}

// x . W + b with b broadcast across rows.
template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
  Graph<T>& g = *x.graph;
  int xid = x.id, wid = w.id, bid = b.id;
  Tensor<T> out = matmul(g.value(xid), g.value(wid));
  out.map().rowwise() += g.value(bid).map().row(0);
  int id = g.add_node(std::move(out), {xid, wid, bid}, [xid, wid, bid](Graph<T>& g, int self) {
    const Tensor<T>& go = g.grad(self);
    if (g.needs_grad(xid)) g.grad(xid).map().noalias() += go.map() * g.value(wid).map().transpose();
    if (g.needs_grad(wid)) g.grad(wid).map().noalias() += g.value(xid).map().transpose() * go.map();
    if (g.needs_grad(bid)) g.grad(bid).map().row(0) += go.map().colwise().sum();
  });
  return {&g, id};
}

template <typename T>
Var<T> add_tensor(Var<T> a, const Tensor<T>& c) {
  Graph<T>& g = *a.graph;
  g.value(a.id).check_same_shape(c);
  int aid = a.id;
  Tensor<T> out = g.value(aid);
  out.map() += c.map();
  int id = g.add_node(std::move(out), {aid}, [aid](Graph<T>& g, int self) {
    g.grad(aid).map() += g.grad(self).map();
  });
  return {&g, id};
}

// Elementwise multiply by a fixed mask; the dropout primitive.
template <typename T>
Var<T> mul_mask(Var<T> a, Tensor<T> mask) {
  Graph<T>& g = *a.graph;
  g.value(a.id).check_same_shape(mask);
  int aid = a.id;
  Tensor<T> out = g.value(aid);
  out.map() = out.map().cwiseProduct(mask.map());
  auto shared = std::make_shared<Tensor<T>>(std::move(mask));
  int id = g.add_node(std::move(out), {aid}, [aid, shared](Graph<T>& g, int self) {
    g.grad(aid).map() += g.grad(self).map().cwiseProduct(shared->map());
  });
  return {&g, id};
}

template <typename T>
Var<T> mul_elem(Var<T> a, Var<T> b) {
  Graph<T>& g = *a.graph;
  g.value(a.id).check_same_shape(g.value(b.id));
  int aid = a.id, bid = b.id;
  Tensor<T> out = g.value(aid);
  out.map() = out.map().cwiseProduct(g.value(bid).map());
  int id = g.add_node(std::move(out), {aid, bid}, [aid, bid](Graph<T>& g, int self) {
    const Tensor<T>& go = g.grad(self);
    if (g.needs_grad(aid)) g.grad(aid).map() += go.map().cwiseProduct(g.value(bid).map());
    if (g.needs_grad(bid)) g.grad(bid).map() += go.map().cwiseProduct(g.value(aid).map());
  });
  return {&g, id};
}

template <typename T>
Var<T> scale_const(Var<T> a, T c) {
  Graph<T>& g = *a.graph;
  int aid = a.id;
  Tensor<T> out = g.value(aid);
  for (T& v : out.data) v = v * c;
  int id = g.add_node(std::move(out), {aid}, [aid, c](Graph<T>& g, int self) {
    g.grad(aid).map() += g.grad(self).map() * c;
  });
  return {&g, id};
}

// Multiply every element by a trainable 1x1 scale parameter.
template <typename T>
Var<T> scale_by(Var<T> a, Var<T> s) {
  Graph<T>& g = *a.graph;
  if (g.value(s.id).size() != 1) throw std::invalid_argument("scale_by: scale must be 1x1");
  int aid = a.id, sid = s.id;
  const T sv = g.value(sid)(0, 0);
  Tensor<T> out = g.value(aid);
  for (T& v : out.data) v = v * sv;
  int id = g.add_node(std::move(out), {aid, sid}, [aid, sid](Graph<T>& g, int self) {
    const Tensor<T>& go = g.grad(self);
    if (g.needs_grad(aid)) g.grad(aid).map() += go.map() * g.value(sid)(0, 0);
    if (g.needs_grad(sid)) {
      double acc = 0.0;
      const Tensor<T>& av = g.value(aid);
      for (size_t i = 0; i < av.size(); ++i) acc += static_cast<double>(go.data[i]) * static_cast<double>(av.data[i]);
      g.grad(sid)(0, 0) += static_cast<T>(acc);
    }
  });
  return {&g, id};
}

template <typename T>
Var<T> relu(Var<T> a) {
  Graph<T>& g = *a.graph;
  int aid = a.id;
  Tensor<T> out = g.value(aid);
  for (T& v : out.data) v = v > T(0) ? v : T(0);
  int id = g.add_node(std::move(out), {aid}, [aid](Graph<T>& g, int self) {
    const Tensor<T>& go = g.grad(self);
    const Tensor<T>& av = g.value(aid);
    Tensor<T>& ga = g.grad(aid);
    for (size_t i = 0; i < av.size(); ++i)
      if (av.data[i] > T(0)) ga.data[i] += go.data[i];
  });
  return {&g, id};
}

// Row-wise layer normalization with affine parameters (gamma, beta as 1xD).
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5)) {
  Graph<T>& g = *x.graph;
  const Tensor<T>& xv = g.value(x.id);
  const int rows = xv.rows, d = xv.cols;
  if (g.value(gamma.id).cols != d || g.value(beta.id).cols != d)
    throw std::invalid_argument("layer_norm: parameter width mismatch");

  auto xhat = std::make_shared<Tensor<T>>(rows, d);
  auto inv_sigma = std::make_shared<std::vector<T>>(rows);
  Tensor<T> out(rows, d);
  const T* gam = g.value(gamma.id).data.data();
  const T* bet = g.value(beta.id).data.data();
  for (int i = 0; i < rows; ++i) {
    const T* xr = xv.row_ptr(i);
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xr[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= d;
    const T is = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    (*inv_sigma)[i] = is;
    T* xh = xhat->row_ptr(i);
    T* o = out.row_ptr(i);
    for (int j = 0; j < d; ++j) {
      xh[j] = static_cast<T>((xr[j] - mean) * is);
      o[j] = gam[j] * xh[j] + bet[j];
    }
  }

  int xid = x.id, gid = gamma.id, bid = beta.id;
  int id = g.add_node(std::move(out), {xid, gid, bid},
                      [xid, gid, bid, xhat, inv_sigma, rows, d](Graph<T>& g, int self) {
                        const Tensor<T>& go = g.grad(self);
                        const T* gam = g.value(gid).data.data();
                        for (int i = 0; i < rows; ++i) {
                          const T* dy = go.row_ptr(i);
                          const T* xh = xhat->row_ptr(i);
                          if (g.needs_grad(gid)) {
                            T* gg = g.grad(gid).row_ptr(0);
                            for (int j = 0; j < d; ++j) gg[j] += dy[j] * xh[j];
                          }
                          if (g.needs_grad(bid)) {
                            T* gb = g.grad(bid).row_ptr(0);
                            for (int j = 0; j < d; ++j) gb[j] += dy[j];
                          }
                          if (g.needs_grad(xid)) {
                            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                            for (int j = 0; j < d; ++j) {
                              const double dxh = static_cast<double>(dy[j]) * gam[j];
                              mean_dxhat += dxh;
                              mean_dxhat_xhat += dxh * xh[j];
                            }
                            mean_dxhat /= d;
                            mean_dxhat_xhat /= d;
                            T* gx = g.grad(xid).row_ptr(i);
                            const T is = (*inv_sigma)[i];
                            for (int j = 0; j < d; ++j) {
                              const double dxh = static_cast<double>(dy[j]) * gam[j];
                              gx[j] += static_cast<T>((dxh - mean_dxhat - xh[j] * mean_dxhat_xhat) * is);
                            }
                          }
                        }
                      });
  return {&g, id};
}

// Batched ragged attention layout. Row r = b * len + i for sentence b,
// position i. Rows past the true length are padding: their outputs stay
// zero and they are never attended to as keys.
struct AttnShape {
  int batch = 0;
  int q_len = 0;
  int kv_len = 0;
  std::vector<int> q_lens;
  std::vector<int> kv_lens;
  int heads = 1;
  bool causal = false;
};

// Scaled dot-product attention over all sentences and heads of one batch.
// q: [B*q_len x d], k,v: [B*kv_len x d]. Softmax weights are stashed for
// the backward pass.
template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, const AttnShape& shape) {
  Graph<T>& g = *q.graph;
  const Tensor<T>& qv = g.value(q.id);
  const Tensor<T>& kv = g.value(k.id);
  const Tensor<T>& vv = g.value(v.id);
  const int d = qv.cols;
  if (d % shape.heads != 0) throw std::invalid_argument("attention: d not divisible by heads");
  if (kv.rows != shape.batch * shape.kv_len || qv.rows != shape.batch * shape.q_len)
    throw std::invalid_argument("attention: row count mismatch");
  if (shape.causal && shape.q_len != shape.kv_len)
    throw std::invalid_argument("attention: causal requires self-attention shapes");
  const int dh = d / shape.heads;
  const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  auto probs = std::make_shared<std::vector<Tensor<T>>>();
  probs->reserve(static_cast<size_t>(shape.batch) * shape.heads);

  Tensor<T> out(qv.rows, d);
  for (int b = 0; b < shape.batch; ++b) {
    const int ql = shape.q_lens[b];
    const int kl = shape.kv_lens[b];
    for (int h = 0; h < shape.heads; ++h) {
      if (ql == 0 || kl == 0) {  // nothing to attend to; rows stay zero
        probs->emplace_back(ql, kl);
        continue;
      }
      auto qb = qv.map().block(b * shape.q_len, h * dh, ql, dh);
      auto kb = kv.map().block(b * shape.kv_len, h * dh, kl, dh);
      auto vb = vv.map().block(b * shape.kv_len, h * dh, kl, dh);
      Tensor<T> a(ql, kl);
      a.map().noalias() = qb * kb.transpose() * inv_sqrt_dh;
      for (int i = 0; i < ql; ++i) {
        T* row = a.row_ptr(i);
        const int limit = shape.causal ? std::min(i + 1, kl) : kl;
        T mx = row[0];
        for (int j = 1; j < limit; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < limit; ++j) {
          row[j] = std::exp(row[j] - mx);
          denom += row[j];
        }
        const T inv = static_cast<T>(1.0 / denom);
        for (int j = 0; j < limit; ++j) row[j] *= inv;
        for (int j = limit; j < kl; ++j) row[j] = T(0);
      }
      out.map().block(b * shape.q_len, h * dh, ql, dh).noalias() = a.map() * vb;
      probs->push_back(std::move(a));
    }
  }

  int qid = q.id, kid = k.id, vid = v.id;
  AttnShape sh = shape;
  int id = g.add_node(
      std::move(out), {qid, kid, vid},
      [qid, kid, vid, probs, sh, dh, inv_sqrt_dh](Graph<T>& g, int self) {
        const Tensor<T>& go = g.grad(self);
        const Tensor<T>& qv = g.value(qid);
        const Tensor<T>& kv = g.value(kid);
        for (int b = 0; b < sh.batch; ++b) {
          const int ql = sh.q_lens[b];
          const int kl = sh.kv_lens[b];
          if (ql == 0 || kl == 0) continue;
          for (int h = 0; h < sh.heads; ++h) {
            const Tensor<T>& a = (*probs)[static_cast<size_t>(b) * sh.heads + h];
            auto dout = go.map().block(b * sh.q_len, h * dh, ql, dh);
            auto qb = qv.map().block(b * sh.q_len, h * dh, ql, dh);
            auto kb = kv.map().block(b * sh.kv_len, h * dh, kl, dh);
            auto vb = g.value(vid).map().block(b * sh.kv_len, h * dh, kl, dh);

            if (g.needs_grad(vid))
              g.grad(vid).map().block(b * sh.kv_len, h * dh, kl, dh).noalias() +=
                  a.map().transpose() * dout;

            // dS = A o (dA - rowsum(dA o A)); dA = dOut V^T
            Tensor<T> da(ql, kl);
            da.map().noalias() = dout * vb.transpose();
            Tensor<T> ds(ql, kl);
            for (int i = 0; i < ql; ++i) {
              const T* ar = a.row_ptr(i);
              const T* dar = da.row_ptr(i);
              double dot = 0.0;
              for (int j = 0; j < kl; ++j) dot += static_cast<double>(ar[j]) * dar[j];
              T* dsr = ds.row_ptr(i);
              for (int j = 0; j < kl; ++j)
                dsr[j] = ar[j] * static_cast<T>(dar[j] - dot);
            }
            if (g.needs_grad(qid))
              g.grad(qid).map().block(b * sh.q_len, h * dh, ql, dh).noalias() +=
                  ds.map() * kb * inv_sqrt_dh;
            if (g.needs_grad(kid))
              g.grad(kid).map().block(b * sh.kv_len, h * dh, kl, dh).noalias() +=
                  ds.map().transpose() * qb * inv_sqrt_dh;
          }
        }
      });
  return {&g, id};
}

// Gathers embedding rows by token id; pad_id rows come out all-zero, which
// matches multiplying the one-hot matrix (whose pad rows are zero) by E.
template <typename T>
Var<T> rows_lookup(Var<T> table, const std::vector<int32_t>& ids, int32_t pad_id) {
  Graph<T>& g = *table.graph;
  const Tensor<T>& tv = g.value(table.id);
  Tensor<T> out(static_cast<int>(ids.size()), tv.cols);
  for (size_t r = 0; r < ids.size(); ++r) {
    const int32_t t = ids[r];
    if (t == pad_id) continue;
    if (t < 0 || t >= tv.rows) throw std::invalid_argument("rows_lookup: token id out of vocab range");
    std::copy(tv.row_ptr(t), tv.row_ptr(t) + tv.cols, out.row_ptr(static_cast<int>(r)));
  }
  int tid = table.id;
  auto idcopy = std::make_shared<std::vector<int32_t>>(ids);
  int id = g.add_node(std::move(out), {tid}, [tid, idcopy, pad_id](Graph<T>& g, int self) {
    const Tensor<T>& go = g.grad(self);
    Tensor<T>& gt = g.grad(tid);
    for (size_t r = 0; r < idcopy->size(); ++r) {
      const int32_t t = (*idcopy)[r];
      if (t == pad_id) continue;
      const T* src = go.row_ptr(static_cast<int>(r));
      T* dst = gt.row_ptr(t);
      for (int j = 0; j < go.cols; ++j) dst[j] += src[j];
    }
  });
  return {&g, id};
}

template <typename T>
Var<T> sum_all(Var<T> a) {
  Graph<T>& g = *a.graph;
  int aid = a.id;
  double acc = 0.0;
  for (T v : g.value(aid).data) acc += v;
  int id = g.add_node(Tensor<T>::scalar(static_cast<T>(acc)), {aid}, [aid](Graph<T>& g, int self) {
    const T go = g.grad(self)(0, 0);
    for (T& v : g.grad(aid).data) v += go;
  });
  return {&g, id};
}

struct LossResult {
  int loss_id = -1;
  int token_count = 0;
};

// Label-smoothed cross entropy averaged over non-excluded rows.
// gold[r] == exclude_id marks a padding row that contributes nothing.
// Smoothing mass epsilon is spread over the valid_vocab ids only; columns
// >= valid_vocab take part in the softmax normalizer but receive no target
// mass. Accumulation runs in 64-bit.
template <typename T>
Var<T> label_smoothed_ce(Var<T> logits, const std::vector<int32_t>& gold, int32_t exclude_id,
                         double epsilon, int valid_vocab, int* token_count_out = nullptr) {
  Graph<T>& g = *logits.graph;
  const Tensor<T>& z = g.value(logits.id);
  if (static_cast<size_t>(z.rows) != gold.size())
    throw std::invalid_argument("label_smoothed_ce: gold length mismatch");
  if (valid_vocab < 2 || valid_vocab > z.cols)
    throw std::invalid_argument("label_smoothed_ce: valid_vocab out of range");
  const int C = z.cols;

  auto probs = std::make_shared<Tensor<T>>(z.rows, C);
  int count = 0;
  double total = 0.0;
  const double off_mass = epsilon / (valid_vocab - 1);
  for (int r = 0; r < z.rows; ++r) {
    const int32_t y = gold[r];
    if (y == exclude_id) continue;
    if (y < 0 || y >= valid_vocab) throw std::invalid_argument("label_smoothed_ce: gold id out of valid vocab");
    ++count;
    const T* zr = z.row_ptr(r);
    double mx = zr[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, static_cast<double>(zr[c]));
    double denom = 0.0;
    for (int c = 0; c < C; ++c) denom += std::exp(zr[c] - mx);
    const double lse = mx + std::log(denom);
    T* pr = probs->row_ptr(r);
    for (int c = 0; c < C; ++c) pr[c] = static_cast<T>(std::exp(zr[c] - mx) / denom);

    double sum_valid = 0.0;
    for (int c = 0; c < valid_vocab; ++c) sum_valid += zr[c];
    const double target_dot =
        (1.0 - epsilon) * zr[y] + off_mass * (sum_valid - zr[y]);
    total += lse - target_dot;
  }
  if (count == 0) throw std::invalid_argument("label_smoothed_ce: batch contains no target tokens");
  if (token_count_out) *token_count_out = count;

  const double mean = total / count;
  int lid = logits.id;
  auto goldcopy = std::make_shared<std::vector<int32_t>>(gold);
  int id = g.add_node(
      Tensor<T>::scalar(static_cast<T>(mean)), {lid},
      [lid, goldcopy, probs, exclude_id, epsilon, valid_vocab, count, off_mass](Graph<T>& g, int self) {
        const double scale = static_cast<double>(g.grad(self)(0, 0)) / count;
        Tensor<T>& gl = g.grad(lid);
        const int C = gl.cols;
        for (int r = 0; r < gl.rows; ++r) {
          const int32_t y = (*goldcopy)[r];
          if (y == exclude_id) continue;
          const T* pr = probs->row_ptr(r);
          T* gr = gl.row_ptr(r);
          for (int c = 0; c < C; ++c) {
            double target = 0.0;
            if (c < valid_vocab) target = (c == y) ? (1.0 - epsilon) : off_mass;
            gr[c] += static_cast<T>((pr[c] - target) * scale);
          }
        }
      });
  return {&g, id};
}

}  // namespace bytenmt
