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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>

#include "bytenmt/autograd.hpp"
#include "bytenmt/tensor.hpp"

using namespace bytenmt;

namespace {

Tensor<double> random_tensor(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  Tensor<double> t(r, c);
  std::normal_distribution<double> dist(0.0, scale);
  for (auto& v : t.data) v = dist(rng);
  return t;
}

using LossMaker =
    std::function<Var<double>(Graph<double>&, std::vector<Var<double>>&)>;

// Central finite differences on every element of every input, against the
// analytic gradients from one backward pass.
void check_op_grads(std::vector<Tensor<double>> inputs, const LossMaker& make, double h = 1e-6,
                    double tol = 1e-6) {
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> g;
    std::vector<Var<double>> vars;
    for (const auto& t : inputs) vars.push_back(leaf(g, t, true));
    Var<double> loss = make(g, vars);
    g.backward(loss.id);
    for (auto& v : vars) analytic.push_back(v.grad());
  }

  const auto eval = [&](const std::vector<Tensor<double>>& ins) {
    Graph<double> g;
    std::vector<Var<double>> vars;
    for (const auto& t : ins) vars.push_back(leaf(g, t, false));
    // at least one input must require grad for the graph to build a loss
    vars[0] = leaf(g, ins[0], true);
    return make(g, vars).value()(0, 0);
  };

  for (size_t i = 0; i < inputs.size(); ++i) {
    for (size_t j = 0; j < inputs[i].size(); ++j) {
      const double saved = inputs[i].data[j];
      inputs[i].data[j] = saved + h;
      const double up = eval(inputs);
      inputs[i].data[j] = saved - h;
      const double down = eval(inputs);
      inputs[i].data[j] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double got = analytic[i].data[j];
      const double err = std::abs(fd - got) / std::max({std::abs(fd), std::abs(got), 1e-4});
      INFO("input " << i << " elem " << j << " fd=" << fd << " analytic=" << got);
      REQUIRE(err < tol);
    }
  }
}

}  // namespace

TEST_CASE("matmul gradients") {
  std::mt19937_64 rng(1);
  check_op_grads({random_tensor(3, 4, rng), random_tensor(4, 5, rng)},
                 [](Graph<double>&, std::vector<Var<double>>& v) {
                   return sum_all(matmul(v[0], v[1]));
                 });
}

TEST_CASE("matmul_nt gradients") {
  std::mt19937_64 rng(2);
  check_op_grads({random_tensor(3, 4, rng), random_tensor(6, 4, rng)},
                 [](Graph<double>&, std::vector<Var<double>>& v) {
                   return sum_all(matmul_nt(v[0], v[1]));
                 });
}

TEST_CASE("linear gradients") {
  std::mt19937_64 rng(3);
  check_op_grads({random_tensor(5, 4, rng), random_tensor(4, 3, rng), random_tensor(1, 3, rng)},
                 [](Graph<double>&, std::vector<Var<double>>& v) {
                   return sum_all(relu(linear(v[0], v[1], v[2])));
                 });
}

TEST_CASE("layer_norm gradients") {
  std::mt19937_64 rng(4);
  check_op_grads({random_tensor(4, 6, rng), random_tensor(1, 6, rng, 0.5),
                  random_tensor(1, 6, rng, 0.5)},
                 [](Graph<double>&, std::vector<Var<double>>& v) {
                   // weight rows unevenly so the row reductions are exercised
                   Tensor<double> w(4, 6);
                   for (int i = 0; i < 4; ++i)
                     for (int j = 0; j < 6; ++j) w(i, j) = 0.3 * i - 0.1 * j + 0.7;
                   return sum_all(mul_mask(layer_norm(v[0], v[1], v[2]), w));
                 },
                 1e-6, 5e-6);
}

TEST_CASE("scale ops gradients") {
  std::mt19937_64 rng(5);
  check_op_grads({random_tensor(3, 4, rng), Tensor<double>::scalar(1.7)},
                 [](Graph<double>&, std::vector<Var<double>>& v) {
                   return sum_all(scale_by(scale_const(v[0], 0.5), v[1]));
                 });
}

TEST_CASE("attention gradients, ragged and causal") {
  std::mt19937_64 rng(6);
  AttnShape cross;
  cross.batch = 2;
  cross.q_len = 3;
  cross.kv_len = 4;
  cross.q_lens = {3, 2};
  cross.kv_lens = {4, 3};
  cross.heads = 2;
  cross.causal = false;
  check_op_grads({random_tensor(6, 4, rng), random_tensor(8, 4, rng), random_tensor(8, 4, rng)},
                 [cross](Graph<double>&, std::vector<Var<double>>& v) {
                   return sum_all(attention(v[0], v[1], v[2], cross));
                 },
                 1e-6, 2e-6);

  AttnShape self;
  self.batch = 2;
  self.q_len = 3;
  self.kv_len = 3;
  self.q_lens = {3, 2};
  self.kv_lens = {3, 2};
  self.heads = 2;
  self.causal = true;
  check_op_grads({random_tensor(6, 4, rng), random_tensor(6, 4, rng), random_tensor(6, 4, rng)},
                 [self](Graph<double>&, std::vector<Var<double>>& v) {
                   return sum_all(attention(v[0], v[1], v[2], self));
                 },
                 1e-6, 2e-6);
}

TEST_CASE("attention weights are a row distribution") {
  // with V = identity, each output row equals its softmax weight row
  std::mt19937_64 rng(7);
  AttnShape shape;
  shape.batch = 1;
  shape.q_len = 3;
  shape.kv_len = 4;
  shape.q_lens = {3};
  shape.kv_lens = {4};
  shape.heads = 1;
  Graph<double> g;
  Var<double> q = leaf(g, random_tensor(3, 4, rng), false);
  Var<double> k = leaf(g, random_tensor(4, 4, rng), false);
  Tensor<double> eye(4, 4);
  for (int i = 0; i < 4; ++i) eye(i, i) = 1.0;
  Var<double> v = leaf(g, eye, false);
  const Tensor<double>& probs = attention(q, k, v, shape).value();
  for (int i = 0; i < 3; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
      REQUIRE(probs(i, j) >= 0.0);
      sum += probs(i, j);
    }
    REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("rows_lookup gradients scatter into the table") {
  std::mt19937_64 rng(8);
  const std::vector<int32_t> ids = {2, 0, 2, 5};  // id 5 is the pad slot here
  check_op_grads({random_tensor(6, 3, rng)},
                 [ids](Graph<double>&, std::vector<Var<double>>& v) {
                   return sum_all(rows_lookup(v[0], ids, 5));
                 });
  Graph<double> g;
  Var<double> table = leaf(g, random_tensor(6, 3, rng), false);
  const Tensor<double>& out = rows_lookup(table, ids, 5).value();
  for (int j = 0; j < 3; ++j) REQUIRE(out(3, j) == 0.0);  // pad row zero
  CHECK_THROWS_AS(rows_lookup(table, std::vector<int32_t>{7}, 5), std::invalid_argument);
}

TEST_CASE("label smoothed cross entropy values") {
  // eps=0, strongly peaked logits on gold: loss tends to 0
  {
    Graph<double> g;
    Tensor<double> z(1, 4);
    z(0, 2) = 50.0;
    Var<double> logits = leaf(g, z, true);
    Var<double> loss = label_smoothed_ce(logits, {2}, -1, 0.0, 4);
    CHECK(loss.value()(0, 0) == Catch::Approx(0.0).margin(1e-12));
  }
  // uniform logits, eps=0: loss = ln C over the full softmax support
  {
    Graph<double> g;
    Var<double> logits = leaf(g, Tensor<double>::zeros(2, 7), true);
    Var<double> loss = label_smoothed_ce(logits, {0, 3}, -1, 0.0, 7);
    CHECK(loss.value()(0, 0) == Catch::Approx(std::log(7.0)).epsilon(1e-12));
  }
  // hand-computed 3-class toy with eps=0.1:
  // z=(1,0,-1), gold=0: lse = log(e^1+e^0+e^-1); target=(0.9,0.05,0.05)
  {
    Graph<double> g;
    Tensor<double> z(1, 3);
    z(0, 0) = 1.0;
    z(0, 1) = 0.0;
    z(0, 2) = -1.0;
    Var<double> logits = leaf(g, z, true);
    Var<double> loss = label_smoothed_ce(logits, {0}, -1, 0.1, 3);
    const double lse = std::log(std::exp(1.0) + 1.0 + std::exp(-1.0));
    const double expected = lse - (0.9 * 1.0 + 0.05 * 0.0 + 0.05 * -1.0);
    CHECK(loss.value()(0, 0) == Catch::Approx(expected).epsilon(1e-12));
  }
  // invalid logit columns get no target mass but stay in the normalizer
  {
    Graph<double> g;
    Tensor<double> z(1, 5);  // valid vocab 3, columns 3,4 invalid
    for (int c = 0; c < 5; ++c) z(0, c) = 0.1 * c;
    Var<double> logits = leaf(g, z, true);
    Var<double> loss = label_smoothed_ce(logits, {1}, -1, 0.1, 3);
    double lse = 0.0;
    for (int c = 0; c < 5; ++c) lse += std::exp(0.1 * c);
    lse = std::log(lse);
    const double expected = lse - (0.9 * 0.1 + 0.05 * 0.0 + 0.05 * 0.2);
    CHECK(loss.value()(0, 0) == Catch::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("label smoothed cross entropy gradients and pad exclusion") {
  std::mt19937_64 rng(9);
  const std::vector<int32_t> gold = {1, 4, 2};  // middle row is pad
  check_op_grads({random_tensor(3, 6, rng)},
                 [gold](Graph<double>&, std::vector<Var<double>>& v) {
                   return label_smoothed_ce(v[0], gold, 4, 0.1, 5);
                 });
  // pad rows receive zero gradient
  Graph<double> g;
  Var<double> logits = leaf(g, random_tensor(3, 6, rng), true);
  Var<double> loss = label_smoothed_ce(logits, gold, 4, 0.1, 5);
  g.backward(loss.id);
  for (int c = 0; c < 6; ++c) REQUIRE(logits.grad()(1, c) == 0.0);

  Graph<double> g2;
  Var<double> l2 = leaf(g2, random_tensor(2, 4, rng), true);
  CHECK_THROWS_AS(label_smoothed_ce(l2, std::vector<int32_t>{9, 9}, 9, 0.1, 4),
                  std::invalid_argument);  // all rows excluded
}

TEST_CASE("doubling the loss doubles every gradient") {
  std::mt19937_64 rng(10);
  Tensor<double> x = random_tensor(3, 3, rng);
  Tensor<double> w = random_tensor(3, 3, rng);

  const auto grads_with_scale = [&](double s) {
    Graph<double> g;
    Var<double> xv = leaf(g, x, true);
    Var<double> wv = leaf(g, w, true);
    Var<double> loss = scale_const(sum_all(relu(matmul(xv, wv))), s);
    g.backward(loss.id);
    return std::make_pair(xv.grad(), wv.grad());
  };
  const auto [gx1, gw1] = grads_with_scale(1.0);
  const auto [gx2, gw2] = grads_with_scale(2.0);
  for (size_t i = 0; i < gx1.size(); ++i) REQUIRE(gx2.data[i] == Catch::Approx(2.0 * gx1.data[i]));
  for (size_t i = 0; i < gw1.size(); ++i) REQUIRE(gw2.data[i] == Catch::Approx(2.0 * gw1.data[i]));
}

TEST_CASE("backward rejects detached and non-finite losses") {
  Graph<double> g;
  Var<double> c = constant(g, Tensor<double>::scalar(1.0));
  CHECK_THROWS_AS(g.backward(c.id), std::invalid_argument);

  Graph<double> g2;
  Var<double> x = leaf(g2, Tensor<double>::scalar(0.0), true);
  Tensor<double> nan_mask = Tensor<double>::scalar(std::nan(""));
  Var<double> bad = mul_mask(x, nan_mask);
  CHECK_THROWS_AS(g2.backward(bad.id), std::runtime_error);
}
