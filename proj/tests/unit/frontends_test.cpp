/*
 * Copyright 2026 The adaf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "adaf/frontends.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace adaf::frontend {
namespace {

using ad::constant;
using ad::Var;
using testing::random_tensor;

Var<double> row(std::vector<double> v) {
  const std::size_t n = v.size();
  return constant(Tensor<double>({1, n}, std::move(v)));
}

TEST(Sparsify, SymmetricFixedPoint) {
  auto w = sparsify(row({0, 0}), 100.0).value();
  EXPECT_DOUBLE_EQ(w[0], 0.5);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
}

TEST(Sparsify, AlphaTenMatchesHighPrecision) {
  auto w = sparsify(row({1, 0}), 10.0).value();
  auto want = oracle::double_softmax({1.0L, 0.0L}, 10.0L);
  EXPECT_NEAR(w[0], 0.99027, 1e-4);
  EXPECT_NEAR(w[1], 0.00973, 1e-4);
  EXPECT_NEAR(w[0], static_cast<double>(want[0]), 1e-12);
}

TEST(Sparsify, AlphaHundredSaturates) {
  auto w = sparsify(row({1, 0}), 100.0).value();
  EXPECT_GT(w[0], 1.0 - 1e-15);
  EXPECT_GT(static_cast<double>(oracle::double_softmax({1.0L, 0.0L}, 100.0L)[0]), 1.0 - 1e-15);
}

TEST(Sparsify, RowStochasticAndOrderPreserving) {
  std::mt19937_64 rng(1);
  for (std::size_t nf : {2u, 3u, 5u, 10u}) {
    auto logits = random_tensor<double>({200, nf}, rng, -4, 4);
    auto w = sparsify(constant(logits), 100.0).value();
    const auto a = rowwise_argmax(w), b = rowwise_argmax(logits);
    EXPECT_EQ(a, b);
    for (std::size_t r = 0; r < 200; ++r) {
      double s = 0;
      for (std::size_t f = 0; f < nf; ++f) s += w[r * nf + f];
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(RowwiseArgmax, LowestIndexOnTies) {
  Tensor<double> x({2, 3}, std::vector<double>{1, 4, 4, 2, 2, 2});
  EXPECT_EQ(rowwise_argmax(x), (std::vector<std::size_t>{1, 0}));
}

DenseExpert<double> expert(std::size_t p, std::size_t h, std::size_t e, std::mt19937_64& rng,
                           bool zero_bias = false) {
  DenseExpert<double> x;
  x.hidden_weight = ad::parameter(random_tensor<double>({p, h}, rng));
  x.hidden_bias = ad::parameter(zero_bias ? Tensor<double>({h}) : random_tensor<double>({h}, rng));
  x.out_weight = ad::parameter(random_tensor<double>({h, e}, rng));
  x.out_bias = ad::parameter(zero_bias ? Tensor<double>({e}) : random_tensor<double>({e}, rng));
  return x;
}

TEST(Baseline, ZeroPatchZeroBiasGivesZero) {
  std::mt19937_64 rng(2);
  auto params = expert(8, 6, 4, rng, true);
  auto y = baseline_frontend(constant(Tensor<double>({2, 3, 8})), params).value();
  for (double v : y.storage()) EXPECT_EQ(v, 0.0);
}

TEST(Baseline, FullSizeShape) {
  FrontEndConfig c;
  c.kind = Kind::kBaseline;
  c.n_filterbanks = 1;
  ParamSet<float> params;
  std::mt19937_64 rng(3);
  FrontEnd<float> fe(c, 400, params, rng);
  auto out = fe.forward(constant(Tensor<float>({1, 40, 400}, 0.1f)));
  EXPECT_EQ(out.embeddings.shape(), (Shape{1, 40, 64}));
  EXPECT_FALSE(out.router.has_value());
  EXPECT_THROW(fe.route(constant(Tensor<float>({1, 40, 400}))), Error);
}

TEST(Bank, FullSizeDimensionsGive64x400PerBank) {
  FrontEndConfig c;  // BF, N_F=2, 64 filters, K=320
  c.router_widths = {8, 8, 8};
  ParamSet<float> params;
  std::mt19937_64 rng(4);
  FrontEnd<float> fe(c, 400, params, rng);
  ASSERT_EQ(fe.banks().size(), 2u);
  EXPECT_EQ(fe.banks()[0].weight.shape(), (Shape{64, 320}));
  auto patches = constant(random_tensor<float>({1, 2, 400}, rng));
  auto act = bank_activations(patches, fe.banks()[1]);
  EXPECT_EQ(act.shape(), (Shape{2, 64, 400}));
  auto out = fe.forward(patches);
  EXPECT_EQ(out.embeddings.shape(), (Shape{1, 2, 64}));
  EXPECT_EQ(out.router->weights.shape(), (Shape{1, 2, 2}));
}

TEST(Bank, ZeroPatchZeroBiasGivesZero) {
  std::mt19937_64 rng(5);
  FilterBank<double> bank{ad::parameter(random_tensor<double>({3, 5}, rng)),
                          ad::parameter(Tensor<double>({3}))};
  for (auto pooling : {Pooling::kMax, Pooling::kAvg}) {
    auto y = bank_frontend(constant(Tensor<double>({1, 2, 9})), {bank}, pooling).value();
    EXPECT_EQ(y.shape(), (Shape{1, 2, 1, 3}));
    for (double v : y.storage()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Bank, DeltaKernelMaxPoolIsReluOfPatchMax) {
  std::mt19937_64 rng(6);
  for (std::size_t taps : {1u, 4u, 7u}) {
    Tensor<double> w({1, taps});
    w[taps / 2] = 1.0;
    FilterBank<double> bank{constant(w), constant(Tensor<double>({1}))};
    auto patches = random_tensor<double>({2, 3, 11}, rng, -1.0, 0.6);
    auto y = bank_frontend(constant(patches), {bank}, Pooling::kMax).value();
    for (std::size_t r = 0; r < 6; ++r) {
      const auto first = patches.storage().begin() + r * 11;
      EXPECT_EQ(y[r], std::max(0.0, *std::max_element(first, first + 11)));
    }
  }
}

TEST(Bank, PermutingPatchesPermutesOutputs) {
  std::mt19937_64 rng(7);
  std::vector<FilterBank<double>> banks;
  for (int i = 0; i < 2; ++i)
    banks.push_back({constant(random_tensor<double>({4, 6}, rng)),
                     constant(random_tensor<double>({4}, rng))});
  auto patches = random_tensor<double>({1, 5, 16}, rng);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  Tensor<double> shuffled(patches.shape());
  for (std::size_t t = 0; t < 5; ++t)
    std::copy_n(patches.storage().begin() + perm[t] * 16, 16, shuffled.storage().begin() + t * 16);
  for (auto pooling : {Pooling::kMax, Pooling::kAvg}) {
    auto a = bank_frontend(constant(patches), banks, pooling).value();
    auto b = bank_frontend(constant(shuffled), banks, pooling).value();
    const std::size_t per = 2 * 4;
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t i = 0; i < per; ++i) EXPECT_EQ(b[t * per + i], a[perm[t] * per + i]);
  }
}

TEST(Moe, SingleExpertEqualsBaseline) {
  std::mt19937_64 rng(8);
  auto e = expert(8, 6, 4, rng);
  auto patches = constant(random_tensor<double>({2, 3, 8}, rng));
  auto base = baseline_frontend(patches, e).value();
  auto moe = moe_frontend(patches, {e}).value();
  EXPECT_EQ(moe.shape(), (Shape{2, 3, 1, 4}));
  EXPECT_EQ(moe.storage(), base.storage());
}

TEST(Moe, StacksExperts) {
  std::mt19937_64 rng(9);
  std::vector<DenseExpert<double>> experts{expert(8, 6, 4, rng), expert(8, 6, 4, rng),
                                           expert(8, 6, 4, rng)};
  auto y = moe_frontend(constant(random_tensor<double>({2, 3, 8}, rng)), experts);
  EXPECT_EQ(y.shape(), (Shape{2, 3, 3, 4}));
}

RouterOutput<double> router_with(Tensor<double> weights) {
  RouterOutput<double> r;
  r.route_index = rowwise_argmax(weights);
  r.weights = constant(std::move(weights));
  return r;
}

TEST(Combine, OneHotSelects) {
  std::mt19937_64 rng(10);
  auto per_route = random_tensor<double>({1, 2, 3, 4}, rng);
  Tensor<double> w({1, 2, 3}, std::vector<double>{0, 0, 1, 0, 0, 1});
  auto y = combine(constant(per_route), router_with(w)).value();
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t e = 0; e < 4; ++e) EXPECT_EQ(y[t * 4 + e], per_route[(t * 3 + 2) * 4 + e]);
}

TEST(Combine, UniformAverages) {
  std::mt19937_64 rng(11);
  auto per_route = random_tensor<double>({1, 1, 2, 5}, rng);
  auto y = combine(constant(per_route), router_with(Tensor<double>({1, 1, 2}, {0.5, 0.5}))).value();
  for (std::size_t e = 0; e < 5; ++e)
    EXPECT_DOUBLE_EQ(y[e], 0.5 * per_route[e] + 0.5 * per_route[5 + e]);
}

TEST(Combine, MatchesOracleAndStaysInHull) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t b = 1 + rng() % 3, t = 1 + rng() % 4, nf = 1 + rng() % 5, e = 1 + rng() % 6;
    auto per_route = random_tensor<double>({b, t, nf, e}, rng);
    auto w = sparsify(constant(random_tensor<double>({b, t, nf}, rng, -2, 2)), 3.0).value();
    auto y = combine(constant(per_route), router_with(w)).value();
    auto want = oracle::combine(per_route.storage(), w.storage(), b * t, nf, e);
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_NEAR(y[i], want[i], 1e-12);
      const std::size_t r = i / e, k = i % e;
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t f = 0; f < nf; ++f) {
        lo = std::min(lo, per_route[(r * nf + f) * e + k]);
        hi = std::max(hi, per_route[(r * nf + f) * e + k]);
      }
      EXPECT_GE(y[i], lo - 1e-12);
      EXPECT_LE(y[i], hi + 1e-12);
    }
  }
}

TEST(FrontEndConfig, Validation) {
  FrontEndConfig c;
  c.kind = Kind::kBaseline;
  c.n_filterbanks = 2;
  EXPECT_THROW(c.validate(400), Error);
  c = FrontEndConfig{};
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(400), Error);
  c = FrontEndConfig{};
  c.filters_per_bank = 32;
  try {
    c.validate(400);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find("filters_per_bank"), std::string::npos);
  }
}

TEST(Router, WeightsRowsSumToOneAndIndexMatches) {
  FrontEndConfig c;
  c.kind = Kind::kMoe;
  c.n_filterbanks = 3;
  c.embed_dim = 4;
  c.hidden_width = 6;
  c.router_widths = {5, 5, 5};
  ParamSet<double> params;
  std::mt19937_64 rng(13);
  FrontEnd<double> fe(c, 16, params, rng);
  auto r = fe.route(constant(random_tensor<double>({2, 5, 16}, rng)));
  EXPECT_EQ(r.weights.shape(), (Shape{2, 5, 3}));
  EXPECT_EQ(r.route_index, rowwise_argmax(r.weights.value()));
  EXPECT_EQ(r.route_index, rowwise_argmax(r.logits.value()));
  for (std::size_t i = 0; i < 10; ++i) {
    double s = 0;
    for (std::size_t f = 0; f < 3; ++f) s += r.weights.value()[i * 3 + f];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

}  // namespace
}  // namespace adaf::frontend
