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

#include <cmath>
#include <random>

#include "adaf/autodiff.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace adaf {
namespace {

using ad::constant;
using ad::parameter;
using ad::Var;
using testing::random_tensor;

Tensor<double> T(Shape shape, std::vector<double> data) { return {std::move(shape), std::move(data)}; }

void expect_error(ErrorKind kind, const std::function<void()>& body) {
  try {
    body();
    FAIL() << "no exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

TEST(Tensor, ShapeAndReshape) {
  Tensor<float> t({2, 3}, 1.5f);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.reshaped({3, 2}).shape(), (Shape{3, 2}));
  expect_error(ErrorKind::kShape, [&] { (void)t.reshaped({4, 2}); });
  expect_error(ErrorKind::kShape, [] { Tensor<float>({2, 2}, std::vector<float>(3)); });
}

TEST(Linear, IdentityWeight) {
  auto y = ad::linear(constant(T({1, 2}, {1, 2})), constant(T({2, 2}, {1, 0, 0, 1})),
                      constant(T({2}, {0, 0})));
  EXPECT_EQ(y.value().storage(), (std::vector<double>{1, 2}));
}

TEST(Linear, HandArithmetic) {
  auto y = ad::linear(constant(T({1, 2}, {1, 1})), constant(T({2, 1}, {2, 3})),
                      constant(T({1}, {1})));
  EXPECT_EQ(y.value().storage(), (std::vector<double>{6}));
}

TEST(Linear, ShapeErrorListsBothShapes) {
  try {
    ad::linear(constant(Tensor<double>({2, 3})), constant(Tensor<double>({4, 2})), Var<double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("[4x2]"), std::string::npos) << e.what();
  }
}

TEST(Conv1dSame, WorkedExample) {
  auto y = ad::conv1d_same(constant(T({1, 1, 3}, {1, 2, 3})), constant(T({1, 2}, {1, 1})),
                           constant(T({1}, {0})));
  EXPECT_EQ(y.value().storage(), (std::vector<double>{1, 3, 5}));
}

TEST(Conv1dSame, DeltaKernelIsIdentity) {
  std::mt19937_64 rng(3);
  for (std::size_t taps : {1u, 4u, 5u, 9u}) {
    auto x = random_tensor<double>({2, 1, 12}, rng);
    Tensor<double> w({1, taps});
    w[taps / 2] = 1.0;
    auto y = ad::conv1d_same(constant(x), constant(w), Var<double>{});
    EXPECT_EQ(y.value().storage(), x.storage()) << "K=" << taps;
  }
}

TEST(Conv1dSame, KeepsLengthForEveryKernelSize) {
  std::mt19937_64 rng(4);
  const std::size_t len = 7;
  for (std::size_t taps = 1; taps <= 2 * len; ++taps) {
    auto y = ad::conv1d_same(constant(random_tensor<double>({1, 1, len}, rng)),
                             constant(random_tensor<double>({2, taps}, rng)), Var<double>{});
    EXPECT_EQ(y.shape(), (Shape{1, 2, len}));
  }
}

TEST(Conv1dSame, MatchesOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + rng() % 3, len = 1 + rng() % 20, f = 1 + rng() % 4,
                      k = 1 + rng() % 9;
    auto x = random_tensor<double>({n, 1, len}, rng);
    auto w = random_tensor<double>({f, k}, rng);
    auto b = random_tensor<double>({f}, rng);
    auto y = ad::conv1d_same(constant(x), constant(w), constant(b));
    auto want = oracle::conv1d_same(x.storage(), n, len, w.storage(), f, k, b.storage());
    for (std::size_t i = 0; i < want.size(); ++i)
      EXPECT_NEAR(y.value()[i], want[i], 1e-12 * (1 + std::abs(want[i])));
  }
}

TEST(Conv1dPool, MatchesConvThenPool) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 3, len = 1 + rng() % 16, f = 1 + rng() % 4,
                      k = 1 + rng() % 8;
    auto x = parameter(random_tensor<double>({n, 1, len}, rng));
    auto w = parameter(random_tensor<double>({f, k}, rng));
    auto b = parameter(random_tensor<double>({f}, rng));
    auto conv = ad::conv1d_same(x, w, b);
    for (auto pool : {kernels::Pool::kMax, kernels::Pool::kAvg}) {
      auto fused = ad::conv1d_pool(x, w, b, pool);
      auto ref = pool == kernels::Pool::kMax ? ad::max_over_last(conv) : ad::mean_over_last(conv);
      ASSERT_EQ(fused.shape(), ref.shape());
      for (std::size_t i = 0; i < ref.value().size(); ++i)
        EXPECT_NEAR(fused.value()[i], ref.value()[i], 1e-12);
    }
  }
}

TEST(Reductions, Examples) {
  auto x = constant(T({2, 3}, {1, 5, 3, 2, 2, 2}));
  EXPECT_EQ(ad::max_over_last(x).value().storage(), (std::vector<double>{5, 2}));
  EXPECT_EQ(ad::mean_over_last(constant(T({1, 3}, {1, 5, 3}))).value().storage(),
            (std::vector<double>{3}));
  EXPECT_EQ(ad::relu(constant(T({3}, {-1, 0, 2}))).value().storage(),
            (std::vector<double>{0, 0, 2}));
  expect_error(ErrorKind::kShape, [] { ad::max_over_last(constant(Tensor<double>({2, 0}))); });
  expect_error(ErrorKind::kShape, [] { ad::mean_over_last(constant(Tensor<double>({2, 0}))); });
}

TEST(Reductions, MaxSendsUnitMassToOnePositionPerRow) {
  auto x = parameter(T({3, 4}, {1, 3, 3, 0, 2, 2, 2, 2, -1, -5, 4, 4}));
  auto y = ad::max_over_last(x);
  ad::backward(ad::dot_with(y, T({3}, {2.0, -1.0, 0.5})));
  EXPECT_EQ(x.grad().storage(), (std::vector<double>{0, 2, 0, 0, -1, 0, 0, 0, 0, 0, 0.5, 0}));
}

TEST(Softmax, Examples) {
  auto even = ad::softmax_last(constant(T({2}, {0, 0}))).value();
  EXPECT_EQ(even.storage(), (std::vector<double>{0.5, 0.5}));
  auto big = ad::softmax_last(constant(T({2}, {1000, 0}))).value();
  EXPECT_DOUBLE_EQ(big[0], 1.0);
  EXPECT_TRUE(std::isfinite(big[1]));
  EXPECT_LT(big[1], 1e-300);
  auto one = ad::softmax_last(constant(T({2}, {1, 0}))).value();
  EXPECT_NEAR(one[0], 0.73106, 1e-5);
  EXPECT_NEAR(one[1], 0.26894, 1e-5);
}

TEST(Softmax, RowsAreDistributions) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng() % 12;
    auto y = ad::softmax_last(constant(random_tensor<double>({5, d}, rng, -30, 30))).value();
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const double v = y[r * d + i];
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(LayerNorm, ConstantRowGivesZeros) {
  auto y = ad::layer_norm(constant(T({1, 4}, {3, 3, 3, 3})), constant(T({4}, {1, 1, 1, 1})),
                          constant(T({4}, {0, 0, 0, 0})));
  for (double v : y.value().storage()) EXPECT_EQ(v, 0.0);
}

TEST(Attention, SingleTokenReturnsValues) {
  std::mt19937_64 rng(9);
  auto q = constant(random_tensor<double>({2, 2, 1, 3}, rng));
  auto k = constant(random_tensor<double>({2, 2, 1, 3}, rng));
  auto v = random_tensor<double>({2, 2, 1, 3}, rng);
  auto y = ad::scaled_dot_attention(q, k, constant(v));
  EXPECT_EQ(y.value().storage(), v.storage());
}

TEST(Dropout, EvalModeIsIdentity) {
  std::mt19937_64 rng(10);
  auto x = random_tensor<double>({4, 5}, rng);
  auto y = ad::dropout(constant(x), 0.5, false, rng);
  EXPECT_EQ(y.value(), x);
}

TEST(Dropout, TrainModeZeroesAndRescales) {
  std::mt19937_64 rng(11);
  Tensor<double> x({1000}, 1.0);
  auto y = ad::dropout(constant(x), 0.25, true, rng).value();
  std::size_t kept = 0;
  for (double v : y.storage()) {
    if (v != 0.0) {
      EXPECT_DOUBLE_EQ(v, 1.0 / 0.75);
      ++kept;
    }
  }
  EXPECT_GT(kept, 650u);
  EXPECT_LT(kept, 850u);
}

TEST(Huber, Examples) {
  auto zero = ad::huber_loss(constant(T({1, 2}, {0.3, -2})), constant(T({1, 2}, {0.3, -2})), 1.0);
  EXPECT_EQ(zero.value()[0], 0.0);
  auto quad = ad::huber_loss(constant(T({1, 1}, {0.5})), constant(T({1, 1}, {0})), 1.0);
  EXPECT_DOUBLE_EQ(quad.value()[0], 0.125);
  auto lin = ad::huber_loss(constant(T({1, 1}, {2})), constant(T({1, 1}, {0})), 1.0);
  EXPECT_DOUBLE_EQ(lin.value()[0], 1.5);
  expect_error(ErrorKind::kShape, [] {
    ad::huber_loss(constant(Tensor<double>({1, 2})), constant(Tensor<double>({2, 1})), 1.0);
  });
}

TEST(Backward, SumGivesOnes) {
  auto x = parameter(T({3}, {4, -1, 2}));
  ad::backward(ad::sum(x));
  EXPECT_EQ(x.grad().storage(), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, TwoCallsDoubleTheGradient) {
  std::mt19937_64 rng(12);
  auto x = parameter(random_tensor<double>({2, 3}, rng));
  auto w = parameter(random_tensor<double>({3, 2}, rng));
  auto loss = ad::huber_loss(ad::relu(ad::linear(x, w, Var<double>{})),
                             constant(random_tensor<double>({2, 2}, rng)), 1.0);
  ad::backward(loss);
  const auto once = w.grad();
  ad::backward(loss);
  const auto twice = w.grad();
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(twice[i], 2.0 * once[i]);
}

TEST(Backward, NonScalarIsContractError) {
  auto x = parameter(T({2}, {1, 2}));
  expect_error(ErrorKind::kContract, [&] { ad::backward(ad::relu(x)); });
}

TEST(Backward, DiamondVisitsSharedNodeOnce) {
  // y = relu(x); loss = sum(y + y): every path counted, no node run twice.
  auto x = parameter(T({2}, {1.0, 3.0}));
  auto y = ad::relu(x);
  ad::backward(ad::sum(ad::add(y, y)));
  EXPECT_EQ(x.grad().storage(), (std::vector<double>{2, 2}));
}

TEST(Backward, HuberReluLinearMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  auto x = random_tensor<double>({3, 4}, rng);
  auto w = parameter(random_tensor<double>({4, 2}, rng));
  auto b = parameter(random_tensor<double>({2}, rng));
  auto target = random_tensor<double>({3, 2}, rng);
  auto loss_of = [&] {
    return ad::huber_loss(ad::relu(ad::linear(constant(x), w, b)), constant(target), 1.0);
  };
  ad::backward(loss_of());
  const double h = 1e-5;
  for (auto* p : {&w, &b}) {
    const auto grad = p->grad();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double orig = p->value()[i];
      p->mutable_value()[i] = orig + h;
      const double up = loss_of().value()[0];
      p->mutable_value()[i] = orig - h;
      const double down = loss_of().value()[0];
      p->mutable_value()[i] = orig;
      const double fd = (up - down) / (2 * h);
      EXPECT_LT(std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-8}), 1e-4);
    }
  }
}

TEST(NoGrad, BuildsNoGraph) {
  auto x = parameter(T({2}, {1, 2}));
  ad::NoGradGuard guard;
  auto y = ad::relu(x);
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(y.node()->parents.empty());
}

TEST(Replay, IdenticalInputsGiveBitwiseIdenticalOutputs) {
  std::mt19937_64 rng(14);
  auto x = random_tensor<double>({4, 1, 64}, rng);
  auto w = random_tensor<double>({5, 9}, rng);
  auto a = ad::conv1d_same(constant(x), constant(w), Var<double>{}).value();
  auto b = ad::conv1d_same(constant(x), constant(w), Var<double>{}).value();
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace adaf
