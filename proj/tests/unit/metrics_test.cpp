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

#include "adaf/metrics.hpp"
#include "oracles.hpp"

namespace adaf::metrics {
namespace {

Tensor<double> column(std::vector<double> v) {
  const std::size_t n = v.size();
  return {{n, 1}, std::move(v)};
}

TEST(Map, PerfectRanking) {
  Tensor<double> s({4, 2}, {0.9, 0.1, 0.8, 0.2, 0.1, 0.7, 0.2, 0.95});
  Tensor<double> t({4, 2}, {1, 0, 1, 0, 0, 1, 0, 1});
  EXPECT_EQ(mean_average_precision(s, t).map, 1.0);
}

TEST(Map, HandRankedExamples) {
  EXPECT_NEAR(mean_average_precision(column({0.9, 0.8, 0.1}), column({1, 0, 1})).map,
              (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(mean_average_precision(column({0.9, 0.8, 0.5, 0.1}), column({0, 0, 0, 1})).map, 0.25,
              1e-15);
}

TEST(Map, ClassWithoutPositivesIsExcluded) {
  Tensor<double> s({2, 2}, {0.9, 0.1, 0.2, 0.3});
  Tensor<double> t({2, 2}, {1, 0, 0, 0});
  auto r = mean_average_precision(s, t);
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(r.excluded, (std::vector<std::size_t>{1}));
  EXPECT_TRUE(std::isnan(r.per_class[1]));
}

TEST(Map, AllZeroTargetsIsError) {
  try {
    mean_average_precision(Tensor<double>({3, 2}), Tensor<double>({3, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoPositives);
  }
  EXPECT_THROW(mean_average_precision(Tensor<double>({3, 2}), Tensor<double>({2, 3})), Error);
}

TEST(Map, MatchesCountingOracleExactly) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 25, c = 1 + rng() % 6;
    Tensor<double> s({n, c}), t({n, c});
    std::vector<int> ti(n * c);
    // Coarse integer scores force plenty of ties.
    for (std::size_t i = 0; i < n * c; ++i) {
      s[i] = trial % 2 ? static_cast<double>(rng() % 5) : std::ldexp(double(rng() >> 11), -53);
      t[i] = ti[i] = (rng() % 3 == 0);
    }
    t[0] = ti[0] = 1;
    EXPECT_EQ(mean_average_precision(s, t).map, oracle::mean_average_precision(s.storage(), ti, n, c));
  }
}

TEST(Map, InvariantUnderStrictlyIncreasingTransforms) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 30, c = 1 + rng() % 5;
    Tensor<double> s({n, c}), t({n, c});
    for (std::size_t i = 0; i < n * c; ++i) {
      s[i] = g(rng);
      t[i] = rng() % 2;
    }
    t[0] = 1;
    const double base = mean_average_precision(s, t).map;
    Tensor<double> a = s, b = s, d = s;
    for (std::size_t i = 0; i < n * c; ++i) {
      a[i] = 1.0 / (1.0 + std::exp(-s[i]));
      b[i] = 3.0 * s[i] * s[i] * s[i] + s[i] - 7.0;
      d[i] = std::exp(2.0 * s[i]);
    }
    EXPECT_EQ(mean_average_precision(a, t).map, base);
    EXPECT_EQ(mean_average_precision(b, t).map, base);
    EXPECT_EQ(mean_average_precision(d, t).map, base);
  }
}

TEST(TopK, Examples) {
  Tensor<double> logits({1, 3}, {0.1, 2.0, -1.0});
  Tensor<double> labels({1, 3}, {0, 1, 0});
  EXPECT_EQ(top_k_accuracy(logits, labels, 1), 1.0);
  Tensor<double> wrong({1, 3}, {1, 0, 0});
  EXPECT_EQ(top_k_accuracy(logits, wrong, 1), 0.0);
  EXPECT_EQ(top_k_accuracy(logits, wrong, 3), 1.0);
  EXPECT_EQ(top_k_accuracy(logits, wrong, 10), 1.0);  // clamped to C
}

TEST(TopK, RandomLogitsMatchBinomialRate) {
  const std::size_t m = 100000, c = 200;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Tensor<double> logits({m, c}), labels({m, c});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) logits[i * c + j] = g(rng);
    labels[i * c + rng() % c] = 1.0;
  }
  const double p = 5.0 / 200.0, sigma = std::sqrt(p * (1 - p) / m);
  EXPECT_NEAR(top_k_accuracy(logits, labels, 5), p, 3 * sigma);
}

TEST(Argmax, TiesGoToLowestIndex) {
  Tensor<double> logits({2, 3}, {1, 1, 0, 0, 2, 2});
  Tensor<double> labels({2, 3}, {1, 0, 0, 0, 0, 1});
  EXPECT_EQ(argmax_accuracy(logits, labels), 0.5);
}

}  // namespace
}  // namespace adaf::metrics
