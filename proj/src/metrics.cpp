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

#include "adaf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adaf/error.hpp"

namespace adaf::metrics {

namespace {

void check_pair(const Tensor<double>& a, const Tensor<double>& b, const char* what) {
  if (a.rank() != 2 || a.shape() != b.shape()) {
    fail(ErrorKind::kShape, std::string(what) + ": expected matching NxC inputs, got " +
                                adaf::to_string(a.shape()) + " and " + adaf::to_string(b.shape()));
  }
}

}  // namespace

ApResult mean_average_precision(const Tensor<double>& scores, const Tensor<double>& targets) {
  check_pair(scores, targets, "mean_average_precision");
  const std::size_t n = scores.dim(0), c = scores.dim(1);
  ApResult out;
  out.per_class.assign(c, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> order(n);
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t j = 0; j < c; ++j) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[a * c + j] > scores[b * c + j];
    });
    std::size_t hits = 0;
    double sum_prec = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (targets[order[r] * c + j] > 0.5) {
        ++hits;
        sum_prec += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    }
    if (hits == 0) {
      out.excluded.push_back(j);
      continue;
    }
    out.per_class[j] = sum_prec / static_cast<double>(hits);
    total += out.per_class[j];
    ++counted;
  }
  if (counted == 0) fail(ErrorKind::kNoPositives, "mean_average_precision: targets are all zero");
  out.map = total / static_cast<double>(counted);
  return out;
}

double top_k_accuracy(const Tensor<double>& logits, const Tensor<double>& targets, std::size_t k) {
  check_pair(logits, targets, "top_k_accuracy");
  const std::size_t m = logits.dim(0), c = logits.dim(1);
  if (m == 0) return 0.0;
  k = std::min(k, c);
  std::vector<std::size_t> order(c);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m; ++i) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return logits[i * c + a] > logits[i * c + b];
    });
    for (std::size_t r = 0; r < k; ++r) {
      if (targets[i * c + order[r]] > 0.5) {
        ++correct;
        break;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(m);
}

double argmax_accuracy(const Tensor<double>& logits, const Tensor<double>& targets) {
  return top_k_accuracy(logits, targets, 1);
}

}  // namespace adaf::metrics
