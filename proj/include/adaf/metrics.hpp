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

#pragma once

#include <string>
#include <vector>

#include "adaf/tensor.hpp"

namespace adaf::metrics {

struct ApResult {
  double map = 0.0;
  std::vector<double> per_class;       // NaN for excluded classes
  std::vector<std::size_t> excluded;  // classes without any positive
};

// Per class, rank the N scores descending (ties keep original order) and
// average precision-at-rank over the positives. MAP is the unweighted mean over
// classes that have at least one positive.
ApResult mean_average_precision(const Tensor<double>& scores, const Tensor<double>& targets);

// Fraction of rows whose k highest logits contain at least one true class.
// k larger than C is clamped to C.
double top_k_accuracy(const Tensor<double>& logits, const Tensor<double>& targets, std::size_t k);

// Fraction of rows whose argmax (lowest index on ties) is a true class.
double argmax_accuracy(const Tensor<double>& logits, const Tensor<double>& targets);

}  // namespace adaf::metrics
