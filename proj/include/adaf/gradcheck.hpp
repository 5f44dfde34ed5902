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

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "adaf/autodiff.hpp"

namespace adaf::gradcheck {

struct Options {
  std::size_t seeds = 20;
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor * max(1, |loss|)). The
  // loss factor tracks the rounding quantum of the difference quotient.
  double floor = 1e-5;
  // A coordinate over tolerance is re-probed once at step / 10, in case a
  // ReLU or max kink lies inside the stencil.
  bool retry_smaller_step = true;
  // Coordinates probed per input tensor (all when the tensor is smaller).
  std::size_t max_coords = 48;
};

// One differentiable test case: tracked inputs and a function of them.
struct Problem {
  std::vector<ad::Var<double>> inputs;
  std::function<ad::Var<double>()> forward;
};
using Builder = std::function<Problem(std::mt19937_64&)>;

struct Row {
  std::string name;
  std::size_t seeds = 0;
  std::size_t coords = 0;
  std::size_t retried = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

// Central differences on loss = <forward(), R> with a random R per seed.
Row check(const std::string& name, const Builder& build, const Options& options);

// Every primitive and every front end, plus the backbone and a full model.
std::vector<std::pair<std::string, Builder>> standard_cases();
std::vector<Row> run_all(const Options& options);

}  // namespace adaf::gradcheck
