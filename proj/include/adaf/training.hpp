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

#include <cstdint>
#include <string>
#include <vector>

#include "adaf/model.hpp"
#include "adaf/signal_io.hpp"

namespace adaf::training {

enum class Schedule { kCosine, kLinear, kExponential };

std::string to_string(Schedule schedule);
Schedule parse_schedule(const std::string& text);

struct TrainConfig {
  std::size_t epochs = 50;
  double lr_start = 2e-4;
  double lr_end = 1e-6;
  Schedule schedule = Schedule::kCosine;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  double huber_delta = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t checkpoint_every = 10;
  std::size_t top_k = 5;

  void validate() const;
};

// Learning rate for a 0-based epoch. Both endpoints are returned exactly.
double lr_at(std::size_t epoch, const TrainConfig& config);

// Adam with bias correction. Moments are kept per parameter in registration
// order, and updates run in that order.
class Adam {
 public:
  Adam(const ParamSet<float>& params, double beta1, double beta2, double eps);

  void step(ParamSet<float>& params, double lr);

  std::uint64_t steps() const { return steps_; }
  std::vector<Tensor<float>>& first_moments() { return m_; }
  std::vector<Tensor<float>>& second_moments() { return v_; }
  const std::vector<Tensor<float>>& first_moments() const { return m_; }
  const std::vector<Tensor<float>>& second_moments() const { return v_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor<float>> m_, v_;
};

struct EvalOptions {
  std::size_t batch_size = 16;
  double huber_delta = 1.0;
  std::size_t top_k = 5;
};

// Scores and metrics over one split. Clips split into several chunks are
// scored by the mean of their chunk logits.
struct EvalReport {
  std::string split;
  std::vector<std::string> classes;
  double loss = 0.0;
  double map = 0.0;
  std::vector<double> per_class_ap;  // NaN where a class has no positives
  double top_k_patch = 0.0;
  std::size_t top_k = 5;
  double clip_accuracy = 0.0;
  std::size_t n_clips = 0;
  std::size_t n_patches = 0;
};

EvalReport evaluate(const Model<float>& model, const io::Dataset& dataset,
                    const EvalOptions& options);

nlohmann::json to_json(const EvalReport& report);
// class,ap rows; classes without positives get an empty ap cell.
std::string per_class_csv(const EvalReport& report);

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double map = 0.0;
  double top_k_patch = 0.0;
  double clip_accuracy = 0.0;
  std::vector<double> per_class_ap;
};

nlohmann::json to_json(const EpochMetrics& m);
EpochMetrics epoch_metrics_from_json(const nlohmann::json& j);

}  // namespace adaf::training
