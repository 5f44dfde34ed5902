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

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "adaf/checkpoint.hpp"
#include "adaf/config.hpp"

namespace adaf::run {

struct Splits {
  io::Dataset train;
  io::Dataset valid;
};

// Synthetic specs are rendered in memory; manifests are decoded from disk.
Splits prepare_data(const DataConfig& data);
// Dataset for one named split of the run's data section.
io::Dataset load_split(const DataConfig& data, const std::string& split);

// Data for evaluating a trained run: the given manifest, or the named split
// of the run's own data section. The class list must match the run's.
io::Dataset evaluation_data(const RunConfig& config,
                            const std::optional<std::filesystem::path>& manifest,
                            const std::string& split);

// Copies data-dependent dimensions (class count, tokens per chunk) into the
// backbone section.
void resolve_dimensions(RunConfig& config, const io::Dataset& train);

struct TrainOptions {
  // Continue from this checkpoint instead of starting fresh.
  std::optional<std::filesystem::path> resume_from;
  // Stop after this epoch completes (for interrupted-run experiments).
  std::optional<std::size_t> stop_after_epoch;
  // Called after every epoch.
  std::function<void(const training::EpochMetrics&)> on_epoch;
};

struct TrainResult {
  RunConfig config;  // resolved
  std::vector<training::EpochMetrics> history;  // epochs run by this call
  std::filesystem::path last_checkpoint;
};

// Writes into config.output_dir:
//   resolved-config.json, metrics.jsonl, checkpoints/epoch-NNNN.adaf,
//   final.adaf, report.json, per-class-ap.csv (the last three on completion).
TrainResult train(RunConfig config, const TrainOptions& options = {});

checkpoint::Checkpoint make_checkpoint(const RunConfig& config, const Model<float>& model,
                                       const training::Adam& adam, std::size_t epoch);

struct LoadedModel {
  RunConfig config;
  Model<float> model;
  std::size_t epoch;
};

LoadedModel load_model(const std::filesystem::path& checkpoint_path);
LoadedModel load_model(const checkpoint::Checkpoint& checkpoint);

std::filesystem::path checkpoint_path(const std::filesystem::path& output_dir, std::size_t epoch);

std::vector<training::EpochMetrics> read_metrics_log(const std::filesystem::path& path);

}  // namespace adaf::run
