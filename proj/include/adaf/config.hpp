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
#include <optional>
#include <string>

#include "adaf/model.hpp"
#include "adaf/signal_io.hpp"
#include "adaf/training.hpp"
#include "json.hpp"

namespace adaf {

struct DataConfig {
  // Exactly one of synth / manifests is set after parsing.
  std::optional<io::SynthSpec> synth;
  std::optional<std::filesystem::path> train_manifest;
  std::optional<std::filesystem::path> valid_manifest;
  std::size_t patch_length = io::kDefaultPatchLength;
  double chunk_seconds = 1.0;
};

// One JSON file describing a whole experiment:
//
//   { "data": {"synth": {...} | "<spec.json>", "manifest": {"train": "...", "valid": "..."},
//              "patch_length": 400, "chunk_seconds": 1.0},
//     "frontend": {...}, "backbone": {...}, "train": {...}, "output_dir": "runs/x" }
//
// Relative paths resolve against the config file's directory. Unknown keys
// are validation errors.
struct RunConfig {
  DataConfig data;
  frontend::FrontEndConfig frontend;
  backbone::BackboneConfig backbone;
  training::TrainConfig train;
  std::filesystem::path output_dir = "run";
  // Label order; filled from the training data when empty.
  std::vector<std::string> classes;
  bool pre_loss_sigmoid = false;

  ModelConfig model() const;
  void validate() const;
};

nlohmann::json to_json(const frontend::FrontEndConfig& c);
nlohmann::json to_json(const backbone::BackboneConfig& c);
nlohmann::json to_json(const training::TrainConfig& c);
// Fully materialized: every default written out, synth specs inlined.
nlohmann::json to_json(const RunConfig& c);

frontend::FrontEndConfig frontend_config_from_json(const nlohmann::json& j);
backbone::BackboneConfig backbone_config_from_json(const nlohmann::json& j);
training::TrainConfig train_config_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace adaf
