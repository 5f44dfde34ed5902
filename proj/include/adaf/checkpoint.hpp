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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adaf/tensor.hpp"
#include "json.hpp"

// Binary layout, all integers little-endian:
//
//   "ADAF"  u32 version  u32 tensor_count
//   per tensor: u32 name_bytes, name (UTF-8), u32 rank, u64 dims[rank],
//               float32 values[prod(dims)]
//   u32 json_bytes, JSON config snapshot (UTF-8)
//
// Optimizer moments, the step counter, the last completed epoch and the RNG
// seed are stored as extra tensors next to the parameters.

namespace adaf::checkpoint {

inline constexpr std::uint32_t kFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  nlohmann::json config = nlohmann::json::object();

  const Tensor<float>* find(const std::string& name) const;
  const Tensor<float>& at(const std::string& name) const;  // throws checkpoint error
};

std::vector<std::uint8_t> encode(const Checkpoint& checkpoint);
Checkpoint decode(std::span<const std::uint8_t> bytes);

void save(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

// Unsigned integers stored exactly as four 16-bit limbs in float slots.
Tensor<float> pack_u64(std::uint64_t value);
std::uint64_t unpack_u64(const Tensor<float>& packed);

}  // namespace adaf::checkpoint
