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
#include <initializer_list>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "adaf/autodiff.hpp"

namespace adaf {

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on unit_uniform.
double standard_normal(std::mt19937_64& rng);

// Mixes several integers into one seed (splitmix64 finalizer chain).
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

// Named trainable tensors in registration order. The order is part of the
// checkpoint format and of the optimizer's update order.
template <typename Real>
class ParamSet {
 public:
  using Entry = std::pair<std::string, ad::Var<Real>>;

  ad::Var<Real> add(std::string name, Tensor<Real> init);
  const ad::Var<Real>& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<Entry> entries_;
};

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename Real>
Tensor<Real> fan_in_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

template <typename Real>
Tensor<Real> uniform(Shape shape, double lo, double hi, std::mt19937_64& rng);

extern template class ParamSet<float>;
extern template class ParamSet<double>;

}  // namespace adaf
