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

#include "adaf/params.hpp"

#include <cmath>
#include <numbers>

namespace adaf {

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_uniform(rng);  // (0, 1]
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (auto p : parts) {
    h ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
  }
  return h;
}

template <typename Real>
ad::Var<Real> ParamSet<Real>::add(std::string name, Tensor<Real> init) {
  if (contains(name)) fail(ErrorKind::kContract, "duplicate parameter name " + name);
  auto var = ad::parameter(std::move(init));
  entries_.emplace_back(std::move(name), var);
  return var;
}

template <typename Real>
const ad::Var<Real>& ParamSet<Real>::get(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return v;
  fail(ErrorKind::kContract, "unknown parameter " + name);
}

template <typename Real>
bool ParamSet<Real>::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return true;
  return false;
}

template <typename Real>
void ParamSet<Real>::zero_grad() {
  for (auto& [name, v] : entries_) v.zero_grad();
}

template <typename Real>
std::size_t ParamSet<Real>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.value().size();
  return n;
}

template <typename Real>
Tensor<Real> uniform(Shape shape, double lo, double hi, std::mt19937_64& rng) {
  Tensor<Real> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<Real>(lo + (hi - lo) * unit_uniform(rng));
  return t;
}

template <typename Real>
Tensor<Real> fan_in_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  return uniform<Real>(std::move(shape), -bound, bound, rng);
}

template class ParamSet<float>;
template class ParamSet<double>;
template Tensor<float> uniform(Shape, double, double, std::mt19937_64&);
template Tensor<double> uniform(Shape, double, double, std::mt19937_64&);
template Tensor<float> fan_in_uniform(Shape, std::size_t, std::mt19937_64&);
template Tensor<double> fan_in_uniform(Shape, std::size_t, std::mt19937_64&);

}  // namespace adaf
