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

// Parallel kernels against their serial references at desk and full-size shapes.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "adaf/kernels.hpp"

namespace k = adaf::kernels;

namespace {

std::vector<float> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Args: rows, inner, cols
template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const k::MatmulDims d{static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
                        static_cast<std::size_t>(state.range(2))};
  const auto x = random_vector(d.rows * d.inner, 1), w = random_vector(d.inner * d.cols, 2),
             b = random_vector(d.cols, 3);
  std::vector<float> out(d.rows * d.cols);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::matmul_bias(d, std::span<const float>(x), w, b, out);
    else k::serial::matmul_bias(d, std::span<const float>(x), w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.rows * d.inner * d.cols));
}

// Args: batch (patches), filters, taps; length 400.
template <bool Parallel>
void BM_ConvPool(benchmark::State& state) {
  const k::Conv1dDims d{static_cast<std::size_t>(state.range(0)), 400, static_cast<std::size_t>(state.range(1)),
                        static_cast<std::size_t>(state.range(2))};
  const auto x = random_vector(d.batch * d.length, 4), w = random_vector(d.filters * d.taps, 5),
             b = random_vector(d.filters, 6);
  std::vector<float> out(d.batch * d.filters);
  std::vector<std::uint32_t> arg(d.batch * d.filters);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::conv1d_pool(d, k::Pool::kMax, std::span<const float>(x), w, b, out, arg);
    else k::serial::conv1d_pool(d, k::Pool::kMax, std::span<const float>(x), w, b, out, arg);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(d.batch * d.filters * d.length * d.taps));
}

template <bool Parallel>
void BM_ConvSame(benchmark::State& state) {
  const k::Conv1dDims d{static_cast<std::size_t>(state.range(0)), 400, static_cast<std::size_t>(state.range(1)),
                        static_cast<std::size_t>(state.range(2))};
  const auto x = random_vector(d.batch * d.length, 7), w = random_vector(d.filters * d.taps, 8),
             b = random_vector(d.filters, 9);
  std::vector<float> out(d.batch * d.filters * d.length);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::conv1d_same(d, std::span<const float>(x), w, b, out);
    else k::serial::conv1d_same(d, std::span<const float>(x), w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(d.batch * d.filters * d.length * d.taps));
}

}  // namespace

BENCHMARK(BM_Matmul<false>)->Name("matmul/serial")->Args({640, 400, 32})->Args({40, 400, 2048});
BENCHMARK(BM_Matmul<true>)->Name("matmul/parallel")->Args({640, 400, 32})->Args({40, 400, 2048});
BENCHMARK(BM_ConvPool<false>)->Name("conv1d_pool/serial")->Args({640, 16, 32})->Args({40, 64, 320});
BENCHMARK(BM_ConvPool<true>)->Name("conv1d_pool/parallel")->Args({640, 16, 32})->Args({40, 64, 320});
BENCHMARK(BM_ConvSame<false>)->Name("conv1d_same/serial")->Args({640, 16, 32});
BENCHMARK(BM_ConvSame<true>)->Name("conv1d_same/parallel")->Args({640, 16, 32});
BENCHMARK_MAIN();
