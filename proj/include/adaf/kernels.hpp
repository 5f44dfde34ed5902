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

#include <cstddef>
#include <cstdint>
#include <span>

// Dense inner loops used by the autodiff primitives.
//
// Two implementations share one interface: `parallel` is the OpenMP version the
// library runs, `serial` is a direct transcription of the defining sums kept as
// the reference for tests and benchmarks. Every parallel kernel partitions its
// output so that each element is owned by exactly one thread and accumulated in
// a fixed order, so results do not depend on the thread count.
//
// Gradient kernels accumulate (+=) into their outputs.

namespace adaf::kernels {

// Thread cap for parallel kernels. Reads ADAF_THREADS on first use.
int max_threads();
void set_max_threads(int threads);

struct MatmulDims {
  std::size_t rows;    // N
  std::size_t inner;   // I
  std::size_t cols;    // O
};

struct Conv1dDims {
  std::size_t batch;    // N
  std::size_t length;   // L
  std::size_t filters;  // F
  std::size_t taps;     // K
  std::size_t pad_left() const noexcept { return taps / 2; }
};

enum class Pool { kMax, kAvg };

#define ADAF_KERNEL_DECLS(Real)                                                          \
  /* out[n,o] = b[o] + sum_i x[n,i] W[i,o]; bias may be empty. */                        \
  void matmul_bias(MatmulDims d, std::span<const Real> x, std::span<const Real> w,       \
                   std::span<const Real> bias, std::span<Real> out);                     \
  void matmul_grad_input(MatmulDims d, std::span<const Real> grad_out,                   \
                         std::span<const Real> w, std::span<Real> grad_x);               \
  void matmul_grad_weight(MatmulDims d, std::span<const Real> x,                         \
                          std::span<const Real> grad_out, std::span<Real> grad_w,        \
                          std::span<Real> grad_bias);                                    \
  /* out[n,f,t] = b[f] + sum_j W[f,j] xpad[n, t+j], zero padding K/2 left. */            \
  void conv1d_same(Conv1dDims d, std::span<const Real> x, std::span<const Real> w,       \
                   std::span<const Real> bias, std::span<Real> out);                     \
  void conv1d_same_grad_input(Conv1dDims d, std::span<const Real> grad_out,              \
                              std::span<const Real> w, std::span<Real> grad_x);          \
  void conv1d_same_grad_weight(Conv1dDims d, std::span<const Real> x,                    \
                               std::span<const Real> grad_out, std::span<Real> grad_w,   \
                               std::span<Real> grad_bias);                               \
  /* out[n,f] = max_t or mean_t of conv1d_same(x)[n,f,t], never materializing the  */   \
  /* NxFxL activations. For kMax, arg[n,f] gets the lowest maximizing t; arg is   */   \
  /* unused (may be empty) for kAvg.                                               */   \
  void conv1d_pool(Conv1dDims d, Pool pool, std::span<const Real> x,                     \
                   std::span<const Real> w, std::span<const Real> bias,                  \
                   std::span<Real> out, std::span<std::uint32_t> arg);                   \
  void conv1d_pool_grad_input(Conv1dDims d, Pool pool, std::span<const Real> grad_out,   \
                              std::span<const Real> w, std::span<const std::uint32_t> arg, \
                              std::span<Real> grad_x);                                   \
  void conv1d_pool_grad_weight(Conv1dDims d, Pool pool, std::span<const Real> x,         \
                               std::span<const Real> grad_out,                           \
                               std::span<const std::uint32_t> arg, std::span<Real> grad_w, \
                               std::span<Real> grad_bias);

namespace parallel {
ADAF_KERNEL_DECLS(float)
ADAF_KERNEL_DECLS(double)
}  // namespace parallel

namespace serial {
ADAF_KERNEL_DECLS(float)
ADAF_KERNEL_DECLS(double)
}  // namespace serial

#undef ADAF_KERNEL_DECLS

}  // namespace adaf::kernels
