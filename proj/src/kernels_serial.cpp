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

#include "adaf/kernels.hpp"

// Reference kernels: the defining sums written out index by index, with
// explicit bounds tests instead of a padded buffer.

namespace adaf::kernels::serial {

namespace {

template <typename Real>
void matmul_bias_ref(MatmulDims d, std::span<const Real> x, std::span<const Real> w,
                     std::span<const Real> bias, std::span<Real> out) {
  for (std::size_t n = 0; n < d.rows; ++n) {
    for (std::size_t o = 0; o < d.cols; ++o) {
      Real acc = bias.empty() ? Real(0) : bias[o];
      for (std::size_t i = 0; i < d.inner; ++i) acc += x[n * d.inner + i] * w[i * d.cols + o];
      out[n * d.cols + o] = acc;
    }
  }
}

template <typename Real>
void matmul_grad_input_ref(MatmulDims d, std::span<const Real> g, std::span<const Real> w,
                           std::span<Real> gx) {
  for (std::size_t n = 0; n < d.rows; ++n)
    for (std::size_t i = 0; i < d.inner; ++i)
      for (std::size_t o = 0; o < d.cols; ++o)
        gx[n * d.inner + i] += g[n * d.cols + o] * w[i * d.cols + o];
}

template <typename Real>
void matmul_grad_weight_ref(MatmulDims d, std::span<const Real> x, std::span<const Real> g,
                            std::span<Real> gw, std::span<Real> gb) {
  for (std::size_t i = 0; i < d.inner; ++i)
    for (std::size_t o = 0; o < d.cols; ++o)
      for (std::size_t n = 0; n < d.rows; ++n)
        gw[i * d.cols + o] += x[n * d.inner + i] * g[n * d.cols + o];
  if (!gb.empty()) {
    for (std::size_t o = 0; o < d.cols; ++o)
      for (std::size_t n = 0; n < d.rows; ++n) gb[o] += g[n * d.cols + o];
  }
}

// Input sample feeding tap j of output t, or -1 when it falls in the padding.
inline std::ptrdiff_t source_index(Conv1dDims d, std::size_t t, std::size_t j) {
  const auto s = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(d.pad_left());
  return (s < 0 || s >= static_cast<std::ptrdiff_t>(d.length)) ? -1 : s;
}

template <typename Real>
void conv1d_ref(Conv1dDims d, std::span<const Real> x, std::span<const Real> w,
                std::span<const Real> bias, std::span<Real> out) {
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t f = 0; f < d.filters; ++f)
      for (std::size_t t = 0; t < d.length; ++t) {
        Real acc = bias.empty() ? Real(0) : bias[f];
        for (std::size_t j = 0; j < d.taps; ++j) {
          const auto s = source_index(d, t, j);
          if (s >= 0) acc += w[f * d.taps + j] * x[n * d.length + static_cast<std::size_t>(s)];
        }
        out[(n * d.filters + f) * d.length + t] = acc;
      }
}

template <typename Real>
void conv1d_grad_input_ref(Conv1dDims d, std::span<const Real> g, std::span<const Real> w,
                           std::span<Real> gx) {
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t f = 0; f < d.filters; ++f)
      for (std::size_t t = 0; t < d.length; ++t)
        for (std::size_t j = 0; j < d.taps; ++j) {
          const auto s = source_index(d, t, j);
          if (s >= 0)
            gx[n * d.length + static_cast<std::size_t>(s)] +=
                w[f * d.taps + j] * g[(n * d.filters + f) * d.length + t];
        }
}

template <typename Real>
void conv1d_grad_weight_ref(Conv1dDims d, std::span<const Real> x, std::span<const Real> g,
                            std::span<Real> gw, std::span<Real> gb) {
  for (std::size_t f = 0; f < d.filters; ++f)
    for (std::size_t j = 0; j < d.taps; ++j)
      for (std::size_t n = 0; n < d.batch; ++n)
        for (std::size_t t = 0; t < d.length; ++t) {
          const auto s = source_index(d, t, j);
          if (s >= 0)
            gw[f * d.taps + j] += x[n * d.length + static_cast<std::size_t>(s)] *
                                  g[(n * d.filters + f) * d.length + t];
        }
  if (!gb.empty()) {
    for (std::size_t f = 0; f < d.filters; ++f)
      for (std::size_t n = 0; n < d.batch; ++n)
        for (std::size_t t = 0; t < d.length; ++t) gb[f] += g[(n * d.filters + f) * d.length + t];
  }
}

// Pooled conv: evaluate every conv output by its definition, then pool.
template <typename Real>
Real conv_at(Conv1dDims d, std::span<const Real> x, std::span<const Real> w,
             std::span<const Real> bias, std::size_t n, std::size_t f, std::size_t t) {
  Real acc = bias.empty() ? Real(0) : bias[f];
  for (std::size_t j = 0; j < d.taps; ++j) {
    const auto s = source_index(d, t, j);
    if (s >= 0) acc += w[f * d.taps + j] * x[n * d.length + static_cast<std::size_t>(s)];
  }
  return acc;
}

template <typename Real>
void conv1d_pool_ref(Conv1dDims d, Pool pool, std::span<const Real> x, std::span<const Real> w,
                     std::span<const Real> bias, std::span<Real> out,
                     std::span<std::uint32_t> arg) {
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t f = 0; f < d.filters; ++f) {
      Real best = conv_at(d, x, w, bias, n, f, 0), total = best;
      std::size_t best_t = 0;
      for (std::size_t t = 1; t < d.length; ++t) {
        const Real v = conv_at(d, x, w, bias, n, f, t);
        total += v;
        if (v > best) {
          best = v;
          best_t = t;
        }
      }
      if (pool == Pool::kMax) {
        out[n * d.filters + f] = best;
        arg[n * d.filters + f] = static_cast<std::uint32_t>(best_t);
      } else {
        out[n * d.filters + f] = total / static_cast<Real>(d.length);
      }
    }
}

// d out[n,f] / d conv[n,f,t]
template <typename Real>
Real pool_weight(Conv1dDims d, Pool pool, std::span<const std::uint32_t> arg, std::size_t n,
                 std::size_t f, std::size_t t) {
  if (pool == Pool::kAvg) return Real(1) / static_cast<Real>(d.length);
  return arg[n * d.filters + f] == t ? Real(1) : Real(0);
}

template <typename Real>
void conv1d_pool_grad_input_ref(Conv1dDims d, Pool pool, std::span<const Real> g,
                                std::span<const Real> w, std::span<const std::uint32_t> arg,
                                std::span<Real> gx) {
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t f = 0; f < d.filters; ++f)
      for (std::size_t t = 0; t < d.length; ++t) {
        const Real gt = g[n * d.filters + f] * pool_weight<Real>(d, pool, arg, n, f, t);
        for (std::size_t j = 0; j < d.taps; ++j) {
          const auto s = source_index(d, t, j);
          if (s >= 0) gx[n * d.length + static_cast<std::size_t>(s)] += w[f * d.taps + j] * gt;
        }
      }
}

template <typename Real>
void conv1d_pool_grad_weight_ref(Conv1dDims d, Pool pool, std::span<const Real> x,
                                 std::span<const Real> g, std::span<const std::uint32_t> arg,
                                 std::span<Real> gw, std::span<Real> gb) {
  for (std::size_t f = 0; f < d.filters; ++f)
    for (std::size_t n = 0; n < d.batch; ++n)
      for (std::size_t t = 0; t < d.length; ++t) {
        const Real gt = g[n * d.filters + f] * pool_weight<Real>(d, pool, arg, n, f, t);
        if (!gb.empty()) gb[f] += gt;
        for (std::size_t j = 0; j < d.taps; ++j) {
          const auto s = source_index(d, t, j);
          if (s >= 0) gw[f * d.taps + j] += x[n * d.length + static_cast<std::size_t>(s)] * gt;
        }
      }
}

}  // namespace

#define ADAF_SERIAL_DEFS(Real)                                                           \
  void matmul_bias(MatmulDims d, std::span<const Real> x, std::span<const Real> w,       \
                   std::span<const Real> bias, std::span<Real> out) {                    \
    matmul_bias_ref(d, x, w, bias, out);                                                 \
  }                                                                                      \
  void matmul_grad_input(MatmulDims d, std::span<const Real> grad_out,                   \
                         std::span<const Real> w, std::span<Real> grad_x) {              \
    matmul_grad_input_ref(d, grad_out, w, grad_x);                                       \
  }                                                                                      \
  void matmul_grad_weight(MatmulDims d, std::span<const Real> x,                         \
                          std::span<const Real> grad_out, std::span<Real> grad_w,        \
                          std::span<Real> grad_bias) {                                   \
    matmul_grad_weight_ref(d, x, grad_out, grad_w, grad_bias);                           \
  }                                                                                      \
  void conv1d_same(Conv1dDims d, std::span<const Real> x, std::span<const Real> w,       \
                   std::span<const Real> bias, std::span<Real> out) {                    \
    conv1d_ref(d, x, w, bias, out);                                                      \
  }                                                                                      \
  void conv1d_same_grad_input(Conv1dDims d, std::span<const Real> grad_out,              \
                              std::span<const Real> w, std::span<Real> grad_x) {         \
    conv1d_grad_input_ref(d, grad_out, w, grad_x);                                       \
  }                                                                                      \
  void conv1d_same_grad_weight(Conv1dDims d, std::span<const Real> x,                    \
                               std::span<const Real> grad_out, std::span<Real> grad_w,   \
                               std::span<Real> grad_bias) {                              \
    conv1d_grad_weight_ref(d, x, grad_out, grad_w, grad_bias);                           \
  }                                                                                      \
  void conv1d_pool(Conv1dDims d, Pool pool, std::span<const Real> x,                     \
                   std::span<const Real> w, std::span<const Real> bias,                  \
                   std::span<Real> out, std::span<std::uint32_t> arg) {                  \
    conv1d_pool_ref(d, pool, x, w, bias, out, arg);                                      \
  }                                                                                      \
  void conv1d_pool_grad_input(Conv1dDims d, Pool pool, std::span<const Real> grad_out,   \
                              std::span<const Real> w, std::span<const std::uint32_t> arg, \
                              std::span<Real> grad_x) {                                  \
    conv1d_pool_grad_input_ref(d, pool, grad_out, w, arg, grad_x);                       \
  }                                                                                      \
  void conv1d_pool_grad_weight(Conv1dDims d, Pool pool, std::span<const Real> x,         \
                               std::span<const Real> grad_out,                           \
                               std::span<const std::uint32_t> arg, std::span<Real> grad_w, \
                               std::span<Real> grad_bias) {                              \
    conv1d_pool_grad_weight_ref(d, pool, x, grad_out, arg, grad_w, grad_bias);           \
  }

ADAF_SERIAL_DEFS(float)
ADAF_SERIAL_DEFS(double)

#undef ADAF_SERIAL_DEFS

}  // namespace adaf::kernels::serial
