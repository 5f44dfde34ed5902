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

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

#include "adaf/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adaf::kernels {

namespace {

int& thread_cap() {
  static int cap = [] {
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    if (const char* env = std::getenv("ADAF_THREADS")) {
      try {
        int requested = std::stoi(env);
        if (requested >= 1) threads = std::min(threads, requested);
      } catch (const std::exception&) {
      }
    }
    return threads;
  }();
  return cap;
}

using Index = std::ptrdiff_t;

template <typename Real>
void matmul_bias_impl(MatmulDims d, const Real* x, const Real* w, const Real* bias,
                      Real* out) {
  const Index rows = static_cast<Index>(d.rows);
#pragma omp parallel for schedule(static) num_threads(thread_cap())
  for (Index n = 0; n < rows; ++n) {
    Real* o = out + n * d.cols;
    if (bias) {
      std::copy(bias, bias + d.cols, o);
    } else {
      std::fill(o, o + d.cols, Real(0));
    }
    const Real* xr = x + n * d.inner;
    for (std::size_t i = 0; i < d.inner; ++i) {
      const Real xv = xr[i];
      if (xv == Real(0)) continue;
      const Real* wr = w + i * d.cols;
#pragma omp simd
      for (std::size_t c = 0; c < d.cols; ++c) o[c] += xv * wr[c];
    }
  }
}

template <typename Real>
void matmul_grad_input_impl(MatmulDims d, const Real* g, const Real* w, Real* gx) {
  const Index rows = static_cast<Index>(d.rows);
#pragma omp parallel for schedule(static) num_threads(thread_cap())
  for (Index n = 0; n < rows; ++n) {
    const Real* gr = g + n * d.cols;
    Real* dx = gx + n * d.inner;
    for (std::size_t i = 0; i < d.inner; ++i) {
      const Real* wr = w + i * d.cols;
      Real acc = 0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t c = 0; c < d.cols; ++c) acc += gr[c] * wr[c];
      dx[i] += acc;
    }
  }
}

template <typename Real>
void matmul_grad_weight_impl(MatmulDims d, const Real* x, const Real* g, Real* gw,
                             Real* gb) {
  const Index inner = static_cast<Index>(d.inner);
#pragma omp parallel for schedule(static) num_threads(thread_cap())
  for (Index i = 0; i < inner; ++i) {
    Real* dw = gw + i * d.cols;
    for (std::size_t n = 0; n < d.rows; ++n) {
      const Real xv = x[n * d.inner + i];
      if (xv == Real(0)) continue;
      const Real* gr = g + n * d.cols;
#pragma omp simd
      for (std::size_t c = 0; c < d.cols; ++c) dw[c] += xv * gr[c];
    }
  }
  if (gb) {
    for (std::size_t n = 0; n < d.rows; ++n) {
      const Real* gr = g + n * d.cols;
#pragma omp simd
      for (std::size_t c = 0; c < d.cols; ++c) gb[c] += gr[c];
    }
  }
}

template <typename Real>
void fill_padded(Conv1dDims d, const Real* row, std::vector<Real>& padded) {
  padded.assign(d.length + d.taps - 1, Real(0));
  std::copy(row, row + d.length, padded.begin() + static_cast<Index>(d.pad_left()));
}

template <typename Real>
void conv1d_impl(Conv1dDims d, const Real* x, const Real* w, const Real* bias, Real* out) {
  const Index batch = static_cast<Index>(d.batch);
#pragma omp parallel num_threads(thread_cap())
  {
    std::vector<Real> padded;
#pragma omp for schedule(static)
    for (Index n = 0; n < batch; ++n) {
      fill_padded(d, x + n * d.length, padded);
      const Real* xp = padded.data();
      for (std::size_t f = 0; f < d.filters; ++f) {
        Real* o = out + (n * d.filters + f) * d.length;
        std::fill(o, o + d.length, bias ? bias[f] : Real(0));
        const Real* wf = w + f * d.taps;
        for (std::size_t j = 0; j < d.taps; ++j) {
          const Real wv = wf[j];
          const Real* src = xp + j;
#pragma omp simd
          for (std::size_t t = 0; t < d.length; ++t) o[t] += wv * src[t];
        }
      }
    }
  }
}

template <typename Real>
void conv1d_grad_input_impl(Conv1dDims d, const Real* g, const Real* w, Real* gx) {
  const Index batch = static_cast<Index>(d.batch);
  const std::size_t pad = d.pad_left();
#pragma omp parallel num_threads(thread_cap())
  {
    std::vector<Real> padded;
#pragma omp for schedule(static)
    for (Index n = 0; n < batch; ++n) {
      padded.assign(d.length + d.taps - 1, Real(0));
      Real* dxp = padded.data();
      for (std::size_t f = 0; f < d.filters; ++f) {
        const Real* gr = g + (n * d.filters + f) * d.length;
        const Real* wf = w + f * d.taps;
        for (std::size_t t = 0; t < d.length; ++t) {
          const Real gv = gr[t];
          if (gv == Real(0)) continue;
          Real* dst = dxp + t;
#pragma omp simd
          for (std::size_t j = 0; j < d.taps; ++j) dst[j] += gv * wf[j];
        }
      }
      Real* dx = gx + n * d.length;
      for (std::size_t s = 0; s < d.length; ++s) dx[s] += dxp[s + pad];
    }
  }
}

template <typename Real>
void conv1d_grad_weight_impl(Conv1dDims d, const Real* x, const Real* g, Real* gw,
                             Real* gb) {
  const Index filters = static_cast<Index>(d.filters);
#pragma omp parallel num_threads(thread_cap())
  {
    std::vector<Real> padded;
#pragma omp for schedule(static)
    for (Index f = 0; f < filters; ++f) {
      Real* dw = gw + f * d.taps;
      Real db = 0;
      for (std::size_t n = 0; n < d.batch; ++n) {
        const Real* gr = g + (n * d.filters + f) * d.length;
        bool any = false;
        for (std::size_t t = 0; t < d.length && !any; ++t) any = gr[t] != Real(0);
        if (!any) continue;
        fill_padded(d, x + n * d.length, padded);
        const Real* xp = padded.data();
        for (std::size_t t = 0; t < d.length; ++t) {
          const Real gv = gr[t];
          if (gv == Real(0)) continue;
          db += gv;
          const Real* src = xp + t;
#pragma omp simd
          for (std::size_t j = 0; j < d.taps; ++j) dw[j] += gv * src[j];
        }
      }
      if (gb) gb[f] += db;
    }
  }
}

template <typename Real>
void conv1d_pool_impl(Conv1dDims d, Pool pool, const Real* x, const Real* w, const Real* bias,
                      Real* out, std::uint32_t* arg) {
  const Index batch = static_cast<Index>(d.batch);
  const Real inv_len = Real(1) / static_cast<Real>(d.length);
#pragma omp parallel num_threads(thread_cap())
  {
    std::vector<Real> padded, row(d.length), means(d.taps);
#pragma omp for schedule(static)
    for (Index n = 0; n < batch; ++n) {
      fill_padded(d, x + n * d.length, padded);
      const Real* xp = padded.data();
      Real* o = out + n * d.filters;
      if (pool == Pool::kAvg) {
        // mean_t sum_j w_j xp[t+j] = sum_j w_j mean_t xp[t+j]
        for (std::size_t j = 0; j < d.taps; ++j) {
          Real acc = 0;
#pragma omp simd reduction(+ : acc)
          for (std::size_t t = 0; t < d.length; ++t) acc += xp[t + j];
          means[j] = acc * inv_len;
        }
        for (std::size_t f = 0; f < d.filters; ++f) {
          const Real* wf = w + f * d.taps;
          Real acc = 0;
#pragma omp simd reduction(+ : acc)
          for (std::size_t j = 0; j < d.taps; ++j) acc += wf[j] * means[j];
          o[f] = (bias ? bias[f] : Real(0)) + acc;
        }
        continue;
      }
      for (std::size_t f = 0; f < d.filters; ++f) {
        std::fill(row.begin(), row.end(), bias ? bias[f] : Real(0));
        const Real* wf = w + f * d.taps;
        Real* r = row.data();
        for (std::size_t j = 0; j < d.taps; ++j) {
          const Real wv = wf[j];
          const Real* src = xp + j;
#pragma omp simd
          for (std::size_t t = 0; t < d.length; ++t) r[t] += wv * src[t];
        }
        std::size_t best = 0;
        for (std::size_t t = 1; t < d.length; ++t)
          if (r[t] > r[best]) best = t;
        o[f] = r[best];
        arg[n * d.filters + f] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

template <typename Real>
void conv1d_pool_grad_input_impl(Conv1dDims d, Pool pool, const Real* g, const Real* w,
                                 const std::uint32_t* arg, Real* gx) {
  const Index batch = static_cast<Index>(d.batch);
  const std::size_t pad = d.pad_left();
  const Real inv_len = Real(1) / static_cast<Real>(d.length);
#pragma omp parallel num_threads(thread_cap())
  {
    std::vector<Real> padded, gm(d.taps);
#pragma omp for schedule(static)
    for (Index n = 0; n < batch; ++n) {
      padded.assign(d.length + d.taps - 1, Real(0));
      Real* dxp = padded.data();
      const Real* gr = g + n * d.filters;
      if (pool == Pool::kAvg) {
        std::fill(gm.begin(), gm.end(), Real(0));
        for (std::size_t f = 0; f < d.filters; ++f) {
          const Real gv = gr[f];
          if (gv == Real(0)) continue;
          const Real* wf = w + f * d.taps;
#pragma omp simd
          for (std::size_t j = 0; j < d.taps; ++j) gm[j] += gv * wf[j];
        }
        for (std::size_t j = 0; j < d.taps; ++j) {
          const Real v = gm[j] * inv_len;
          Real* dst = dxp + j;
#pragma omp simd
          for (std::size_t t = 0; t < d.length; ++t) dst[t] += v;
        }
      } else {
        for (std::size_t f = 0; f < d.filters; ++f) {
          const Real gv = gr[f];
          if (gv == Real(0)) continue;
          const Real* wf = w + f * d.taps;
          Real* dst = dxp + arg[n * d.filters + f];
#pragma omp simd
          for (std::size_t j = 0; j < d.taps; ++j) dst[j] += gv * wf[j];
        }
      }
      Real* dx = gx + n * d.length;
      for (std::size_t s = 0; s < d.length; ++s) dx[s] += dxp[s + pad];
    }
  }
}

template <typename Real>
void conv1d_pool_grad_weight_impl(Conv1dDims d, Pool pool, const Real* x, const Real* g,
                                  const std::uint32_t* arg, Real* gw, Real* gb) {
  const Index filters = static_cast<Index>(d.filters);
  const Index batch = static_cast<Index>(d.batch);
  const Real inv_len = Real(1) / static_cast<Real>(d.length);
  // Window means (kAvg) or padded inputs (kMax), one row per batch item.
  const std::size_t width = pool == Pool::kAvg ? d.taps : d.length + d.taps - 1;
  std::vector<Real> rows(d.batch * width);
#pragma omp parallel num_threads(thread_cap())
  {
    std::vector<Real> padded;
#pragma omp for schedule(static)
    for (Index n = 0; n < batch; ++n) {
      fill_padded(d, x + n * d.length, padded);
      Real* dst = rows.data() + n * width;
      if (pool == Pool::kMax) {
        std::copy(padded.begin(), padded.end(), dst);
        continue;
      }
      for (std::size_t j = 0; j < d.taps; ++j) {
        Real acc = 0;
        const Real* src = padded.data() + j;
#pragma omp simd reduction(+ : acc)
        for (std::size_t t = 0; t < d.length; ++t) acc += src[t];
        dst[j] = acc * inv_len;
      }
    }
#pragma omp for schedule(static)
    for (Index f = 0; f < filters; ++f) {
      Real* dw = gw + f * d.taps;
      Real db = 0;
      for (std::size_t n = 0; n < d.batch; ++n) {
        const Real gv = g[n * d.filters + f];
        if (gv == Real(0)) continue;
        db += gv;
        const Real* src = rows.data() + n * width;
        if (pool == Pool::kMax) src += arg[n * d.filters + f];
#pragma omp simd
        for (std::size_t j = 0; j < d.taps; ++j) dw[j] += gv * src[j];
      }
      if (gb) gb[f] += db;
    }
  }
}

template <typename Real>
const Real* ptr_or_null(std::span<const Real> s) {
  return s.empty() ? nullptr : s.data();
}

template <typename Real>
Real* ptr_or_null(std::span<Real> s) {
  return s.empty() ? nullptr : s.data();
}

}  // namespace

int max_threads() { return thread_cap(); }

void set_max_threads(int threads) { thread_cap() = std::max(1, threads); }

namespace parallel {

#define ADAF_PARALLEL_DEFS(Real)                                                           \
  void matmul_bias(MatmulDims d, std::span<const Real> x, std::span<const Real> w,         \
                   std::span<const Real> bias, std::span<Real> out) {                      \
    matmul_bias_impl(d, x.data(), w.data(), ptr_or_null(bias), out.data());                \
  }                                                                                        \
  void matmul_grad_input(MatmulDims d, std::span<const Real> grad_out,                     \
                         std::span<const Real> w, std::span<Real> grad_x) {                \
    matmul_grad_input_impl(d, grad_out.data(), w.data(), grad_x.data());                   \
  }                                                                                        \
  void matmul_grad_weight(MatmulDims d, std::span<const Real> x,                           \
                          std::span<const Real> grad_out, std::span<Real> grad_w,          \
                          std::span<Real> grad_bias) {                                     \
    matmul_grad_weight_impl(d, x.data(), grad_out.data(), grad_w.data(),                   \
                            ptr_or_null(grad_bias));                                       \
  }                                                                                        \
  void conv1d_same(Conv1dDims d, std::span<const Real> x, std::span<const Real> w,         \
                   std::span<const Real> bias, std::span<Real> out) {                      \
    conv1d_impl(d, x.data(), w.data(), ptr_or_null(bias), out.data());                     \
  }                                                                                        \
  void conv1d_same_grad_input(Conv1dDims d, std::span<const Real> grad_out,                \
                              std::span<const Real> w, std::span<Real> grad_x) {           \
    conv1d_grad_input_impl(d, grad_out.data(), w.data(), grad_x.data());                   \
  }                                                                                        \
  void conv1d_same_grad_weight(Conv1dDims d, std::span<const Real> x,                      \
                               std::span<const Real> grad_out, std::span<Real> grad_w,     \
                               std::span<Real> grad_bias) {                                \
    conv1d_grad_weight_impl(d, x.data(), grad_out.data(), grad_w.data(),                   \
                            ptr_or_null(grad_bias));                                       \
  }                                                                                        \
  void conv1d_pool(Conv1dDims d, Pool pool, std::span<const Real> x,                       \
                   std::span<const Real> w, std::span<const Real> bias,                    \
                   std::span<Real> out, std::span<std::uint32_t> arg) {                    \
    conv1d_pool_impl(d, pool, x.data(), w.data(), ptr_or_null(bias), out.data(),           \
                     arg.data());                                                          \
  }                                                                                        \
  void conv1d_pool_grad_input(Conv1dDims d, Pool pool, std::span<const Real> grad_out,     \
                              std::span<const Real> w, std::span<const std::uint32_t> arg, \
                              std::span<Real> grad_x) {                                    \
    conv1d_pool_grad_input_impl(d, pool, grad_out.data(), w.data(), arg.data(),            \
                                grad_x.data());                                            \
  }                                                                                        \
  void conv1d_pool_grad_weight(Conv1dDims d, Pool pool, std::span<const Real> x,           \
                               std::span<const Real> grad_out,                             \
                               std::span<const std::uint32_t> arg, std::span<Real> grad_w, \
                               std::span<Real> grad_bias) {                                \
    conv1d_pool_grad_weight_impl(d, pool, x.data(), grad_out.data(), arg.data(),           \
                                 grad_w.data(), ptr_or_null(grad_bias));                   \
  }

ADAF_PARALLEL_DEFS(float)
ADAF_PARALLEL_DEFS(double)

#undef ADAF_PARALLEL_DEFS

}  // namespace parallel

}  // namespace adaf::kernels
