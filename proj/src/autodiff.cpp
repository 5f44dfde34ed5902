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

#include "adaf/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "adaf/kernels.hpp"

namespace adaf::ad {

namespace {

thread_local bool g_recording = true;

template <typename Real>
using NodePtr = std::shared_ptr<Node<Real>>;

template <typename Real>
Var<Real> record(Tensor<Real> value, std::vector<NodePtr<Real>> parents,
                 std::function<void(Node<Real>&)> rule) {
  auto node = std::make_shared<Node<Real>>();
  node->value = std::move(value);
  node->is_leaf = false;
  node->requires_grad = g_recording &&
                        std::any_of(parents.begin(), parents.end(),
                                    [](const auto& p) { return p && p->requires_grad; });
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward = std::move(rule);
  }
  return Var<Real>(std::move(node));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  fail(ErrorKind::kShape,
       std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b));
}

void require_rank_at_least(const char* op, const Shape& s, std::size_t rank) {
  if (s.size() < rank) {
    fail(ErrorKind::kShape, std::string(op) + ": expected rank >= " + std::to_string(rank) +
                                ", got " + to_string(s));
  }
}

template <typename Real>
bool tracked(const NodePtr<Real>& n) {
  return n && n->requires_grad;
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }
bool NoGradGuard::enabled() { return !g_recording; }

template <typename Real>
Var<Real> parameter(Tensor<Real> value) {
  auto node = std::make_shared<Node<Real>>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var<Real>(std::move(node));
}

template <typename Real>
Var<Real> constant(Tensor<Real> value) {
  auto node = std::make_shared<Node<Real>>();
  node->value = std::move(value);
  return Var<Real>(std::move(node));
}

template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sb.size() > sa.size() || !std::equal(sb.rbegin(), sb.rend(), sa.rbegin())) {
    shape_error("add", sa, sb);
  }
  const std::size_t inner = numel(sb);
  const std::size_t outer = a.value().size() / std::max<std::size_t>(inner, 1);
  Tensor<Real> out = a.value();
  const auto& bv = b.value();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += bv[i];
  auto pa = a.shared();
  auto pb = b.shared();
  return record<Real>(std::move(out), {pa, pb}, [pa, pb, outer, inner](Node<Real>& self) {
    if (tracked(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (tracked(pb)) {
      auto& g = pb->ensure_grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) g[i] += self.grad[o * inner + i];
    }
  });
}

template <typename Real>
Var<Real> scale(const Var<Real>& x, Real factor) {
  Tensor<Real> out = x.value();
  for (auto& v : out.data()) v *= factor;
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px, factor](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

template <typename Real>
Var<Real> linear(const Var<Real>& x, const Var<Real>& w, const Var<Real>& b) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  require_rank_at_least("linear", sx, 1);
  if (sw.size() != 2 || sx.back() != sw[0]) shape_error("linear", sx, sw);
  if (b && (b.shape().size() != 1 || b.shape()[0] != sw[1])) shape_error("linear", sw, b.shape());

  kernels::MatmulDims d{x.value().size() / sw[0], sw[0], sw[1]};
  Shape out_shape = sx;
  out_shape.back() = sw[1];
  Tensor<Real> out(out_shape);
  std::span<const Real> bias = b ? b.value().data() : std::span<const Real>{};
  kernels::parallel::matmul_bias(d, x.value().data(), w.value().data(), bias, out.data());

  auto px = x.shared();
  auto pw = w.shared();
  auto pb = b ? b.shared() : NodePtr<Real>{};
  return record<Real>(std::move(out), {px, pw, pb}, [px, pw, pb, d](Node<Real>& self) {
    if (tracked(px)) {
      kernels::parallel::matmul_grad_input(d, self.grad.data(), pw->value.data(),
                                           px->ensure_grad().data());
    }
    if (tracked(pw) || tracked(pb)) {
      Tensor<Real> scratch_w;
      std::span<Real> gw;
      if (tracked(pw)) {
        gw = pw->ensure_grad().data();
      } else {
        scratch_w = Tensor<Real>(pw->value.shape());
        gw = scratch_w.data();
      }
      std::span<Real> gb = tracked(pb) ? pb->ensure_grad().data() : std::span<Real>{};
      kernels::parallel::matmul_grad_weight(d, px->value.data(), self.grad.data(), gw, gb);
    }
  });
}

template <typename Real>
Var<Real> conv1d_same(const Var<Real>& x, const Var<Real>& w, const Var<Real>& b) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 3 || sx[1] != 1 || sw.size() != 2) shape_error("conv1d_same", sx, sw);
  if (b && (b.shape().size() != 1 || b.shape()[0] != sw[0])) {
    shape_error("conv1d_same", sw, b.shape());
  }
  kernels::Conv1dDims d{sx[0], sx[2], sw[0], sw[1]};
  if (d.taps == 0 || d.length == 0) shape_error("conv1d_same", sx, sw);
  // With K-1 total padding any K >= 1 yields length L; K beyond L + K - 1 is impossible.
  Tensor<Real> out(Shape{d.batch, d.filters, d.length});
  std::span<const Real> bias = b ? b.value().data() : std::span<const Real>{};
  kernels::parallel::conv1d_same(d, x.value().data(), w.value().data(), bias, out.data());

  auto px = x.shared();
  auto pw = w.shared();
  auto pb = b ? b.shared() : NodePtr<Real>{};
  return record<Real>(std::move(out), {px, pw, pb}, [px, pw, pb, d](Node<Real>& self) {
    if (tracked(px)) {
      kernels::parallel::conv1d_same_grad_input(d, self.grad.data(), pw->value.data(),
                                                px->ensure_grad().data());
    }
    if (tracked(pw) || tracked(pb)) {
      Tensor<Real> scratch_w;
      std::span<Real> gw;
      if (tracked(pw)) {
        gw = pw->ensure_grad().data();
      } else {
        scratch_w = Tensor<Real>(pw->value.shape());
        gw = scratch_w.data();
      }
      std::span<Real> gb = tracked(pb) ? pb->ensure_grad().data() : std::span<Real>{};
      kernels::parallel::conv1d_same_grad_weight(d, px->value.data(), self.grad.data(), gw, gb);
    }
  });
}

template <typename Real>
Var<Real> conv1d_pool(const Var<Real>& x, const Var<Real>& w, const Var<Real>& b,
                      kernels::Pool pool) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 3 || sx[1] != 1 || sw.size() != 2) shape_error("conv1d_pool", sx, sw);
  if (b && (b.shape().size() != 1 || b.shape()[0] != sw[0])) {
    shape_error("conv1d_pool", sw, b.shape());
  }
  kernels::Conv1dDims d{sx[0], sx[2], sw[0], sw[1]};
  if (d.taps == 0 || d.length == 0) shape_error("conv1d_pool", sx, sw);
  Tensor<Real> out(Shape{d.batch, d.filters});
  auto arg = std::make_shared<std::vector<std::uint32_t>>(
      pool == kernels::Pool::kMax ? d.batch * d.filters : 0);
  std::span<const Real> bias = b ? b.value().data() : std::span<const Real>{};
  kernels::parallel::conv1d_pool(d, pool, x.value().data(), w.value().data(), bias, out.data(),
                                 *arg);

  auto px = x.shared();
  auto pw = w.shared();
  auto pb = b ? b.shared() : NodePtr<Real>{};
  return record<Real>(std::move(out), {px, pw, pb}, [px, pw, pb, d, pool, arg](Node<Real>& self) {
    if (tracked(px)) {
      kernels::parallel::conv1d_pool_grad_input(d, pool, self.grad.data(), pw->value.data(), *arg,
                                                px->ensure_grad().data());
    }
    if (tracked(pw) || tracked(pb)) {
      Tensor<Real> scratch_w;
      std::span<Real> gw;
      if (tracked(pw)) {
        gw = pw->ensure_grad().data();
      } else {
        scratch_w = Tensor<Real>(pw->value.shape());
        gw = scratch_w.data();
      }
      std::span<Real> gb = tracked(pb) ? pb->ensure_grad().data() : std::span<Real>{};
      kernels::parallel::conv1d_pool_grad_weight(d, pool, px->value.data(), self.grad.data(), *arg,
                                                 gw, gb);
    }
  });
}

template <typename Real>
Var<Real> relu(const Var<Real>& x) {
  Tensor<Real> out = x.value();
  for (auto& v : out.data()) v = v > Real(0) ? v : Real(0);
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (px->value[i] > Real(0)) g[i] += self.grad[i];
  });
}

template <typename Real>
Var<Real> sigmoid(const Var<Real>& x) {
  Tensor<Real> out = x.value();
  for (auto& v : out.data()) v = Real(1) / (Real(1) + std::exp(-v));
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Real y = self.value[i];
      g[i] += self.grad[i] * y * (Real(1) - y);
    }
  });
}

template <typename Real>
Var<Real> max_over_last(const Var<Real>& x) {
  const Shape& sx = x.shape();
  require_rank_at_least("max_over_last", sx, 1);
  const std::size_t len = sx.back();
  if (len == 0) fail(ErrorKind::kShape, "max_over_last: empty last axis in " + to_string(sx));
  const std::size_t rows = x.value().size() / len;
  Shape out_shape(sx.begin(), sx.end() - 1);
  Tensor<Real> out(out_shape);
  std::vector<std::uint32_t> arg(rows);
  const auto& xv = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = xv.data().data() + r * len;
    std::size_t best = 0;
    for (std::size_t i = 1; i < len; ++i)
      if (row[i] > row[best]) best = i;
    arg[r] = static_cast<std::uint32_t>(best);
    out[r] = row[best];
  }
  auto px = x.shared();
  return record<Real>(std::move(out), {px},
                      [px, arg = std::move(arg), len](Node<Real>& self) {
                        auto& g = px->ensure_grad();
                        for (std::size_t r = 0; r < arg.size(); ++r)
                          g[r * len + arg[r]] += self.grad[r];
                      });
}

template <typename Real>
Var<Real> mean_over_last(const Var<Real>& x) {
  const Shape& sx = x.shape();
  require_rank_at_least("mean_over_last", sx, 1);
  if (sx.back() == 0) fail(ErrorKind::kShape, "mean_over_last: empty last axis in " + to_string(sx));
  return mean_over_axis(x, sx.size() - 1);
}

template <typename Real>
Var<Real> mean_over_axis(const Var<Real>& x, std::size_t axis) {
  const Shape& sx = x.shape();
  if (axis >= sx.size() || sx[axis] == 0) {
    fail(ErrorKind::kShape, "mean_over_axis: bad axis " + std::to_string(axis) + " for " +
                                to_string(sx));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= sx[i];
  for (std::size_t i = axis + 1; i < sx.size(); ++i) inner *= sx[i];
  const std::size_t len = sx[axis];
  Shape out_shape = sx;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor<Real> out(out_shape);
  const auto& xv = x.value();
  const Real inv = Real(1) / static_cast<Real>(len);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < len; ++k)
      for (std::size_t i = 0; i < inner; ++i)
        out[o * inner + i] += xv[(o * len + k) * inner + i];
    for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] *= inv;
  }
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px, outer, inner, len, inv](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t k = 0; k < len; ++k)
        for (std::size_t i = 0; i < inner; ++i)
          g[(o * len + k) * inner + i] += self.grad[o * inner + i] * inv;
  });
}

template <typename Real>
Var<Real> softmax_last(const Var<Real>& x) {
  const Shape& sx = x.shape();
  require_rank_at_least("softmax_last", sx, 1);
  const std::size_t len = sx.back();
  if (len == 0) fail(ErrorKind::kShape, "softmax_last: empty last axis");
  const std::size_t rows = x.value().size() / len;
  Tensor<Real> out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    Real* row = out.data().data() + r * len;
    const Real mx = *std::max_element(row, row + len);
    Real total = 0;
    for (std::size_t i = 0; i < len; ++i) {
      row[i] = std::exp(row[i] - mx);
      total += row[i];
    }
    for (std::size_t i = 0; i < len; ++i) row[i] /= total;
  }
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px, rows, len](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* y = self.value.data().data() + r * len;
      const Real* dy = self.grad.data().data() + r * len;
      Real dot = 0;
      for (std::size_t i = 0; i < len; ++i) dot += dy[i] * y[i];
      for (std::size_t i = 0; i < len; ++i) g[r * len + i] += y[i] * (dy[i] - dot);
    }
  });
}

template <typename Real>
Var<Real> layer_norm(const Var<Real>& x, const Var<Real>& gain, const Var<Real>& bias) {
  const Shape& sx = x.shape();
  require_rank_at_least("layer_norm", sx, 1);
  const std::size_t dim = sx.back();
  if (gain.shape() != Shape{dim} || bias.shape() != Shape{dim}) {
    shape_error("layer_norm", sx, gain.shape());
  }
  const std::size_t rows = x.value().size() / dim;
  Tensor<Real> out(sx);
  Tensor<Real> normalized(sx);
  std::vector<Real> inv_std(rows);
  const auto& xv = x.value();
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = xv.data().data() + r * dim;
    Real mean = 0;
    for (std::size_t i = 0; i < dim; ++i) mean += row[i];
    mean /= static_cast<Real>(dim);
    Real var = 0;
    for (std::size_t i = 0; i < dim; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= static_cast<Real>(dim);
    const Real is = Real(1) / std::sqrt(var + static_cast<Real>(kLayerNormEps));
    inv_std[r] = is;
    for (std::size_t i = 0; i < dim; ++i) {
      const Real nh = (row[i] - mean) * is;
      normalized[r * dim + i] = nh;
      out[r * dim + i] = nh * gv[i] + bv[i];
    }
  }
  auto px = x.shared();
  auto pg = gain.shared();
  auto pb = bias.shared();
  return record<Real>(
      std::move(out), {px, pg, pb},
      [px, pg, pb, rows, dim, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](Node<Real>& self) {
        const auto& dy = self.grad;
        if (tracked(pg) || tracked(pb)) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t i = 0; i < dim; ++i) {
              if (tracked(pg)) pg->ensure_grad()[i] += dy[r * dim + i] * normalized[r * dim + i];
              if (tracked(pb)) pb->ensure_grad()[i] += dy[r * dim + i];
            }
        }
        if (tracked(px)) {
          auto& g = px->ensure_grad();
          const auto& gv = pg->value;
          std::vector<Real> dn(dim);
          for (std::size_t r = 0; r < rows; ++r) {
            Real mean_dn = 0, mean_dn_n = 0;
            for (std::size_t i = 0; i < dim; ++i) {
              dn[i] = dy[r * dim + i] * gv[i];
              mean_dn += dn[i];
              mean_dn_n += dn[i] * normalized[r * dim + i];
            }
            mean_dn /= static_cast<Real>(dim);
            mean_dn_n /= static_cast<Real>(dim);
            for (std::size_t i = 0; i < dim; ++i) {
              g[r * dim + i] +=
                  inv_std[r] * (dn[i] - mean_dn - normalized[r * dim + i] * mean_dn_n);
            }
          }
        }
      });
}

template <typename Real>
Var<Real> split_heads(const Var<Real>& x, std::size_t heads) {
  const Shape& sx = x.shape();
  if (sx.size() != 3 || heads == 0 || sx[2] % heads != 0) {
    fail(ErrorKind::kShape, "split_heads: cannot split " + to_string(sx) + " into " +
                                std::to_string(heads) + " heads");
  }
  const std::size_t B = sx[0], T = sx[1], dh = sx[2] / heads;
  Tensor<Real> out(Shape{B, heads, T, dh});
  const auto& xv = x.value();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t i = 0; i < dh; ++i)
          out[((b * heads + h) * T + t) * dh + i] = xv[(b * T + t) * sx[2] + h * dh + i];
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px, B, T, heads, dh](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t h = 0; h < heads; ++h)
          for (std::size_t i = 0; i < dh; ++i)
            g[(b * T + t) * heads * dh + h * dh + i] +=
                self.grad[((b * heads + h) * T + t) * dh + i];
  });
}

template <typename Real>
Var<Real> merge_heads(const Var<Real>& x) {
  const Shape& sx = x.shape();
  if (sx.size() != 4) fail(ErrorKind::kShape, "merge_heads: expected BxHxTxd, got " + to_string(sx));
  const std::size_t B = sx[0], H = sx[1], T = sx[2], dh = sx[3];
  Tensor<Real> out(Shape{B, T, H * dh});
  const auto& xv = x.value();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < dh; ++i)
          out[(b * T + t) * H * dh + h * dh + i] = xv[((b * H + h) * T + t) * dh + i];
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px, B, H, T, dh](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t i = 0; i < dh; ++i)
            g[((b * H + h) * T + t) * dh + i] += self.grad[(b * T + t) * H * dh + h * dh + i];
  });
}

template <typename Real>
Var<Real> scaled_dot_attention(const Var<Real>& q, const Var<Real>& k, const Var<Real>& v) {
  const Shape& sq = q.shape();
  if (sq.size() != 4) fail(ErrorKind::kShape, "attention: expected BxHxTxd, got " + to_string(sq));
  if (k.shape() != sq) shape_error("attention", sq, k.shape());
  if (v.shape() != sq) shape_error("attention", sq, v.shape());
  const std::size_t groups = sq[0] * sq[1], T = sq[2], dh = sq[3];
  const Real inv_sqrt = Real(1) / std::sqrt(static_cast<Real>(dh));

  Tensor<Real> probs(Shape{groups, T, T});
  Tensor<Real> out(sq);
  const auto& qv = q.value();
  const auto& kv = k.value();
  const auto& vv = v.value();
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * T * dh;
    for (std::size_t i = 0; i < T; ++i) {
      Real* p = probs.data().data() + (g * T + i) * T;
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::size_t j = 0; j < T; ++j) {
        Real s = 0;
        for (std::size_t c = 0; c < dh; ++c) s += qv[base + i * dh + c] * kv[base + j * dh + c];
        p[j] = s * inv_sqrt;
        mx = std::max(mx, p[j]);
      }
      Real total = 0;
      for (std::size_t j = 0; j < T; ++j) {
        p[j] = std::exp(p[j] - mx);
        total += p[j];
      }
      for (std::size_t j = 0; j < T; ++j) p[j] /= total;
      for (std::size_t j = 0; j < T; ++j)
        for (std::size_t c = 0; c < dh; ++c) out[base + i * dh + c] += p[j] * vv[base + j * dh + c];
    }
  }
  auto pq = q.shared();
  auto pk = k.shared();
  auto pv = v.shared();
  return record<Real>(
      std::move(out), {pq, pk, pv},
      [pq, pk, pv, groups, T, dh, inv_sqrt, probs = std::move(probs)](Node<Real>& self) {
        const auto& dy = self.grad;
        const auto& qv = pq->value;
        const auto& kv = pk->value;
        const auto& vv = pv->value;
        std::vector<Real> dp(T), ds(T);
        for (std::size_t g = 0; g < groups; ++g) {
          const std::size_t base = g * T * dh;
          for (std::size_t i = 0; i < T; ++i) {
            const Real* p = probs.data().data() + (g * T + i) * T;
            for (std::size_t j = 0; j < T; ++j) {
              Real s = 0;
              for (std::size_t c = 0; c < dh; ++c) s += dy[base + i * dh + c] * vv[base + j * dh + c];
              dp[j] = s;
            }
            Real dot = 0;
            for (std::size_t j = 0; j < T; ++j) dot += dp[j] * p[j];
            for (std::size_t j = 0; j < T; ++j) ds[j] = p[j] * (dp[j] - dot) * inv_sqrt;
            if (tracked(pv)) {
              auto& gv = pv->ensure_grad();
              for (std::size_t j = 0; j < T; ++j)
                for (std::size_t c = 0; c < dh; ++c) gv[base + j * dh + c] += p[j] * dy[base + i * dh + c];
            }
            if (tracked(pq)) {
              auto& gq = pq->ensure_grad();
              for (std::size_t j = 0; j < T; ++j)
                for (std::size_t c = 0; c < dh; ++c) gq[base + i * dh + c] += ds[j] * kv[base + j * dh + c];
            }
            if (tracked(pk)) {
              auto& gk = pk->ensure_grad();
              for (std::size_t j = 0; j < T; ++j)
                for (std::size_t c = 0; c < dh; ++c) gk[base + j * dh + c] += ds[j] * qv[base + i * dh + c];
            }
          }
        }
      });
}

template <typename Real>
Var<Real> dropout(const Var<Real>& x, double p, bool train, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) {
    fail(ErrorKind::kContract, "dropout: probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (!train || p == 0.0) return x;
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - p));
  std::vector<Real> mask(x.value().size());
  for (auto& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u >= p ? keep_scale : Real(0);
  }
  Tensor<Real> out = x.value();
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] *= mask[i];
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px, mask = std::move(mask)](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t i = 0; i < mask.size(); ++i) g[i] += mask[i] * self.grad[i];
  });
}

template <typename Real>
Var<Real> huber_loss(const Var<Real>& pred, const Var<Real>& target, double delta) {
  if (pred.shape() != target.shape()) shape_error("huber_loss", pred.shape(), target.shape());
  if (!(delta > 0.0)) fail(ErrorKind::kContract, "huber_loss: delta must be positive");
  const auto& pv = pred.value();
  const auto& tv = target.value();
  const std::size_t n = pv.size();
  const Real d = static_cast<Real>(delta);
  Real total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real e = pv[i] - tv[i];
    const Real a = std::abs(e);
    total += a <= d ? Real(0.5) * e * e : d * (a - Real(0.5) * d);
  }
  Tensor<Real> out(Shape{}, std::vector<Real>{n ? total / static_cast<Real>(n) : Real(0)});
  auto pp = pred.shared();
  auto pt = target.shared();
  return record<Real>(std::move(out), {pp, pt}, [pp, pt, n, d](Node<Real>& self) {
    const Real upstream = self.grad[0] / static_cast<Real>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Real e = pp->value[i] - pt->value[i];
      const Real slope = std::clamp(e, -d, d) * upstream;
      if (tracked(pp)) pp->ensure_grad()[i] += slope;
      if (tracked(pt)) pt->ensure_grad()[i] -= slope;
    }
  });
}

template <typename Real>
Var<Real> sum(const Var<Real>& x) {
  Real total = 0;
  for (auto v : x.value().data()) total += v;
  auto px = x.shared();
  return record<Real>(Tensor<Real>(Shape{}, std::vector<Real>{total}), {px},
                      [px](Node<Real>& self) {
                        auto& g = px->ensure_grad();
                        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
                      });
}

template <typename Real>
Var<Real> dot_with(const Var<Real>& x, const Tensor<Real>& weights) {
  if (weights.shape() != x.shape()) shape_error("dot_with", x.shape(), weights.shape());
  Real total = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) total += weights[i] * x.value()[i];
  auto px = x.shared();
  return record<Real>(Tensor<Real>(Shape{}, std::vector<Real>{total}), {px},
                      [px, weights](Node<Real>& self) {
                        auto& g = px->ensure_grad();
                        for (std::size_t i = 0; i < g.size(); ++i) g[i] += weights[i] * self.grad[0];
                      });
}

template <typename Real>
Var<Real> reshape(const Var<Real>& x, Shape shape) {
  Tensor<Real> out = x.value().reshaped(std::move(shape));
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename Real>
Var<Real> leading_rows(const Var<Real>& x, std::size_t count) {
  const Shape& sx = x.shape();
  require_rank_at_least("leading_rows", sx, 1);
  if (count > sx[0]) {
    fail(ErrorKind::kShape, "leading_rows: " + std::to_string(count) + " rows requested from " +
                                to_string(sx));
  }
  Shape out_shape = sx;
  out_shape[0] = count;
  const std::size_t n = numel(out_shape);
  Tensor<Real> out(out_shape);
  std::copy_n(x.value().data().data(), n, out.data().data());
  auto px = x.shared();
  return record<Real>(std::move(out), {px}, [px, n](Node<Real>& self) {
    auto& g = px->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i];
  });
}

template <typename Real>
Var<Real> stack_routes(std::span<const Var<Real>> parts) {
  if (parts.empty()) fail(ErrorKind::kShape, "stack_routes: no inputs");
  const Shape& s0 = parts[0].shape();
  require_rank_at_least("stack_routes", s0, 1);
  for (const auto& p : parts)
    if (p.shape() != s0) shape_error("stack_routes", s0, p.shape());
  const std::size_t k = parts.size();
  const std::size_t inner = s0.back();
  const std::size_t outer = numel(s0) / std::max<std::size_t>(inner, 1);
  Shape out_shape(s0.begin(), s0.end() - 1);
  out_shape.push_back(k);
  out_shape.push_back(inner);
  Tensor<Real> out(out_shape);
  std::vector<NodePtr<Real>> nodes;
  for (std::size_t f = 0; f < k; ++f) {
    const auto& v = parts[f].value();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(v.data().data() + o * inner, inner, out.data().data() + (o * k + f) * inner);
    nodes.push_back(parts[f].shared());
  }
  auto captured = nodes;
  return record<Real>(std::move(out), std::move(nodes),
                      [captured, k, outer, inner](Node<Real>& self) {
                        for (std::size_t f = 0; f < k; ++f) {
                          if (!tracked(captured[f])) continue;
                          auto& g = captured[f]->ensure_grad();
                          for (std::size_t o = 0; o < outer; ++o)
                            for (std::size_t i = 0; i < inner; ++i)
                              g[o * inner + i] += self.grad[(o * k + f) * inner + i];
                        }
                      });
}

template <typename Real>
Var<Real> mix_routes(const Var<Real>& values, const Var<Real>& weights) {
  const Shape& sv = values.shape();
  const Shape& sw = weights.shape();
  if (sv.size() < 2 || sw.size() + 1 != sv.size() ||
      !std::equal(sw.begin(), sw.end(), sv.begin())) {
    shape_error("mix_routes", sv, sw);
  }
  const std::size_t k = sv[sv.size() - 2];
  const std::size_t inner = sv.back();
  const std::size_t outer = numel(sw) / std::max<std::size_t>(k, 1);
  Shape out_shape(sw.begin(), sw.end() - 1);
  out_shape.push_back(inner);
  Tensor<Real> out(out_shape);
  const auto& vv = values.value();
  const auto& wv = weights.value();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t f = 0; f < k; ++f) {
      const Real w = wv[o * k + f];
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += w * vv[(o * k + f) * inner + i];
    }
  auto pv = values.shared();
  auto pw = weights.shared();
  return record<Real>(std::move(out), {pv, pw}, [pv, pw, outer, k, inner](Node<Real>& self) {
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t f = 0; f < k; ++f) {
        if (tracked(pv)) {
          auto& g = pv->ensure_grad();
          const Real w = pw->value[o * k + f];
          for (std::size_t i = 0; i < inner; ++i)
            g[(o * k + f) * inner + i] += w * self.grad[o * inner + i];
        }
        if (tracked(pw)) {
          Real dot = 0;
          for (std::size_t i = 0; i < inner; ++i)
            dot += pv->value[(o * k + f) * inner + i] * self.grad[o * inner + i];
          pw->ensure_grad()[o * k + f] += dot;
        }
      }
  });
}

template <typename Real>
void backward(const Var<Real>& loss) {
  if (!loss || loss.value().size() != 1) {
    fail(ErrorKind::kContract, "backward: loss must be a scalar, got shape " +
                                   (loss ? to_string(loss.shape()) : std::string("<null>")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<Node<Real>*> order;
  std::unordered_set<Node<Real>*> seen;
  std::vector<std::pair<Node<Real>*, std::size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<Real>* parent = node->parents[next++].get();
      if (parent && parent->requires_grad && !seen.count(parent)) {
        seen.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* node : order) {
    if (!node->is_leaf) node->grad = Tensor<Real>(node->value.shape());
  }
  loss.node()->ensure_grad()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real>* node = *it;
    if (node->backward) node->backward(*node);
  }
  // Free interior gradients; leaves keep their accumulators.
  for (auto* node : order) {
    if (!node->is_leaf && node != loss.node()) node->grad = Tensor<Real>();
  }
}

#define ADAF_INSTANTIATE(Real)                                                              \
  template Var<Real> parameter(Tensor<Real>);                                               \
  template Var<Real> constant(Tensor<Real>);                                                \
  template Var<Real> add(const Var<Real>&, const Var<Real>&);                               \
  template Var<Real> scale(const Var<Real>&, Real);                                         \
  template Var<Real> linear(const Var<Real>&, const Var<Real>&, const Var<Real>&);          \
  template Var<Real> conv1d_same(const Var<Real>&, const Var<Real>&, const Var<Real>&);     \
  template Var<Real> conv1d_pool(const Var<Real>&, const Var<Real>&, const Var<Real>&,       \
                                 kernels::Pool);                                             \
  template Var<Real> relu(const Var<Real>&);                                                \
  template Var<Real> sigmoid(const Var<Real>&);                                             \
  template Var<Real> max_over_last(const Var<Real>&);                                       \
  template Var<Real> mean_over_last(const Var<Real>&);                                      \
  template Var<Real> mean_over_axis(const Var<Real>&, std::size_t);                         \
  template Var<Real> softmax_last(const Var<Real>&);                                        \
  template Var<Real> layer_norm(const Var<Real>&, const Var<Real>&, const Var<Real>&);      \
  template Var<Real> split_heads(const Var<Real>&, std::size_t);                            \
  template Var<Real> merge_heads(const Var<Real>&);                                         \
  template Var<Real> scaled_dot_attention(const Var<Real>&, const Var<Real>&,               \
                                          const Var<Real>&);                                \
  template Var<Real> dropout(const Var<Real>&, double, bool, std::mt19937_64&);             \
  template Var<Real> huber_loss(const Var<Real>&, const Var<Real>&, double);                \
  template Var<Real> sum(const Var<Real>&);                                                 \
  template Var<Real> dot_with(const Var<Real>&, const Tensor<Real>&);                       \
  template Var<Real> reshape(const Var<Real>&, Shape);                                      \
  template Var<Real> leading_rows(const Var<Real>&, std::size_t);                           \
  template Var<Real> stack_routes(std::span<const Var<Real>>);                              \
  template Var<Real> mix_routes(const Var<Real>&, const Var<Real>&);                        \
  template void backward(const Var<Real>&);

ADAF_INSTANTIATE(float)
ADAF_INSTANTIATE(double)

}  // namespace adaf::ad
