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

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "adaf/kernels.hpp"
#include "adaf/tensor.hpp"

// Reverse-mode automatic differentiation over dense tensors.
//
// A Var is a shared handle to a graph node. Leaves are created with
// parameter() (tracked) or constant() (untracked). Every primitive below
// records its inputs and a backward rule only when at least one input is
// tracked, so evaluation without parameters in the graph builds nothing.
//
// backward() sorts the graph reachable from a scalar loss topologically and
// runs each rule exactly once in reverse order. Leaf gradients accumulate
// across calls until zero_grad(); interior gradients are reset per call.

namespace adaf::ad {

template <typename Real>
struct Node {
  Tensor<Real> value;
  Tensor<Real> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Tensor<Real>& ensure_grad() {
    if (grad.shape() != value.shape()) grad = Tensor<Real>(value.shape());
    return grad;
  }
};

template <typename Real>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<Real>> node) : node_(std::move(node)) {}

  const Tensor<Real>& value() const { return node_->value; }
  // Direct write access, for optimizers and finite-difference probes on leaves.
  Tensor<Real>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.shape() == node_->value.shape(); }

  // Accumulated gradient; all zeros if backward never reached this node.
  Tensor<Real> grad() const {
    return has_grad() ? node_->grad : Tensor<Real>(node_->value.shape());
  }
  Tensor<Real>& grad_ref() { return node_->ensure_grad(); }
  void zero_grad() {
    if (has_grad()) node_->grad.fill(Real(0));
  }

  Node<Real>* node() const { return node_.get(); }
  const std::shared_ptr<Node<Real>>& shared() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node<Real>> node_;
};

// While alive, primitives on this thread record no graph (evaluation mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool enabled();

 private:
  bool previous_;
};

template <typename Real>
Var<Real> parameter(Tensor<Real> value);
template <typename Real>
Var<Real> constant(Tensor<Real> value);

// ---------------------------------------------------------------------------
// Primitives

// Elementwise a + b, where b's shape equals a trailing suffix of a's shape
// (bias and positional-table broadcasting).
template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> scale(const Var<Real>& x, Real factor);

// x: ...xI, w: IxO, b: O (may be a null Var) -> ...xO.
template <typename Real>
Var<Real> linear(const Var<Real>& x, const Var<Real>& w, const Var<Real>& b);

// x: Nx1xL, w: FxK, b: F -> NxFxL. Cross-correlation with zero padding
// K/2 on the left and K-1-K/2 on the right, so the output keeps length L.
template <typename Real>
Var<Real> conv1d_same(const Var<Real>& x, const Var<Real>& w, const Var<Real>& b);

// max_over_last or mean_over_last of conv1d_same, fused: x Nx1xL -> NxF.
template <typename Real>
Var<Real> conv1d_pool(const Var<Real>& x, const Var<Real>& w, const Var<Real>& b,
                      kernels::Pool pool);

template <typename Real>
Var<Real> relu(const Var<Real>& x);
template <typename Real>
Var<Real> sigmoid(const Var<Real>& x);

// Reduce the last axis. max routes the gradient to the lowest index among ties.
template <typename Real>
Var<Real> max_over_last(const Var<Real>& x);
template <typename Real>
Var<Real> mean_over_last(const Var<Real>& x);
template <typename Real>
Var<Real> mean_over_axis(const Var<Real>& x, std::size_t axis);

template <typename Real>
Var<Real> softmax_last(const Var<Real>& x);

inline constexpr double kLayerNormEps = 1e-5;
template <typename Real>
Var<Real> layer_norm(const Var<Real>& x, const Var<Real>& gain, const Var<Real>& bias);

// BxTx(H*d) <-> BxHxTxd
template <typename Real>
Var<Real> split_heads(const Var<Real>& x, std::size_t heads);
template <typename Real>
Var<Real> merge_heads(const Var<Real>& x);

// softmax(Q K^T / sqrt(d)) V over BxHxTxd inputs.
template <typename Real>
Var<Real> scaled_dot_attention(const Var<Real>& q, const Var<Real>& k, const Var<Real>& v);

// Inverted dropout; identity when !train or p == 0.
template <typename Real>
Var<Real> dropout(const Var<Real>& x, double p, bool train, std::mt19937_64& rng);

// Mean over all elements of the elementwise Huber penalty of pred - target.
template <typename Real>
Var<Real> huber_loss(const Var<Real>& pred, const Var<Real>& target, double delta);

template <typename Real>
Var<Real> sum(const Var<Real>& x);
// Scalar sum_i weights[i] * x[i] against a constant tensor of x's shape.
template <typename Real>
Var<Real> dot_with(const Var<Real>& x, const Tensor<Real>& weights);
template <typename Real>
Var<Real> reshape(const Var<Real>& x, Shape shape);
// First `count` entries along axis 0.
template <typename Real>
Var<Real> leading_rows(const Var<Real>& x, std::size_t count);

// k inputs of shape [..., E] -> [..., k, E].
template <typename Real>
Var<Real> stack_routes(std::span<const Var<Real>> parts);

// values [..., k, E], weights [..., k] -> [..., E], out = sum_f w_f * v_f.
template <typename Real>
Var<Real> mix_routes(const Var<Real>& values, const Var<Real>& weights);

// Populate gradients of every tracked leaf reachable from the scalar `loss`.
template <typename Real>
void backward(const Var<Real>& loss);

}  // namespace adaf::ad
