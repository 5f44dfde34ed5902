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

#include "adaf/backbone.hpp"

namespace adaf::backbone {

using ad::Var;

void BackboneConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorKind::kValidation, "backbone." + field + ": " + why);
  };
  if (model_dim < 1) bad("model_dim", "must be >= 1");
  if (heads < 1 || model_dim % heads != 0) bad("heads", "must divide model_dim");
  if (n_classes < 2) bad("n_classes", "must be >= 2");
  if (max_tokens < 1) bad("max_tokens", "must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) bad("dropout", "must lie in [0, 1)");
}

template <typename Real>
Backbone<Real>::Backbone(BackboneConfig config, std::size_t input_dim, ParamSet<Real>& params,
                         std::mt19937_64& rng)
    : config_(std::move(config)), input_dim_(input_dim) {
  config_.validate();
  const std::size_t d = config_.model_dim;
  const std::size_t ff = config_.feed_forward_dim();
  if (input_dim_ != d) {
    proj_weight_ = params.add("backbone.proj.weight", fan_in_uniform<Real>({input_dim_, d}, input_dim_, rng));
    proj_bias_ = params.add("backbone.proj.bias", Tensor<Real>(Shape{d}));
  }
  positions_ = params.add("backbone.positions", uniform<Real>({config_.max_tokens, d}, -0.02, 0.02, rng));

  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "backbone.block" + std::to_string(l) + ".";
    auto dense = [&](const std::string& name, std::size_t in, std::size_t out) {
      return std::pair{params.add(p + name + ".weight", fan_in_uniform<Real>({in, out}, in, rng)),
                       params.add(p + name + ".bias", Tensor<Real>(Shape{out}))};
    };
    EncoderBlock<Real> b;
    b.ln1_gain = params.add(p + "ln1.gain", Tensor<Real>(Shape{d}, Real(1)));
    b.ln1_bias = params.add(p + "ln1.bias", Tensor<Real>(Shape{d}));
    std::tie(b.q_weight, b.q_bias) = dense("q", d, d);
    std::tie(b.k_weight, b.k_bias) = dense("k", d, d);
    std::tie(b.v_weight, b.v_bias) = dense("v", d, d);
    std::tie(b.o_weight, b.o_bias) = dense("o", d, d);
    b.ln2_gain = params.add(p + "ln2.gain", Tensor<Real>(Shape{d}, Real(1)));
    b.ln2_bias = params.add(p + "ln2.bias", Tensor<Real>(Shape{d}));
    std::tie(b.ff1_weight, b.ff1_bias) = dense("ff1", d, ff);
    std::tie(b.ff2_weight, b.ff2_bias) = dense("ff2", ff, d);
    blocks_.push_back(std::move(b));
  }
  head_weight_ = params.add("backbone.head.weight", fan_in_uniform<Real>({d, config_.n_classes}, d, rng));
  head_bias_ = params.add("backbone.head.bias", Tensor<Real>(Shape{config_.n_classes}));
}

template <typename Real>
Var<Real> Backbone<Real>::encode(const Var<Real>& embeddings, bool train,
                                 std::mt19937_64& rng) const {
  const Shape& s = embeddings.shape();
  if (s.size() != 3 || s[2] != input_dim_) {
    fail(ErrorKind::kShape, "encode: expected BxTx" + std::to_string(input_dim_) + ", got " +
                                to_string(s));
  }
  const std::size_t T = s[1];
  if (T > config_.max_tokens) {
    fail(ErrorKind::kSequenceLength, "encode: sequence of " + std::to_string(T) +
                                         " tokens exceeds max_tokens " +
                                         std::to_string(config_.max_tokens));
  }
  Var<Real> x = embeddings;
  if (proj_weight_) x = ad::linear(x, proj_weight_, proj_bias_);

  auto pos = T == config_.max_tokens ? positions_ : ad::leading_rows(positions_, T);
  x = ad::add(x, pos);

  const double p = config_.dropout;
  for (const auto& b : blocks_) {
    auto h = ad::layer_norm(x, b.ln1_gain, b.ln1_bias);
    auto q = ad::split_heads(ad::linear(h, b.q_weight, b.q_bias), config_.heads);
    auto k = ad::split_heads(ad::linear(h, b.k_weight, b.k_bias), config_.heads);
    auto v = ad::split_heads(ad::linear(h, b.v_weight, b.v_bias), config_.heads);
    auto attn = ad::merge_heads(ad::scaled_dot_attention(q, k, v));
    x = ad::add(x, ad::dropout(ad::linear(attn, b.o_weight, b.o_bias), p, train, rng));

    auto h2 = ad::layer_norm(x, b.ln2_gain, b.ln2_bias);
    auto ff = ad::relu(ad::linear(h2, b.ff1_weight, b.ff1_bias));
    x = ad::add(x, ad::dropout(ad::linear(ff, b.ff2_weight, b.ff2_bias), p, train, rng));
  }
  return x;
}

template <typename Real>
Var<Real> Backbone<Real>::classify(const Var<Real>& encoded) const {
  const Shape& s = encoded.shape();
  if (s.size() != 3 || s[2] != config_.model_dim) {
    fail(ErrorKind::kShape, "classify: expected BxTx" + std::to_string(config_.model_dim) +
                                ", got " + to_string(s));
  }
  return ad::linear(ad::mean_over_axis(encoded, 1), head_weight_, head_bias_);
}

template <typename Real>
Var<Real> Backbone<Real>::token_logits(const Var<Real>& encoded) const {
  const Shape& s = encoded.shape();
  if (s.size() != 3 || s[2] != config_.model_dim) {
    fail(ErrorKind::kShape, "token_logits: expected BxTx" + std::to_string(config_.model_dim) +
                                ", got " + to_string(s));
  }
  return ad::linear(encoded, head_weight_, head_bias_);
}

template class Backbone<float>;
template class Backbone<double>;

}  // namespace adaf::backbone
