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

#include <random>
#include <vector>

#include "adaf/autodiff.hpp"
#include "adaf/params.hpp"

namespace adaf::backbone {

struct BackboneConfig {
  std::size_t layers = 2;
  std::size_t model_dim = 64;
  std::size_t heads = 4;
  std::size_t ff_dim = 0;  // 0 means 4 * model_dim
  std::size_t n_classes = 2;
  std::size_t max_tokens = 40;
  double dropout = 0.0;

  std::size_t feed_forward_dim() const { return ff_dim ? ff_dim : 4 * model_dim; }
  void validate() const;
};

template <typename Real>
struct EncoderBlock {
  ad::Var<Real> ln1_gain, ln1_bias;
  ad::Var<Real> q_weight, q_bias, k_weight, k_bias, v_weight, v_bias, o_weight, o_bias;
  ad::Var<Real> ln2_gain, ln2_bias;
  ad::Var<Real> ff1_weight, ff1_bias, ff2_weight, ff2_bias;
};

// Pre-norm transformer encoder with learned positions and a linear head on
// the token mean:
//
//   x = embed (+ optional E->d projection) + positions[:T]
//   per block: x += Wo attn(LN1 x);  x += FF2 relu(FF1 LN2 x)
//   logits = W_head mean_t(x) + b_head
template <typename Real>
class Backbone {
 public:
  // `input_dim` is the front-end embedding width E; a projection is added
  // when it differs from model_dim.
  Backbone(BackboneConfig config, std::size_t input_dim, ParamSet<Real>& params,
           std::mt19937_64& rng);

  ad::Var<Real> encode(const ad::Var<Real>& embeddings, bool train, std::mt19937_64& rng) const;
  // Clip logits BxC from encoded BxTxd.
  ad::Var<Real> classify(const ad::Var<Real>& encoded) const;
  // Head applied to every token: BxTxC.
  ad::Var<Real> token_logits(const ad::Var<Real>& encoded) const;

  const BackboneConfig& config() const { return config_; }

 private:
  BackboneConfig config_;
  std::size_t input_dim_;
  ad::Var<Real> proj_weight_, proj_bias_;
  ad::Var<Real> positions_;
  std::vector<EncoderBlock<Real>> blocks_;
  ad::Var<Real> head_weight_, head_bias_;
};

extern template class Backbone<float>;
extern template class Backbone<double>;

}  // namespace adaf::backbone
