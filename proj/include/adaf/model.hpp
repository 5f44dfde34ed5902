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
#include <optional>
#include <random>

#include "adaf/backbone.hpp"
#include "adaf/frontends.hpp"

namespace adaf {

struct ModelConfig {
  frontend::FrontEndConfig frontend;
  backbone::BackboneConfig backbone;
  std::size_t patch_length = 400;
  // Squash logits with a sigmoid before the Huber loss. Off: the loss sees raw logits.
  bool pre_loss_sigmoid = false;

  void validate() const;
};

// Front end + transformer backbone + linear head.
template <typename Real>
class Model {
 public:
  struct Output {
    ad::Var<Real> embeddings;  // BxTxE
    ad::Var<Real> encoded;     // BxTxd
    ad::Var<Real> logits;      // BxC
    std::optional<frontend::RouterOutput<Real>> router;
  };

  Model(ModelConfig config, std::uint64_t init_seed);

  Output forward(const Tensor<Real>& patches, bool train, std::mt19937_64& rng) const;
  ad::Var<Real> loss(const Output& out, const Tensor<Real>& labels, double huber_delta) const;

  ParamSet<Real>& params() { return params_; }
  const ParamSet<Real>& params() const { return params_; }
  const ModelConfig& config() const { return config_; }
  const frontend::FrontEnd<Real>& front_end() const { return *front_; }
  const backbone::Backbone<Real>& backbone() const { return *backbone_; }

 private:
  ModelConfig config_;
  ParamSet<Real> params_;
  std::optional<frontend::FrontEnd<Real>> front_;
  std::optional<backbone::Backbone<Real>> backbone_;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace adaf
