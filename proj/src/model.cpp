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

#include "adaf/model.hpp"

namespace adaf {

void ModelConfig::validate() const {
  frontend.validate(patch_length);
  backbone.validate();
}

template <typename Real>
Model<Real>::Model(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(mix_seed({init_seed, 0x1417}));
  front_.emplace(config_.frontend, config_.patch_length, params_, rng);
  backbone_.emplace(config_.backbone, config_.frontend.embed_dim, params_, rng);
}

template <typename Real>
typename Model<Real>::Output Model<Real>::forward(const Tensor<Real>& patches, bool train,
                                                  std::mt19937_64& rng) const {
  Output out;
  auto front = front_->forward(ad::constant(patches));
  out.embeddings = front.embeddings;
  out.router = std::move(front.router);
  out.encoded = backbone_->encode(out.embeddings, train, rng);
  out.logits = backbone_->classify(out.encoded);
  return out;
}

template <typename Real>
ad::Var<Real> Model<Real>::loss(const Output& out, const Tensor<Real>& labels,
                                double huber_delta) const {
  auto pred = config_.pre_loss_sigmoid ? ad::sigmoid(out.logits) : out.logits;
  return ad::huber_loss(pred, ad::constant(labels), huber_delta);
}

template class Model<float>;
template class Model<double>;

}  // namespace adaf
