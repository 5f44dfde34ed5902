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

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "adaf/autodiff.hpp"
#include "adaf/params.hpp"

// Waveform-patch front ends.
//
// Every front end maps a batch of raw patches BxTxP to token embeddings BxTxE.
// The multi-route front ends (mixture of experts, bank of filterbanks) first
// produce one embedding per route, BxTxN_FxE, and a sparse router decides
// per patch how to weight them:
//
//   logits  = MLP(patch)                     (three ReLU layers + N_F bottleneck)
//   weights = softmax(alpha * softmax(logits))
//   out     = sum_f weights[f] * route_f(patch)
//
// With a large alpha the outer softmax saturates so each patch effectively
// uses a single route, while the mapping stays differentiable.

namespace adaf::frontend {

enum class Kind { kBaseline, kMoe, kBankOfFilterbanks };
enum class Pooling { kMax, kAvg };

std::string to_string(Kind kind);
std::string to_string(Pooling pooling);
Kind parse_kind(const std::string& text);
Pooling parse_pooling(const std::string& text);

struct FrontEndConfig {
  Kind kind = Kind::kBankOfFilterbanks;
  std::size_t n_filterbanks = 2;
  Pooling pooling = Pooling::kMax;
  double alpha = 100.0;
  std::size_t embed_dim = 64;
  std::size_t hidden_width = 2048;
  std::size_t filters_per_bank = 64;
  std::size_t kernel_length = 320;
  std::vector<std::size_t> router_widths{2048, 2048, 2048};

  // Number of routes actually built (1 for the baseline).
  std::size_t routes() const { return kind == Kind::kBaseline ? 1 : n_filterbanks; }
  // Throws ValidationError naming the offending field.
  void validate(std::size_t patch_length) const;
};

template <typename Real>
struct DenseExpert {
  ad::Var<Real> hidden_weight, hidden_bias, out_weight, out_bias;
};

template <typename Real>
struct FilterBank {
  ad::Var<Real> weight;  // filters x taps
  ad::Var<Real> bias;    // filters
};

template <typename Real>
struct RouterParams {
  std::vector<ad::Var<Real>> weights;  // hidden layers then the N_F bottleneck
  std::vector<ad::Var<Real>> biases;
};

template <typename Real>
struct RouterOutput {
  ad::Var<Real> weights;                 // BxTxN_F, rows sum to 1
  ad::Var<Real> logits;                  // BxTxN_F
  std::vector<std::size_t> route_index;  // BxT, rowwise argmax of weights
};

// Double softmax sparsifier: softmax(alpha * softmax(logits)) along the last axis.
template <typename Real>
ad::Var<Real> sparsify(const ad::Var<Real>& logits, double alpha);

// Lowest index of the row maximum for each row of a ...xN tensor.
template <typename Real>
std::vector<std::size_t> rowwise_argmax(const Tensor<Real>& x);

// patch -> linear(P->H) -> relu -> linear(H->E), applied per patch.
template <typename Real>
ad::Var<Real> baseline_frontend(const ad::Var<Real>& patches, const DenseExpert<Real>& params);

template <typename Real>
RouterOutput<Real> sparse_router(const ad::Var<Real>& patches, const RouterParams<Real>& params,
                                 double alpha);

// Conv activations of one bank before pooling: (B*T)xFxP.
template <typename Real>
ad::Var<Real> bank_activations(const ad::Var<Real>& patches, const FilterBank<Real>& bank);

// Per-route embeddings BxTxN_FxE: conv1d_same -> pool over time -> relu.
template <typename Real>
ad::Var<Real> bank_frontend(const ad::Var<Real>& patches, const std::vector<FilterBank<Real>>& banks,
                            Pooling pooling);

template <typename Real>
ad::Var<Real> moe_frontend(const ad::Var<Real>& patches,
                           const std::vector<DenseExpert<Real>>& experts);

// out[b,t,:] = sum_f weights[b,t,f] * per_route[b,t,f,:]
template <typename Real>
ad::Var<Real> combine(const ad::Var<Real>& per_route, const RouterOutput<Real>& router);

// Parameters of a configured front end, registered under "frontend." and
// "router." prefixes.
template <typename Real>
class FrontEnd {
 public:
  struct Output {
    ad::Var<Real> embeddings;  // BxTxE
    std::optional<RouterOutput<Real>> router;
  };

  FrontEnd(FrontEndConfig config, std::size_t patch_length, ParamSet<Real>& params,
           std::mt19937_64& rng);

  Output forward(const ad::Var<Real>& patches) const;
  // Only for multi-route kinds.
  RouterOutput<Real> route(const ad::Var<Real>& patches) const;

  const FrontEndConfig& config() const { return config_; }
  std::size_t patch_length() const { return patch_length_; }
  const std::vector<FilterBank<Real>>& banks() const { return banks_; }
  const std::vector<DenseExpert<Real>>& experts() const { return experts_; }

 private:
  FrontEndConfig config_;
  std::size_t patch_length_;
  std::vector<DenseExpert<Real>> experts_;  // baseline uses experts_[0]
  std::vector<FilterBank<Real>> banks_;
  RouterParams<Real> router_;
};

extern template class FrontEnd<float>;
extern template class FrontEnd<double>;

}  // namespace adaf::frontend
