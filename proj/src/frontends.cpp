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

#include "adaf/frontends.hpp"

namespace adaf::frontend {

using ad::Var;

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::kBaseline: return "baseline";
    case Kind::kMoe: return "moe";
    case Kind::kBankOfFilterbanks: return "bank-of-filterbanks";
  }
  return "?";
}

std::string to_string(Pooling pooling) { return pooling == Pooling::kMax ? "max" : "avg"; }

Kind parse_kind(const std::string& text) {
  if (text == "baseline") return Kind::kBaseline;
  if (text == "moe") return Kind::kMoe;
  if (text == "bank-of-filterbanks" || text == "bf") return Kind::kBankOfFilterbanks;
  fail(ErrorKind::kValidation, "frontend.kind: unknown front end '" + text + "'");
}

Pooling parse_pooling(const std::string& text) {
  if (text == "max") return Pooling::kMax;
  if (text == "avg") return Pooling::kAvg;
  fail(ErrorKind::kValidation, "frontend.pooling: expected max or avg, got '" + text + "'");
}

void FrontEndConfig::validate(std::size_t patch_length) const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorKind::kValidation, "frontend." + field + ": " + why);
  };
  if (patch_length == 0) bad("patch_length", "must be >= 1");
  if (n_filterbanks < 1) bad("n_filterbanks", "must be >= 1");
  if (kind == Kind::kBaseline && n_filterbanks != 1) bad("n_filterbanks", "baseline requires 1");
  if (!(alpha > 0.0)) bad("alpha", "must be > 0");
  if (embed_dim < 1) bad("embed_dim", "must be >= 1");
  if (kind != Kind::kBankOfFilterbanks && hidden_width < 1) bad("hidden_width", "must be >= 1");
  if (kind == Kind::kBankOfFilterbanks) {
    if (filters_per_bank != embed_dim) bad("filters_per_bank", "must equal embed_dim");
    if (kernel_length < 1) bad("kernel_length", "must be >= 1");
  }
  if (kind != Kind::kBaseline) {
    for (auto w : router_widths)
      if (w < 1) bad("router_widths", "every width must be >= 1");
  }
}

template <typename Real>
Var<Real> sparsify(const Var<Real>& logits, double alpha) {
  return ad::softmax_last(ad::scale(ad::softmax_last(logits), static_cast<Real>(alpha)));
}

template <typename Real>
std::vector<std::size_t> rowwise_argmax(const Tensor<Real>& x) {
  const std::size_t len = x.shape().back();
  const std::size_t rows = x.size() / len;
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < len; ++i)
      if (x[r * len + i] > x[r * len + best]) best = i;
    out[r] = best;
  }
  return out;
}

namespace {

void require_patches(const Shape& s) {
  if (s.size() != 3) {
    fail(ErrorKind::kShape, "front end expects BxTxP patches, got " + adaf::to_string(s));
  }
}

}  // namespace

template <typename Real>
Var<Real> baseline_frontend(const Var<Real>& patches, const DenseExpert<Real>& p) {
  require_patches(patches.shape());
  auto hidden = ad::relu(ad::linear(patches, p.hidden_weight, p.hidden_bias));
  return ad::linear(hidden, p.out_weight, p.out_bias);
}

template <typename Real>
RouterOutput<Real> sparse_router(const Var<Real>& patches, const RouterParams<Real>& params,
                                 double alpha) {
  require_patches(patches.shape());
  Var<Real> h = patches;
  const std::size_t layers = params.weights.size();
  for (std::size_t i = 0; i + 1 < layers; ++i) {
    h = ad::relu(ad::linear(h, params.weights[i], params.biases[i]));
  }
  RouterOutput<Real> out;
  out.logits = ad::linear(h, params.weights.back(), params.biases.back());
  out.weights = sparsify(out.logits, alpha);
  out.route_index = rowwise_argmax(out.weights.value());
  return out;
}

template <typename Real>
Var<Real> bank_activations(const Var<Real>& patches, const FilterBank<Real>& bank) {
  require_patches(patches.shape());
  const Shape& s = patches.shape();
  auto flat = ad::reshape(patches, Shape{s[0] * s[1], 1, s[2]});
  return ad::conv1d_same(flat, bank.weight, bank.bias);
}

template <typename Real>
Var<Real> bank_frontend(const Var<Real>& patches, const std::vector<FilterBank<Real>>& banks,
                        Pooling pooling) {
  require_patches(patches.shape());
  if (banks.empty()) fail(ErrorKind::kShape, "bank_frontend: no filterbanks");
  const Shape& s = patches.shape();
  auto flat = ad::reshape(patches, Shape{s[0] * s[1], 1, s[2]});
  std::vector<Var<Real>> per_bank;
  per_bank.reserve(banks.size());
  for (const auto& bank : banks) {
    const auto pool = pooling == Pooling::kMax ? kernels::Pool::kMax : kernels::Pool::kAvg;
    per_bank.push_back(ad::relu(ad::conv1d_pool(flat, bank.weight, bank.bias, pool)));
  }
  auto stacked = ad::stack_routes<Real>(per_bank);
  const std::size_t filters = banks.front().weight.shape()[0];
  return ad::reshape(stacked, Shape{s[0], s[1], banks.size(), filters});
}

template <typename Real>
Var<Real> moe_frontend(const Var<Real>& patches, const std::vector<DenseExpert<Real>>& experts) {
  require_patches(patches.shape());
  if (experts.empty()) fail(ErrorKind::kShape, "moe_frontend: no experts");
  std::vector<Var<Real>> outs;
  outs.reserve(experts.size());
  for (const auto& e : experts) outs.push_back(baseline_frontend(patches, e));
  return ad::stack_routes<Real>(outs);
}

template <typename Real>
Var<Real> combine(const Var<Real>& per_route, const RouterOutput<Real>& router) {
  return ad::mix_routes(per_route, router.weights);
}

template <typename Real>
FrontEnd<Real>::FrontEnd(FrontEndConfig config, std::size_t patch_length, ParamSet<Real>& params,
                         std::mt19937_64& rng)
    : config_(std::move(config)), patch_length_(patch_length) {
  config_.validate(patch_length_);
  const std::size_t P = patch_length_;
  const std::size_t E = config_.embed_dim;

  auto make_expert = [&](const std::string& prefix) {
    const std::size_t H = config_.hidden_width;
    DenseExpert<Real> e;
    e.hidden_weight = params.add(prefix + ".hidden.weight", fan_in_uniform<Real>({P, H}, P, rng));
    e.hidden_bias = params.add(prefix + ".hidden.bias", Tensor<Real>({H}));
    e.out_weight = params.add(prefix + ".out.weight", fan_in_uniform<Real>({H, E}, H, rng));
    e.out_bias = params.add(prefix + ".out.bias", Tensor<Real>({E}));
    return e;
  };

  switch (config_.kind) {
    case Kind::kBaseline:
      experts_.push_back(make_expert("frontend.baseline"));
      break;
    case Kind::kMoe:
      for (std::size_t f = 0; f < config_.n_filterbanks; ++f)
        experts_.push_back(make_expert("frontend.expert" + std::to_string(f)));
      break;
    case Kind::kBankOfFilterbanks: {
      const std::size_t F = config_.filters_per_bank;
      const std::size_t K = config_.kernel_length;
      for (std::size_t f = 0; f < config_.n_filterbanks; ++f) {
        const std::string prefix = "frontend.bank" + std::to_string(f);
        FilterBank<Real> bank;
        bank.weight = params.add(prefix + ".weight", fan_in_uniform<Real>({F, K}, K, rng));
        bank.bias = params.add(prefix + ".bias", Tensor<Real>({F}));
        banks_.push_back(bank);
      }
      break;
    }
  }

  if (config_.kind != Kind::kBaseline) {
    std::size_t in = P;
    const auto& widths = config_.router_widths;
    for (std::size_t i = 0; i <= widths.size(); ++i) {
      const bool bottleneck = i == widths.size();
      const std::size_t out = bottleneck ? config_.n_filterbanks : widths[i];
      const std::string prefix =
          bottleneck ? std::string("router.out") : "router.layer" + std::to_string(i);
      router_.weights.push_back(params.add(prefix + ".weight", fan_in_uniform<Real>({in, out}, in, rng)));
      router_.biases.push_back(params.add(prefix + ".bias", Tensor<Real>({out})));
      in = out;
    }
  }
}

template <typename Real>
RouterOutput<Real> FrontEnd<Real>::route(const Var<Real>& patches) const {
  if (config_.kind == Kind::kBaseline) {
    fail(ErrorKind::kUnsupportedAnalysis, "baseline front end has no router");
  }
  return sparse_router(patches, router_, config_.alpha);
}

template <typename Real>
typename FrontEnd<Real>::Output FrontEnd<Real>::forward(const Var<Real>& patches) const {
  require_patches(patches.shape());
  if (patches.shape()[2] != patch_length_) {
    fail(ErrorKind::kShape, "front end configured for patch length " +
                                std::to_string(patch_length_) + ", got " +
                                adaf::to_string(patches.shape()));
  }
  Output out;
  if (config_.kind == Kind::kBaseline) {
    out.embeddings = baseline_frontend(patches, experts_.front());
    return out;
  }
  auto router = route(patches);
  auto per_route = config_.kind == Kind::kMoe ? moe_frontend(patches, experts_)
                                              : bank_frontend(patches, banks_, config_.pooling);
  out.embeddings = combine(per_route, router);
  out.router = std::move(router);
  return out;
}

#define ADAF_INSTANTIATE(Real)                                                                  \
  template Var<Real> sparsify(const Var<Real>&, double);                                        \
  template std::vector<std::size_t> rowwise_argmax(const Tensor<Real>&);                        \
  template Var<Real> baseline_frontend(const Var<Real>&, const DenseExpert<Real>&);             \
  template RouterOutput<Real> sparse_router(const Var<Real>&, const RouterParams<Real>&, double); \
  template Var<Real> bank_activations(const Var<Real>&, const FilterBank<Real>&);               \
  template Var<Real> bank_frontend(const Var<Real>&, const std::vector<FilterBank<Real>>&,      \
                                   Pooling);                                                    \
  template Var<Real> moe_frontend(const Var<Real>&, const std::vector<DenseExpert<Real>>&);     \
  template Var<Real> combine(const Var<Real>&, const RouterOutput<Real>&);                      \
  template class FrontEnd<Real>;

ADAF_INSTANTIATE(float)
ADAF_INSTANTIATE(double)

}  // namespace adaf::frontend
