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

#include "adaf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adaf/model.hpp"

namespace adaf::gradcheck {

using ad::Var;

namespace {

Tensor<double> normal(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = scale * standard_normal(rng);
  return t;
}

Var<double> input(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  return ad::parameter(normal(std::move(shape), rng, scale));
}

// Fresh random values for every parameter. Zero-initialized biases behind a
// dead ReLU layer put later pre-activations exactly on the kink.
void randomize(ParamSet<double>& params, std::mt19937_64& rng) {
  for (auto& [name, var] : params.entries())
    for (auto& v : var.mutable_value().data()) v = 0.5 * standard_normal(rng);
}

std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

double loss_value(const Problem& p, const Tensor<double>& r) {
  ad::NoGradGuard guard;
  return ad::dot_with(p.forward(), r).value()[0];
}

}  // namespace

Row check(const std::string& name, const Builder& build, const Options& o) {
  Row row;
  row.name = name;
  row.seeds = o.seeds;
  for (std::size_t seed = 0; seed < o.seeds; ++seed) {
    std::mt19937_64 rng(mix_seed({name_hash(name), seed}));
    Problem p = build(rng);
    auto out = p.forward();
    const auto r = normal(out.shape(), rng);
    for (auto& in : p.inputs) in.zero_grad();
    ad::backward(ad::dot_with(out, r));

    for (auto& in : p.inputs) {
      const auto analytic = in.grad();
      const std::size_t n = in.value().size();
      std::vector<std::size_t> coords(n);
      std::iota(coords.begin(), coords.end(), std::size_t{0});
      if (n > o.max_coords) {
        for (std::size_t i = 0; i < o.max_coords; ++i) {
          const auto j = i + static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n - i));
          std::swap(coords[i], coords[std::min(j, n - 1)]);
        }
        coords.resize(o.max_coords);
      }
      for (auto c : coords) {
        double& x = in.mutable_value()[c];
        const double saved = x;
        const double a = analytic[c];
        auto probe = [&](double h) {
          x = saved + h;
          const double up = loss_value(p, r);
          x = saved - h;
          const double down = loss_value(p, r);
          x = saved;
          const double numeric = (up - down) / (2.0 * h);
          const double scale = o.floor * std::max({1.0, std::abs(up), std::abs(down)});
          return std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), scale});
        };
        double rel = probe(o.step);
        if (rel >= o.tolerance && o.retry_smaller_step) {
          rel = probe(o.step / 10.0);
          ++row.retried;
        }
        row.max_rel_error = std::max(row.max_rel_error, rel);
        ++row.coords;
      }
    }
  }
  row.pass = row.max_rel_error < o.tolerance;
  return row;
}

namespace {

frontend::FrontEndConfig small_frontend(frontend::Kind kind, frontend::Pooling pooling) {
  frontend::FrontEndConfig c;
  c.kind = kind;
  c.n_filterbanks = kind == frontend::Kind::kBaseline ? 1 : 2;
  c.pooling = pooling;
  c.embed_dim = 4;
  c.filters_per_bank = 4;
  c.hidden_width = 6;
  c.kernel_length = 6;
  c.router_widths = {6, 6, 6};
  return c;
}

constexpr std::size_t kPatch = 16;

Builder frontend_case(frontend::Kind kind, frontend::Pooling pooling) {
  return [=](std::mt19937_64& rng) {
    auto params = std::make_shared<ParamSet<double>>();
    auto fe = std::make_shared<frontend::FrontEnd<double>>(small_frontend(kind, pooling), kPatch,
                                                           *params, rng);
    randomize(*params, rng);
    auto patches = input({2, 3, kPatch}, rng, 0.5);
    Problem p;
    p.inputs.push_back(patches);
    for (auto& [name, var] : params->entries()) p.inputs.push_back(var);
    p.forward = [fe, params, patches] { return fe->forward(patches).embeddings; };
    return p;
  };
}

}  // namespace

std::vector<std::pair<std::string, Builder>> standard_cases() {
  std::vector<std::pair<std::string, Builder>> cases;
  auto unary = [&](const std::string& name, Shape shape, auto fn) {
    cases.emplace_back(name, [=](std::mt19937_64& rng) {
      auto x = input(shape, rng);
      return Problem{{x}, [=] { return fn(x); }};
    });
  };

  cases.emplace_back("add", [](std::mt19937_64& rng) {
    auto a = input({3, 4, 5}, rng), b = input({4, 5}, rng);
    return Problem{{a, b}, [=] { return ad::add(a, b); }};
  });
  unary("scale", {3, 4}, [](const Var<double>& x) { return ad::scale(x, 1.7); });
  cases.emplace_back("linear", [](std::mt19937_64& rng) {
    auto x = input({2, 3, 5}, rng), w = input({5, 4}, rng), b = input({4}, rng);
    return Problem{{x, w, b}, [=] { return ad::linear(x, w, b); }};
  });
  for (std::size_t taps : {5u, 6u}) {
    cases.emplace_back("conv1d_same_k" + std::to_string(taps), [taps](std::mt19937_64& rng) {
      auto x = input({3, 1, 11}, rng), w = input({4, taps}, rng), b = input({4}, rng);
      return Problem{{x, w, b}, [=] { return ad::conv1d_same(x, w, b); }};
    });
  }
  for (auto pool : {kernels::Pool::kMax, kernels::Pool::kAvg}) {
    const std::string name = pool == kernels::Pool::kMax ? "max" : "avg";
    cases.emplace_back("conv1d_pool_" + name, [pool](std::mt19937_64& rng) {
      auto x = input({3, 1, 11}, rng), w = input({4, 6}, rng), b = input({4}, rng);
      return Problem{{x, w, b}, [=] { return ad::conv1d_pool(x, w, b, pool); }};
    });
  }
  unary("relu", {4, 6}, [](const Var<double>& x) { return ad::relu(x); });
  unary("sigmoid", {4, 6}, [](const Var<double>& x) { return ad::sigmoid(x); });
  unary("max_over_last", {3, 4, 7}, [](const Var<double>& x) { return ad::max_over_last(x); });
  unary("mean_over_last", {3, 4, 7}, [](const Var<double>& x) { return ad::mean_over_last(x); });
  unary("mean_over_axis", {3, 4, 5}, [](const Var<double>& x) { return ad::mean_over_axis(x, 1); });
  unary("softmax_last", {3, 5}, [](const Var<double>& x) { return ad::softmax_last(x); });
  unary("sparsify", {4, 3}, [](const Var<double>& x) { return frontend::sparsify(x, 100.0); });
  cases.emplace_back("layer_norm", [](std::mt19937_64& rng) {
    auto x = input({3, 6}, rng), g = input({6}, rng), b = input({6}, rng);
    return Problem{{x, g, b}, [=] { return ad::layer_norm(x, g, b); }};
  });
  unary("split_merge_heads", {2, 3, 8},
        [](const Var<double>& x) { return ad::merge_heads(ad::scale(ad::split_heads(x, 2), 2.0)); });
  cases.emplace_back("scaled_dot_attention", [](std::mt19937_64& rng) {
    auto q = input({2, 2, 4, 3}, rng), k = input({2, 2, 4, 3}, rng), v = input({2, 2, 4, 3}, rng);
    return Problem{{q, k, v}, [=] { return ad::scaled_dot_attention(q, k, v); }};
  });
  cases.emplace_back("dropout", [](std::mt19937_64& rng) {
    auto x = input({4, 6}, rng);
    const auto seed = rng();
    return Problem{{x}, [=] {
                     std::mt19937_64 mask_rng(seed);
                     return ad::dropout(x, 0.3, true, mask_rng);
                   }};
  });
  cases.emplace_back("huber_loss", [](std::mt19937_64& rng) {
    auto p = input({4, 5}, rng, 1.5), t = input({4, 5}, rng, 1.5);
    return Problem{{p, t}, [=] { return ad::huber_loss(p, t, 1.0); }};
  });
  unary("sum", {3, 4}, [](const Var<double>& x) { return ad::sum(x); });
  unary("reshape", {3, 4}, [](const Var<double>& x) { return ad::reshape(x, {2, 6}); });
  unary("leading_rows", {5, 3}, [](const Var<double>& x) { return ad::leading_rows(x, 3); });
  cases.emplace_back("stack_routes", [](std::mt19937_64& rng) {
    auto a = input({2, 3, 4}, rng), b = input({2, 3, 4}, rng);
    return Problem{{a, b}, [=] {
                     const std::vector<Var<double>> parts{a, b};
                     return ad::stack_routes<double>(parts);
                   }};
  });
  cases.emplace_back("mix_routes", [](std::mt19937_64& rng) {
    auto v = input({2, 3, 2, 4}, rng), w = input({2, 3, 2}, rng);
    return Problem{{v, w}, [=] { return ad::mix_routes(v, w); }};
  });

  using frontend::Kind;
  using frontend::Pooling;
  cases.emplace_back("frontend_baseline", frontend_case(Kind::kBaseline, Pooling::kMax));
  cases.emplace_back("frontend_moe_nf2", frontend_case(Kind::kMoe, Pooling::kMax));
  cases.emplace_back("frontend_bf_nf2_max", frontend_case(Kind::kBankOfFilterbanks, Pooling::kMax));
  cases.emplace_back("frontend_bf_nf2_avg", frontend_case(Kind::kBankOfFilterbanks, Pooling::kAvg));

  cases.emplace_back("model_bf_nf2", [](std::mt19937_64& rng) {
    ModelConfig mc;
    mc.frontend = small_frontend(Kind::kBankOfFilterbanks, Pooling::kMax);
    mc.patch_length = kPatch;
    mc.backbone.layers = 2;
    mc.backbone.model_dim = 4;
    mc.backbone.heads = 2;
    mc.backbone.n_classes = 3;
    mc.backbone.max_tokens = 3;
    auto model = std::make_shared<Model<double>>(mc, rng());
    randomize(model->params(), rng);
    auto patches = normal({2, 3, kPatch}, rng, 0.5);
    Tensor<double> labels(Shape{2, 3});
    labels[0] = labels[4] = 1.0;
    Problem p;
    for (auto& [name, var] : model->params().entries()) p.inputs.push_back(var);
    p.forward = [model, patches, labels] {
      std::mt19937_64 unused(0);
      return model->loss(model->forward(patches, false, unused), labels, 1.0);
    };
    return p;
  });
  return cases;
}

std::vector<Row> run_all(const Options& options) {
  std::vector<Row> rows;
  for (const auto& [name, build] : standard_cases()) rows.push_back(check(name, build, options));
  return rows;
}

}  // namespace adaf::gradcheck
