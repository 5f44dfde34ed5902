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

#include <gtest/gtest.h>

#include <random>

#include "adaf/backbone.hpp"
#include "adaf/model.hpp"
#include "test_support.hpp"

namespace adaf {
namespace {

using ad::constant;
using testing::random_tensor;

backbone::BackboneConfig tiny(std::size_t layers = 1) {
  backbone::BackboneConfig c;
  c.layers = layers;
  c.model_dim = 8;
  c.heads = 2;
  c.n_classes = 3;
  c.max_tokens = 6;
  return c;
}

TEST(Backbone, ZeroLayersAddsPositionsOnly) {
  ParamSet<double> params;
  std::mt19937_64 rng(1);
  backbone::Backbone<double> bb(tiny(0), 8, params, rng);
  auto x = random_tensor<double>({2, 4, 8}, rng);
  auto y = bb.encode(constant(x), false, rng).value();
  const auto& pos = params.get("backbone.positions").value();
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 4 * 8; ++i)
      EXPECT_DOUBLE_EQ(y[b * 32 + i], x[b * 32 + i] + pos[i]);
}

TEST(Backbone, OutputShapeAndSequenceLimit) {
  auto c = tiny(2);
  c.model_dim = 64;
  c.heads = 4;
  c.max_tokens = 40;
  ParamSet<float> params;
  std::mt19937_64 rng(2);
  backbone::Backbone<float> bb(c, 64, params, rng);
  auto y = bb.encode(constant(random_tensor<float>({1, 40, 64}, rng)), false, rng);
  EXPECT_EQ(y.shape(), (Shape{1, 40, 64}));
  try {
    bb.encode(constant(Tensor<float>({1, 41, 64})), false, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSequenceLength);
  }
}

TEST(Backbone, SingleTokenClassifyIsLinearHead) {
  ParamSet<double> params;
  std::mt19937_64 rng(3);
  backbone::Backbone<double> bb(tiny(), 8, params, rng);
  auto enc = random_tensor<double>({2, 1, 8}, rng);
  auto logits = bb.classify(constant(enc)).value();
  auto want = ad::linear(constant(enc.reshaped({2, 8})), params.get("backbone.head.weight"),
                         params.get("backbone.head.bias"))
                  .value();
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(logits[i], want[i], 1e-14);
}

TEST(Backbone, ZeroHeadGivesZeroLogits) {
  ParamSet<double> params;
  std::mt19937_64 rng(4);
  backbone::Backbone<double> bb(tiny(), 8, params, rng);
  params.get("backbone.head.weight").node()->value.fill(0.0);
  auto logits = bb.classify(constant(random_tensor<double>({2, 3, 8}, rng))).value();
  for (double v : logits.storage()) EXPECT_EQ(v, 0.0);
}

TEST(Backbone, TwoHundredClasses) {
  auto c = tiny();
  c.n_classes = 200;
  ParamSet<float> params;
  std::mt19937_64 rng(5);
  backbone::Backbone<float> bb(c, 8, params, rng);
  EXPECT_EQ(bb.classify(constant(Tensor<float>({1, 2, 8}))).shape(), (Shape{1, 200}));
}

TEST(Backbone, TokenLogitsMeanEqualsClipLogits) {
  ParamSet<double> params;
  std::mt19937_64 rng(6);
  backbone::Backbone<double> bb(tiny(), 8, params, rng);
  auto enc = constant(random_tensor<double>({2, 5, 8}, rng));
  auto clip = bb.classify(enc).value();
  auto tok = bb.token_logits(enc).value();
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0;
      for (std::size_t t = 0; t < 5; ++t) s += tok[(b * 5 + t) * 3 + c];
      EXPECT_NEAR(s / 5, clip[b * 3 + c], 1e-12);
    }
}

TEST(Backbone, Validation) {
  auto c = tiny();
  c.heads = 3;
  EXPECT_THROW(c.validate(), Error);
  c = tiny();
  c.n_classes = 1;
  EXPECT_THROW(c.validate(), Error);
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.patch_length = 16;
  m.frontend.kind = frontend::Kind::kBankOfFilterbanks;
  m.frontend.n_filterbanks = 2;
  m.frontend.embed_dim = m.frontend.filters_per_bank = 4;
  m.frontend.kernel_length = 5;
  m.frontend.router_widths = {6, 6, 6};
  m.backbone = tiny();
  return m;
}

TEST(Model, PermutingBatchPermutesLogits) {
  Model<double> model(tiny_model(), 7);
  std::mt19937_64 rng(8);
  auto x = random_tensor<double>({3, 4, 16}, rng);
  Tensor<double> swapped(x.shape());
  const std::vector<std::size_t> perm{2, 0, 1};
  for (std::size_t b = 0; b < 3; ++b)
    std::copy_n(x.storage().begin() + perm[b] * 64, 64, swapped.storage().begin() + b * 64);
  auto a = model.forward(x, false, rng).logits.value();
  auto c = model.forward(swapped, false, rng).logits.value();
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(c[b * 3 + k], a[perm[b] * 3 + k], 1e-12);
}

TEST(Model, EvalForwardIsBitwiseDeterministic) {
  Model<float> a(tiny_model(), 11), b(tiny_model(), 11);
  std::mt19937_64 rng(12);
  auto x = random_tensor<float>({2, 4, 16}, rng);
  EXPECT_EQ(a.forward(x, false, rng).logits.value(), b.forward(x, false, rng).logits.value());
  for (std::size_t i = 0; i < a.params().entries().size(); ++i)
    EXPECT_EQ(a.params().entries()[i].second.value(), b.params().entries()[i].second.value());
}

TEST(Model, PreLossSigmoidSquashesLogits) {
  auto cfg = tiny_model();
  Model<double> raw(cfg, 3);
  cfg.pre_loss_sigmoid = true;
  Model<double> squashed(cfg, 3);
  std::mt19937_64 rng(4);
  auto x = random_tensor<double>({2, 4, 16}, rng);
  Tensor<double> labels({2, 3});
  labels[0] = labels[4] = 1;
  auto out_raw = raw.forward(x, false, rng);
  auto out_sq = squashed.forward(x, false, rng);
  auto want = ad::huber_loss(ad::sigmoid(out_raw.logits), constant(labels), 1.0).value()[0];
  EXPECT_NEAR(squashed.loss(out_sq, labels, 1.0).value()[0], want, 1e-15);
}

}  // namespace
}  // namespace adaf
