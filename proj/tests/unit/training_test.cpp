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

#include <cmath>

#include "adaf/run.hpp"
#include "adaf/training.hpp"
#include "run_fixtures.hpp"
#include "test_support.hpp"

namespace adaf::training {
namespace {

using testing::TempDir;

TEST(Schedule, EndpointsAreExact) {
  TrainConfig c;
  for (auto s : {Schedule::kCosine, Schedule::kLinear, Schedule::kExponential}) {
    c.schedule = s;
    for (std::size_t epochs : {1u, 2u, 7u, 50u, 400u}) {
      c.epochs = epochs;
      EXPECT_EQ(lr_at(0, c), 2e-4);
      if (epochs > 1) {
        EXPECT_EQ(lr_at(epochs - 1, c), 1e-6);
      }
    }
  }
}

TEST(Schedule, CosineMidpoint) {
  TrainConfig c;
  c.epochs = 51;
  EXPECT_NEAR(lr_at(25, c), 1.005e-4, 1e-18);
}

TEST(Schedule, MonotoneAndInRange) {
  TrainConfig c;
  c.epochs = 30;
  for (auto s : {Schedule::kCosine, Schedule::kLinear, Schedule::kExponential}) {
    c.schedule = s;
    for (std::size_t e = 1; e < c.epochs; ++e) {
      EXPECT_LE(lr_at(e, c), lr_at(e - 1, c));
      EXPECT_GE(lr_at(e, c), c.lr_end);
    }
  }
}

TEST(Schedule, OutOfRangeIsContractError) {
  TrainConfig c;
  c.epochs = 5;
  try {
    lr_at(5, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

TEST(Schedule, ParseRoundTrip) {
  for (auto s : {Schedule::kCosine, Schedule::kLinear, Schedule::kExponential})
    EXPECT_EQ(parse_schedule(to_string(s)), s);
  EXPECT_THROW(parse_schedule("step"), Error);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.lr_end = 1e-3;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_NO_THROW(TrainConfig{}.validate());
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  ParamSet<float> params;
  auto w = params.add("w", Tensor<float>({3}, std::vector<float>{1.0f, -2.0f, 0.5f}));
  Adam adam(params, 0.9, 0.999, 1e-8);
  auto& g = w.grad_ref();
  g[0] = 0.3f;
  g[1] = -4.0f;
  g[2] = 0.0f;
  adam.step(params, 0.01);
  EXPECT_NEAR(w.value()[0], 1.0f - 0.01f, 1e-6);
  EXPECT_NEAR(w.value()[1], -2.0f + 0.01f, 1e-6);
  EXPECT_EQ(w.value()[2], 0.5f);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, MatchesDoublePrecisionRecurrence) {
  ParamSet<float> params;
  auto w = params.add("w", Tensor<float>({1}, 0.0f));
  Adam adam(params, 0.9, 0.999, 1e-8);
  double m = 0, v = 0, ref = 0;
  const double grads[] = {0.5, -0.25, 1.0, 0.125, -0.75};
  for (int t = 1; t <= 5; ++t) {
    w.grad_ref()[0] = static_cast<float>(grads[t - 1]);
    adam.step(params, 1e-2);
    m = 0.9 * m + 0.1 * grads[t - 1];
    v = 0.999 * v + 0.001 * grads[t - 1] * grads[t - 1];
    ref -= 1e-2 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(w.value()[0], ref, 1e-6);
  }
}

TEST(EpochMetrics, JsonRoundTripKeepsNaN) {
  EpochMetrics m{3, 1.5e-4, 0.2, 0.3, 0.9, 0.8, 0.85, {1.0, std::nan(""), 0.5}};
  auto j = to_json(m);
  EXPECT_TRUE(j["per_class_ap"][1].is_null());
  auto back = epoch_metrics_from_json(j);
  EXPECT_EQ(back.epoch, 3u);
  EXPECT_EQ(back.lr, 1.5e-4);
  EXPECT_EQ(back.map, 0.9);
  EXPECT_TRUE(std::isnan(back.per_class_ap[1]));
}

TEST(Train, WritesRunDirectoryAndLearns) {
  TempDir dir("train");
  auto result = run::train(testing::tiny_run(dir.path(), 6));
  ASSERT_EQ(result.history.size(), 6u);
  EXPECT_EQ(result.history.front().lr, 3e-3);
  EXPECT_EQ(result.history.back().lr, 1e-4);
  for (const char* f : {"resolved-config.json", "metrics.jsonl", "final.adaf", "report.json",
                        "per-class-ap.csv", "checkpoints/epoch-0000.adaf",
                        "checkpoints/epoch-0005.adaf"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  EXPECT_LT(result.history.back().train_loss, result.history.front().train_loss);
  auto log = run::read_metrics_log(dir / "metrics.jsonl");
  ASSERT_EQ(log.size(), 6u);
  for (std::size_t e = 0; e < 6; ++e) EXPECT_EQ(log[e].epoch, e);
  auto report = read_json_file(dir / "report.json");
  EXPECT_TRUE(report.contains("map"));
  EXPECT_EQ(report["split"], "valid");
}

TEST(Train, NonFiniteLossAbortsWithDiagnostics) {
  TempDir dir("nan");
  auto cfg = testing::tiny_run(dir.path(), 3);
  cfg.train.lr_start = cfg.train.lr_end = 1e38;
  try {
    run::train(cfg);
    FAIL() << "training did not abort";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("max |grad|"), std::string::npos) << msg;
  }
}

TEST(Evaluate, ReportFieldsAndChunkAveraging) {
  TempDir dir("eval");
  auto cfg = testing::tiny_run(dir.path(), 1);
  auto splits = run::prepare_data(cfg.data);
  run::resolve_dimensions(cfg, splits.train);
  Model<float> model(cfg.model(), 1);
  auto report = evaluate(model, splits.valid, {4, 1.0, 1});
  EXPECT_EQ(report.n_clips, splits.valid.items.size());
  EXPECT_EQ(report.n_patches, splits.valid.items.size() * 40);
  EXPECT_GE(report.map, 0.0);
  EXPECT_LE(report.map, 1.0);
  EXPECT_GE(report.top_k_patch, 0.0);
  EXPECT_LE(report.top_k_patch, 1.0);
  auto csv = per_class_csv(report);
  EXPECT_EQ(csv.rfind("class,ap\n", 0), 0u);

  // Cutting clips into two chunks each leaves the clip count unchanged.
  auto halves = cfg;
  halves.data.chunk_seconds = 0.1;
  auto chunked = run::load_split(halves.data, "valid");
  EXPECT_EQ(chunked.items.size(), 2 * splits.valid.items.size());
  halves.backbone.max_tokens = 20;
  Model<float> small(halves.model(), 1);
  EXPECT_EQ(evaluate(small, chunked, {4, 1.0, 1}).n_clips, splits.valid.items.size());
}

}  // namespace
}  // namespace adaf::training
