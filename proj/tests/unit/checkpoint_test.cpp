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

#include "adaf/checkpoint.hpp"
#include "adaf/run.hpp"
#include "run_fixtures.hpp"
#include "test_support.hpp"

namespace adaf::checkpoint {
namespace {

using testing::read_bytes;
using testing::TempDir;

Checkpoint sample() {
  std::mt19937_64 rng(1);
  Checkpoint c;
  c.tensors.push_back({"a.weight", testing::random_tensor<float>({3, 4}, rng)});
  c.tensors.push_back({"scalar", Tensor<float>({1}, 2.5f)});
  c.tensors.push_back({"empty", Tensor<float>({0, 5})});
  c.tensors.push_back({"step", pack_u64(0x0123456789abcdefULL)});
  c.config = {{"name", "x"}, {"n", 3}};
  return c;
}

void expect_checkpoint_error(std::vector<std::uint8_t> bytes) {
  try {
    decode(bytes);
    FAIL() << "decoded";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCheckpoint) << e.what();
  }
}

TEST(Checkpoint, LayoutStartsWithMagicAndVersion) {
  auto bytes = encode(sample());
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ADAF");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 4);  // tensor count
}

TEST(Checkpoint, EncodeDecodeRoundTrip) {
  auto c = sample();
  auto back = decode(encode(c));
  ASSERT_EQ(back.tensors.size(), c.tensors.size());
  for (std::size_t i = 0; i < c.tensors.size(); ++i) {
    EXPECT_EQ(back.tensors[i].name, c.tensors[i].name);
    EXPECT_EQ(back.tensors[i].value, c.tensors[i].value);
  }
  EXPECT_EQ(back.config, c.config);
  EXPECT_EQ(unpack_u64(back.at("step")), 0x0123456789abcdefULL);
  EXPECT_EQ(back.find("missing"), nullptr);
  EXPECT_THROW(back.at("missing"), Error);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  TempDir dir("ckpt");
  save(sample(), dir / "a.adaf");
  save(load(dir / "a.adaf"), dir / "b.adaf");
  EXPECT_EQ(read_bytes(dir / "a.adaf"), read_bytes(dir / "b.adaf"));
}

TEST(Checkpoint, CorruptInputsAreRejected) {
  auto good = encode(sample());
  auto bad_magic = good;
  bad_magic[0] = 'X';
  expect_checkpoint_error(bad_magic);
  auto bad_version = good;
  bad_version[4] = 9;
  expect_checkpoint_error(bad_version);
  for (std::size_t cut : {3u, 11u, 20u, 60u}) expect_checkpoint_error({good.begin(), good.begin() + cut});
  expect_checkpoint_error({good.begin(), good.end() - 1});
  auto trailing = good;
  trailing.push_back(0);
  expect_checkpoint_error(trailing);
}

TEST(Checkpoint, PackU64IsExact) {
  for (std::uint64_t v : {0ULL, 1ULL, 65535ULL, 65536ULL, ~0ULL, 0x8000000000000001ULL})
    EXPECT_EQ(unpack_u64(pack_u64(v)), v);
}

TEST(Checkpoint, MissingFileIsIoError) {
  try {
    load("/nonexistent/dir/x.adaf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/x.adaf"), std::string::npos);
  }
}

TEST(Determinism, SameSeedGivesIdenticalCheckpoints) {
  TempDir a("det-a"), b("det-b");
  run::train(testing::tiny_run(a.path(), 2));
  run::train(testing::tiny_run(b.path(), 2));
  EXPECT_EQ(read_bytes(a / "final.adaf"), read_bytes(b / "final.adaf"));
  EXPECT_EQ(read_bytes(a / "checkpoints/epoch-0000.adaf"),
            read_bytes(b / "checkpoints/epoch-0000.adaf"));
}

TEST(Determinism, DifferentSeedChangesWeights) {
  TempDir a("seed-a"), b("seed-b");
  auto ca = testing::tiny_run(a.path(), 1), cb = testing::tiny_run(b.path(), 1);
  cb.train.seed = 6;
  run::train(ca);
  run::train(cb);
  EXPECT_NE(read_bytes(a / "final.adaf"), read_bytes(b / "final.adaf"));
}

TEST(Resume, MatchesUninterruptedRun) {
  TempDir full("full"), part("part");
  auto whole = run::train(testing::tiny_run(full.path(), 4));
  auto cfg = testing::tiny_run(part.path(), 4);
  run::TrainOptions stop;
  stop.stop_after_epoch = 1;
  run::train(cfg, stop);
  EXPECT_FALSE(std::filesystem::exists(part / "final.adaf"));
  run::TrainOptions resume;
  resume.resume_from = run::checkpoint_path(part.path(), 1);
  auto rest = run::train(cfg, resume);
  ASSERT_EQ(rest.history.size(), 2u);
  EXPECT_EQ(rest.history.front().epoch, 2u);
  EXPECT_EQ(testing::read_text(full / "metrics.jsonl"), testing::read_text(part / "metrics.jsonl"));
  EXPECT_EQ(read_bytes(full / "final.adaf"), read_bytes(part / "final.adaf"));
}

TEST(Resume, RejectsDifferentConfig) {
  TempDir dir("resume-bad");
  auto cfg = testing::tiny_run(dir.path(), 2);
  run::TrainOptions stop;
  stop.stop_after_epoch = 0;
  run::train(cfg, stop);
  cfg.train.lr_start = 1e-2;
  run::TrainOptions resume;
  resume.resume_from = run::checkpoint_path(dir.path(), 0);
  EXPECT_THROW(run::train(cfg, resume), Error);
}

TEST(LoadModel, RestoresWeightsAndEpoch) {
  TempDir dir("load");
  run::train(testing::tiny_run(dir.path(), 2));
  auto loaded = run::load_model(dir / "final.adaf");
  EXPECT_EQ(loaded.epoch, 1u);
  auto ckpt = load(dir / "final.adaf");
  for (const auto& [name, var] : loaded.model.params().entries())
    EXPECT_EQ(var.value(), ckpt.at(name)) << name;
  EXPECT_EQ(loaded.config.classes, (std::vector<std::string>{"low", "high"}));
}

}  // namespace
}  // namespace adaf::checkpoint
