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

#include "adaf/config.hpp"
#include "run_fixtures.hpp"
#include "test_support.hpp"

namespace adaf {
namespace {

using nlohmann::json;
using testing::TempDir;

json minimal() {
  return json::parse(R"({"data": {"synth": {"families": [
      {"name": "a", "kind": "pure-tone", "freq_range": [200, 300]},
      {"name": "b", "kind": "chirp", "freq_range": [1000, 2000]}]}}})");
}

std::string validation_message(const json& j) {
  try {
    run_config_from_json(j, "/base").validate();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    return e.what();
  }
  return "";
}

TEST(Config, DefaultsAreMaterialized) {
  auto c = run_config_from_json(minimal(), "/base");
  auto j = to_json(c);
  EXPECT_EQ(j["train"]["lr_start"], 2e-4);
  EXPECT_EQ(j["train"]["lr_end"], 1e-6);
  EXPECT_EQ(j["train"]["schedule"], "cosine");
  EXPECT_EQ(j["frontend"]["alpha"], 100.0);
  EXPECT_EQ(j["frontend"]["kernel_length"], 320);
  EXPECT_EQ(j["data"]["patch_length"], 400);
  EXPECT_TRUE(j["data"]["synth"].is_object());
  EXPECT_EQ(j["backbone"]["dropout"], 0.0);
}

TEST(Config, JsonRoundTrip) {
  auto c = testing::tiny_run("/tmp/x");
  auto j = to_json(c);
  auto back = run_config_from_json(j, "/elsewhere");
  EXPECT_EQ(to_json(back), j);
}

TEST(Config, UnknownFieldsAreNamed) {
  auto j = minimal();
  j["frontend"] = {{"kernel_lenght", 32}};
  EXPECT_NE(validation_message(j).find("frontend.kernel_lenght"), std::string::npos);
  j = minimal();
  j["extra"] = 1;
  EXPECT_NE(validation_message(j).find("extra"), std::string::npos);
  j = minimal();
  j["data"]["synth"]["families"][0]["colour"] = "red";
  EXPECT_NE(validation_message(j).find("colour"), std::string::npos);
}

TEST(Config, BadValuesNameTheField) {
  auto j = minimal();
  j["train"] = {{"epochs", -3}};
  EXPECT_NE(validation_message(j).find("train.epochs"), std::string::npos);
  j = minimal();
  j["frontend"] = {{"pooling", "median"}};
  EXPECT_NE(validation_message(j).find("pooling"), std::string::npos);
  j = minimal();
  j["backbone"] = {{"model_dim", 10}, {"heads", 4}};
  EXPECT_NE(validation_message(j).find("backbone.heads"), std::string::npos);
}

TEST(Config, ExactlyOneDataSource) {
  auto both = minimal();
  both["data"]["manifest"] = {{"train", "m.json"}};
  EXPECT_FALSE(validation_message(both).empty());
  json none = {{"data", json::object()}};
  EXPECT_FALSE(validation_message(none).empty());
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  TempDir dir("cfg");
  testing::write_text(dir / "spec.json", io::to_json(testing::tiny_synth()).dump());
  testing::write_text(dir / "run.json", R"({"data": {"synth": "spec.json"}, "output_dir": "out"})");
  auto c = load_run_config(dir / "run.json");
  ASSERT_TRUE(c.data.synth.has_value());
  EXPECT_EQ(c.data.synth->families.size(), 2u);
  EXPECT_EQ(c.output_dir, std::filesystem::absolute(dir.path()) / "out");

  auto m = run_config_from_json(json::parse(R"({"data": {"manifest": {"train": "t.json", "valid": "/abs/v.json"}}})"),
                                "/root/cfg");
  EXPECT_EQ(*m.data.train_manifest, std::filesystem::path("/root/cfg/t.json"));
  EXPECT_EQ(*m.data.valid_manifest, std::filesystem::path("/abs/v.json"));
}

TEST(Config, BaselineForcesSingleRoute) {
  auto j = minimal();
  j["frontend"] = {{"kind", "baseline"}};
  auto c = run_config_from_json(j, "/base");
  EXPECT_EQ(c.frontend.n_filterbanks, 1u);
  EXPECT_EQ(c.frontend.routes(), 1u);
}

TEST(Config, FiltersPerBankFollowsEmbedDim) {
  auto j = minimal();
  j["frontend"] = {{"embed_dim", 16}};
  EXPECT_EQ(run_config_from_json(j, "/base").frontend.filters_per_bank, 16u);
}

TEST(Config, MissingFileIsIoErrorWithPath) {
  try {
    load_run_config("/no/such/run.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
    EXPECT_NE(std::string(e.what()).find("/no/such/run.json"), std::string::npos);
  }
}

TEST(Config, BundledConfigsParse) {
  for (const auto& entry : std::filesystem::directory_iterator(ADAF_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const auto j = read_json_file(entry.path());
    if (!j.contains("data")) continue;  // synth specs
    EXPECT_NO_THROW(load_run_config(entry.path()).validate()) << entry.path();
  }
}

}  // namespace
}  // namespace adaf
