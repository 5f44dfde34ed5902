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

#include "adaf/config.hpp"

#include <fstream>
#include <initializer_list>

namespace adaf {

using nlohmann::json;

namespace {

// Checked view over one JSON object section.
class Section {
 public:
  Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) fail(ErrorKind::kValidation, label() + ": expected a JSON object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [key, value] : j_.items()) {
      bool ok = false;
      for (const char* k : keys) ok = ok || key == k;
      if (!ok) fail(ErrorKind::kValidation, field(key) + ": unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) const { return j_.at(key); }

  template <typename T>
  void read(const char* key, T& out) const {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(ErrorKind::kValidation, field(key) + ": expected true or false");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          fail(ErrorKind::kValidation, field(key) + ": expected a nonnegative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(ErrorKind::kValidation, field(key) + ": expected a number");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      fail(ErrorKind::kValidation, field(key) + ": " + e.what());
    }
  }

  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

 private:
  std::string label() const { return prefix_.empty() ? "config" : prefix_; }

  const json& j_;
  std::string prefix_;
};

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_relative() ? base / p : p;
}

}  // namespace

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.frontend = frontend;
  m.backbone = backbone;
  m.patch_length = data.patch_length;
  m.pre_loss_sigmoid = pre_loss_sigmoid;
  return m;
}

void RunConfig::validate() const {
  if (data.synth.has_value() == data.train_manifest.has_value()) {
    fail(ErrorKind::kValidation, "data: exactly one of synth or manifest is required");
  }
  if (data.train_manifest && !data.valid_manifest) {
    fail(ErrorKind::kValidation, "data.manifest.valid: required with data.manifest.train");
  }
  if (data.patch_length < 1) fail(ErrorKind::kValidation, "data.patch_length: must be >= 1");
  if (!(data.chunk_seconds > 0.0)) fail(ErrorKind::kValidation, "data.chunk_seconds: must be > 0");
  if (data.synth && data.synth->patch_length != data.patch_length) {
    fail(ErrorKind::kValidation, "data.synth.patch_length: must match data.patch_length");
  }
  if (output_dir.empty()) fail(ErrorKind::kValidation, "output_dir: must be nonempty");
  model().validate();
  train.validate();
}

json to_json(const frontend::FrontEndConfig& c) {
  return {{"kind", frontend::to_string(c.kind)},
          {"n_filterbanks", c.n_filterbanks},
          {"pooling", frontend::to_string(c.pooling)},
          {"alpha", c.alpha},
          {"embed_dim", c.embed_dim},
          {"hidden_width", c.hidden_width},
          {"filters_per_bank", c.filters_per_bank},
          {"kernel_length", c.kernel_length},
          {"router_widths", c.router_widths}};
}

json to_json(const backbone::BackboneConfig& c) {
  return {{"layers", c.layers},         {"model_dim", c.model_dim},
          {"heads", c.heads},           {"ff_dim", c.feed_forward_dim()},
          {"n_classes", c.n_classes},   {"max_tokens", c.max_tokens},
          {"dropout", c.dropout}};
}

json to_json(const training::TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"lr_start", c.lr_start},
          {"lr_end", c.lr_end},
          {"schedule", training::to_string(c.schedule)},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"huber_delta", c.huber_delta},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"checkpoint_every", c.checkpoint_every},
          {"top_k", c.top_k}};
}

json to_json(const RunConfig& c) {
  json data = {{"patch_length", c.data.patch_length}, {"chunk_seconds", c.data.chunk_seconds}};
  if (c.data.synth) data["synth"] = io::to_json(*c.data.synth);
  if (c.data.train_manifest) {
    data["manifest"] = {{"train", c.data.train_manifest->string()},
                        {"valid", c.data.valid_manifest->string()}};
  }
  return {{"data", data},
          {"frontend", to_json(c.frontend)},
          {"backbone", to_json(c.backbone)},
          {"train", to_json(c.train)},
          {"output_dir", c.output_dir.string()},
          {"classes", c.classes},
          {"pre_loss_sigmoid", c.pre_loss_sigmoid}};
}

frontend::FrontEndConfig frontend_config_from_json(const json& j) {
  Section s(j, "frontend");
  s.allow({"kind", "n_filterbanks", "pooling", "alpha", "embed_dim", "hidden_width",
           "filters_per_bank", "kernel_length", "router_widths"});
  frontend::FrontEndConfig c;
  std::string text;
  if (s.has("kind")) {
    s.read("kind", text);
    c.kind = frontend::parse_kind(text);
    if (c.kind == frontend::Kind::kBaseline) c.n_filterbanks = 1;
  }
  s.read("n_filterbanks", c.n_filterbanks);
  if (s.has("pooling")) {
    s.read("pooling", text);
    c.pooling = frontend::parse_pooling(text);
  }
  s.read("alpha", c.alpha);
  s.read("embed_dim", c.embed_dim);
  s.read("hidden_width", c.hidden_width);
  c.filters_per_bank = c.embed_dim;
  s.read("filters_per_bank", c.filters_per_bank);
  s.read("kernel_length", c.kernel_length);
  s.read("router_widths", c.router_widths);
  return c;
}

backbone::BackboneConfig backbone_config_from_json(const json& j) {
  Section s(j, "backbone");
  s.allow({"layers", "model_dim", "heads", "ff_dim", "n_classes", "max_tokens", "dropout"});
  backbone::BackboneConfig c;
  s.read("layers", c.layers);
  s.read("model_dim", c.model_dim);
  s.read("heads", c.heads);
  s.read("ff_dim", c.ff_dim);
  s.read("n_classes", c.n_classes);
  s.read("max_tokens", c.max_tokens);
  s.read("dropout", c.dropout);
  return c;
}

training::TrainConfig train_config_from_json(const json& j) {
  Section s(j, "train");
  s.allow({"epochs", "lr_start", "lr_end", "schedule", "batch_size", "seed", "huber_delta", "beta1",
           "beta2", "eps", "checkpoint_every", "top_k"});
  training::TrainConfig c;
  s.read("epochs", c.epochs);
  s.read("lr_start", c.lr_start);
  s.read("lr_end", c.lr_end);
  if (s.has("schedule")) {
    std::string text;
    s.read("schedule", text);
    c.schedule = training::parse_schedule(text);
  }
  s.read("batch_size", c.batch_size);
  s.read("seed", c.seed);
  s.read("huber_delta", c.huber_delta);
  s.read("beta1", c.beta1);
  s.read("beta2", c.beta2);
  s.read("eps", c.eps);
  s.read("checkpoint_every", c.checkpoint_every);
  s.read("top_k", c.top_k);
  return c;
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  Section root(j, "");
  root.allow({"data", "frontend", "backbone", "train", "output_dir", "classes", "pre_loss_sigmoid"});
  RunConfig c;
  if (!root.has("data")) fail(ErrorKind::kValidation, "data: required section");

  Section data(root.raw("data"), "data");
  data.allow({"synth", "manifest", "patch_length", "chunk_seconds"});
  data.read("patch_length", c.data.patch_length);
  data.read("chunk_seconds", c.data.chunk_seconds);
  if (data.has("synth")) {
    const auto& sj = data.raw("synth");
    if (sj.is_string()) {
      c.data.synth = io::load_synth_spec(resolve(sj.get<std::string>(), base_dir));
    } else {
      try {
        c.data.synth = io::synth_spec_from_json(sj);
      } catch (const Error& e) {
        fail(e.kind(), std::string("data.synth: ") + e.what());
      }
    }
  }
  if (data.has("manifest")) {
    Section m(data.raw("manifest"), "data.manifest");
    m.allow({"train", "valid"});
    std::string train, valid;
    m.read("train", train);
    m.read("valid", valid);
    if (train.empty()) fail(ErrorKind::kValidation, "data.manifest.train: required path");
    c.data.train_manifest = resolve(train, base_dir);
    if (!valid.empty()) c.data.valid_manifest = resolve(valid, base_dir);
  }

  if (root.has("frontend")) c.frontend = frontend_config_from_json(root.raw("frontend"));
  if (root.has("backbone")) c.backbone = backbone_config_from_json(root.raw("backbone"));
  if (root.has("train")) c.train = train_config_from_json(root.raw("train"));
  std::string out;
  root.read("output_dir", out);
  if (!out.empty()) c.output_dir = resolve(out, base_dir);
  root.read("pre_loss_sigmoid", c.pre_loss_sigmoid);
  root.read("classes", c.classes);
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json_file(path), std::filesystem::absolute(path).parent_path());
}

}  // namespace adaf
