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

#include "adaf/run.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace adaf::run {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kShuffleStream = 0x5f1e;
constexpr std::uint64_t kDropoutStream = 0xd20b;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

json snapshot(const RunConfig& config) {
  auto j = to_json(config);
  j.erase("output_dir");  // where a run is written does not change what it computes
  return j;
}

float max_abs_grad(const ParamSet<float>& params) {
  float m = 0.0f;
  for (const auto& [name, var] : params.entries()) {
    if (!var.has_grad()) continue;
    for (float g : var.grad().data()) {
      if (std::isnan(g)) return g;
      m = std::max(m, std::abs(g));
    }
  }
  return m;
}

void restore(Model<float>& model, training::Adam& adam, const checkpoint::Checkpoint& ckpt) {
  auto& entries = model.params().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& [name, var] = entries[i];
    const auto& saved = ckpt.at(name);
    if (saved.shape() != var.shape()) {
      fail(ErrorKind::kCheckpoint, name + ": shape " + adaf::to_string(saved.shape()) +
                                       " does not match model " + adaf::to_string(var.shape()));
    }
    var.mutable_value() = saved;
    if (const auto* m = ckpt.find("optim.m/" + name)) adam.first_moments()[i] = *m;
    if (const auto* v = ckpt.find("optim.v/" + name)) adam.second_moments()[i] = *v;
  }
  if (const auto* s = ckpt.find("optim.step")) adam.set_steps(checkpoint::unpack_u64(*s));
}

}  // namespace

io::Dataset load_split(const DataConfig& data, const std::string& split) {
  if (data.synth) {
    return io::dataset_from_synthetic(io::generate_synthetic(*data.synth), split, data.patch_length,
                                      data.chunk_seconds);
  }
  const auto& path = split == "train" ? data.train_manifest : data.valid_manifest;
  if (!path) fail(ErrorKind::kValidation, "data.manifest." + split + ": not configured");
  auto manifest = io::load_manifest(*path);
  manifest.split = split;
  return io::load_dataset(manifest, path->parent_path(), data.patch_length, data.chunk_seconds);
}

io::Dataset evaluation_data(const RunConfig& config, const std::optional<fs::path>& manifest,
                            const std::string& split) {
  io::Dataset ds;
  if (manifest) {
    auto m = io::load_manifest(*manifest);
    if (!split.empty()) m.split = split;
    ds = io::load_dataset(m, manifest->parent_path(), config.data.patch_length,
                          config.data.chunk_seconds);
  } else {
    ds = load_split(config.data, split.empty() ? "valid" : split);
  }
  if (ds.classes != config.classes) {
    fail(ErrorKind::kValidation, "classes: evaluation data classes differ from the trained model's");
  }
  if (ds.items.empty()) fail(ErrorKind::kValidation, "split '" + ds.split + "' has no clips");
  return ds;
}

Splits prepare_data(const DataConfig& data) {
  Splits s;
  if (data.synth) {
    const auto set = io::generate_synthetic(*data.synth);
    s.train = io::dataset_from_synthetic(set, "train", data.patch_length, data.chunk_seconds);
    s.valid = io::dataset_from_synthetic(set, "valid", data.patch_length, data.chunk_seconds);
  } else {
    s.train = load_split(data, "train");
    s.valid = load_split(data, "valid");
    if (s.train.classes != s.valid.classes) {
      fail(ErrorKind::kValidation, "data.manifest: train and valid class lists differ");
    }
  }
  if (s.train.items.empty()) fail(ErrorKind::kValidation, "data: training split is empty");
  if (s.valid.items.empty()) fail(ErrorKind::kValidation, "data: validation split is empty");
  return s;
}

void resolve_dimensions(RunConfig& config, const io::Dataset& train) {
  if (!config.classes.empty() && config.classes != train.classes) {
    fail(ErrorKind::kValidation, "classes: configured class list does not match the training data");
  }
  config.classes = train.classes;
  config.backbone.n_classes = train.classes.size();
  config.backbone.max_tokens = static_cast<std::size_t>(
      std::llround(config.data.chunk_seconds * io::kModelSampleRate)) / config.data.patch_length;
}

fs::path checkpoint_path(const fs::path& output_dir, std::size_t epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch-%04zu.adaf", epoch);
  return output_dir / "checkpoints" / name;
}

checkpoint::Checkpoint make_checkpoint(const RunConfig& config, const Model<float>& model,
                                       const training::Adam& adam, std::size_t epoch) {
  checkpoint::Checkpoint ckpt;
  const auto& entries = model.params().entries();
  for (const auto& [name, var] : entries) ckpt.tensors.push_back({name, var.value()});
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ckpt.tensors.push_back({"optim.m/" + entries[i].first, adam.first_moments()[i]});
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ckpt.tensors.push_back({"optim.v/" + entries[i].first, adam.second_moments()[i]});
  }
  ckpt.tensors.push_back({"optim.step", checkpoint::pack_u64(adam.steps())});
  ckpt.tensors.push_back({"train.epoch", checkpoint::pack_u64(epoch)});
  // Every random stream is derived from (seed, epoch), so these two values are
  // the complete generator state.
  ckpt.tensors.push_back({"rng.seed", checkpoint::pack_u64(config.train.seed)});
  ckpt.tensors.push_back({"rng.epoch", checkpoint::pack_u64(epoch + 1)});
  ckpt.config = snapshot(config);
  return ckpt;
}

LoadedModel load_model(const checkpoint::Checkpoint& ckpt) {
  auto config = run_config_from_json(ckpt.config, {});
  Model<float> model(config.model(), config.train.seed);
  training::Adam adam(model.params(), config.train.beta1, config.train.beta2, config.train.eps);
  restore(model, adam, ckpt);
  const auto epoch = static_cast<std::size_t>(checkpoint::unpack_u64(ckpt.at("train.epoch")));
  return {std::move(config), std::move(model), epoch};
}

LoadedModel load_model(const fs::path& path) { return load_model(checkpoint::load(path)); }

std::vector<training::EpochMetrics> read_metrics_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<training::EpochMetrics> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(training::epoch_metrics_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      fail(ErrorKind::kValidation, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

TrainResult train(RunConfig config, const TrainOptions& options) {
  config.validate();
  auto data = prepare_data(config.data);
  resolve_dimensions(config, data.train);
  config.validate();
  const auto& tc = config.train;

  fs::create_directories(config.output_dir / "checkpoints");
  write_text(config.output_dir / "resolved-config.json", to_json(config).dump(2) + "\n");

  Model<float> model(config.model(), tc.seed);
  training::Adam adam(model.params(), tc.beta1, tc.beta2, tc.eps);
  std::size_t start = 0;
  const auto log_path = config.output_dir / "metrics.jsonl";
  std::vector<training::EpochMetrics> kept;

  if (options.resume_from) {
    const auto ckpt = checkpoint::load(*options.resume_from);
    if (snapshot(config) != ckpt.config) {
      fail(ErrorKind::kCheckpoint, options.resume_from->string() +
                                       ": config snapshot differs from the run config");
    }
    restore(model, adam, ckpt);
    start = static_cast<std::size_t>(checkpoint::unpack_u64(ckpt.at("train.epoch"))) + 1;
    if (fs::exists(log_path)) {
      for (auto& m : read_metrics_log(log_path))
        if (m.epoch < start) kept.push_back(std::move(m));
    }
  }
  {
    std::ostringstream text;
    for (const auto& m : kept) text << training::to_json(m).dump() << '\n';
    write_text(log_path, text.str());
  }

  const training::EvalOptions eval_opts{tc.batch_size, tc.huber_delta, tc.top_k};
  TrainResult result;
  std::size_t last = tc.epochs - 1;
  if (options.stop_after_epoch) last = std::min(last, *options.stop_after_epoch);

  for (std::size_t epoch = start; epoch <= last && epoch < tc.epochs; ++epoch) {
    const double lr = training::lr_at(epoch, tc);
    io::BatchIterator batches(data.train, tc.batch_size, mix_seed({tc.seed, epoch, kShuffleStream}));
    std::mt19937_64 drop_rng(mix_seed({tc.seed, epoch, kDropoutStream}));
    double loss_sum = 0.0;
    std::size_t seen = 0, batch_index = 0;
    while (auto batch = batches.next()) {
      model.params().zero_grad();
      const auto out = model.forward(batch->patches, true, drop_rng);
      const auto loss = model.loss(out, batch->labels, tc.huber_delta);
      ad::backward(loss);
      const float value = loss.value()[0];
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss " << value << " at epoch " << epoch << ", batch " << batch_index
            << ", max |grad| " << max_abs_grad(model.params());
        fail(ErrorKind::kNumerical, msg.str());
      }
      adam.step(model.params(), lr);
      loss_sum += static_cast<double>(value) * static_cast<double>(batch->indices.size());
      seen += batch->indices.size();
      ++batch_index;
    }

    const auto report = training::evaluate(model, data.valid, eval_opts);
    training::EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr;
    m.train_loss = loss_sum / static_cast<double>(seen);
    m.valid_loss = report.loss;
    m.map = report.map;
    m.top_k_patch = report.top_k_patch;
    m.clip_accuracy = report.clip_accuracy;
    m.per_class_ap = report.per_class_ap;
    {
      std::ofstream log(log_path, std::ios::app | std::ios::binary);
      if (!log) fail(ErrorKind::kIo, "cannot append to " + log_path.string());
      log << training::to_json(m).dump() << '\n';
    }
    result.history.push_back(m);
    if (options.on_epoch) options.on_epoch(m);

    const bool final_epoch = epoch + 1 == tc.epochs;
    if ((epoch + 1) % tc.checkpoint_every == 0 || final_epoch || epoch == last) {
      result.last_checkpoint = checkpoint_path(config.output_dir, epoch);
      checkpoint::save(make_checkpoint(config, model, adam, epoch), result.last_checkpoint);
    }
    if (final_epoch) {
      checkpoint::save(make_checkpoint(config, model, adam, epoch), config.output_dir / "final.adaf");
      write_text(config.output_dir / "report.json", training::to_json(report).dump(2) + "\n");
      write_text(config.output_dir / "per-class-ap.csv", training::per_class_csv(report));
    }
  }
  result.config = std::move(config);
  return result;
}

}  // namespace adaf::run
