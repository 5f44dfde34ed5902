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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "adaf/params.hpp"
#include "adaf/signal_io.hpp"

namespace adaf::io {

using nlohmann::json;

void DatasetManifest::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorKind::kValidation, "manifest." + field + ": " + why);
  };
  if (classes.empty()) bad("classes", "at least one class is required");
  std::set<std::string> known;
  for (const auto& c : classes)
    if (!known.insert(c).second) bad("classes", "duplicate class '" + c + "'");
  if (split != "train" && split != "valid" && split != "test") {
    bad("split", "expected train, valid or test, got '" + split + "'");
  }
  for (const auto& e : entries) {
    if (e.path.empty()) bad("entries.path", "must be nonempty");
    if (e.labels.empty()) bad("entries.labels", e.path + " has no labels");
    for (const auto& l : e.labels)
      if (!known.count(l)) bad("entries.labels", e.path + " uses unknown class '" + l + "'");
  }
}

std::vector<float> DatasetManifest::label_vector(const ManifestEntry& entry) const {
  std::vector<float> v(classes.size(), 0.0f);
  for (const auto& l : entry.labels) {
    auto it = std::find(classes.begin(), classes.end(), l);
    if (it == classes.end()) fail(ErrorKind::kValidation, "manifest: unknown class '" + l + "'");
    v[static_cast<std::size_t>(it - classes.begin())] = 1.0f;
  }
  return v;
}

json to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) entries.push_back({{"path", e.path}, {"labels", e.labels}});
  return {{"classes", m.classes}, {"entries", entries}, {"split", m.split}};
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  try {
    if (!j.is_object()) fail(ErrorKind::kValidation, "manifest: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key != "classes" && key != "entries" && key != "split") {
        fail(ErrorKind::kValidation, "manifest." + key + ": unknown field");
      }
    }
    m.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& ej : j.at("entries")) {
      m.entries.push_back({ej.at("path").get<std::string>(),
                           ej.at("labels").get<std::vector<std::string>>()});
    }
    m.split = j.value("split", std::string("train"));
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << to_json(manifest).dump(2) << '\n';
}

namespace {

void append_chunks(Dataset& ds, const AudioClip& clip16k, const std::string& id,
                   const std::vector<float>& label, double chunk_seconds) {
  const auto chunk = static_cast<std::size_t>(std::llround(chunk_seconds * kModelSampleRate));
  if (chunk < ds.patch_length) {
    fail(ErrorKind::kValidation, "data.chunk_seconds: chunk shorter than one patch");
  }
  const std::size_t chunks = clip16k.samples.size() / chunk;
  if (chunks == 0) {
    fail(ErrorKind::kTooShort, id + ": " + std::to_string(clip16k.samples.size()) +
                                   " samples is shorter than one " + std::to_string(chunk_seconds) +
                                   " s chunk");
  }
  for (std::size_t k = 0; k < chunks; ++k) {
    AudioClip piece;
    piece.sample_rate = kModelSampleRate;
    piece.source_id = chunks == 1 ? id : id + "#" + std::to_string(k);
    piece.samples.assign(clip16k.samples.begin() + static_cast<std::ptrdiff_t>(k * chunk),
                         clip16k.samples.begin() + static_cast<std::ptrdiff_t>((k + 1) * chunk));
    auto seq = patchify(piece, ds.patch_length);
    seq.label = label;
    seq.source_id = id;
    ds.items.push_back(std::move(seq));
  }
}

}  // namespace

Dataset load_dataset(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                     std::size_t patch_length, double chunk_seconds) {
  manifest.validate();
  Dataset ds;
  ds.classes = manifest.classes;
  ds.split = manifest.split;
  ds.patch_length = patch_length;
  for (const auto& e : manifest.entries) {
    std::filesystem::path p(e.path);
    if (p.is_relative()) p = base_dir / p;
    auto clip = decode_wav(p);
    if (clip.sample_rate != kModelSampleRate) clip = resample(clip, kModelSampleRate);
    append_chunks(ds, clip, e.path, manifest.label_vector(e), chunk_seconds);
  }
  return ds;
}

Dataset dataset_from_synthetic(const SyntheticSet& set, const std::string& split,
                               std::size_t patch_length, double chunk_seconds) {
  Dataset ds;
  ds.classes = set.classes;
  ds.split = split;
  ds.patch_length = patch_length;
  for (const auto& c : set.clips) {
    if (c.split != split) continue;
    std::vector<float> label(set.classes.size(), 0.0f);
    label[c.family] = 1.0f;
    append_chunks(ds, c.clip, c.relative_path, label, chunk_seconds);
  }
  return ds;
}

Batch make_batch(const Dataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) fail(ErrorKind::kContract, "make_batch: no indices");
  const auto& first = dataset.items.at(indices[0]);
  const std::size_t T = first.tokens();
  const std::size_t P = dataset.patch_length;
  const std::size_t C = dataset.classes.size();
  Batch b;
  b.patches = Tensor<float>(Shape{indices.size(), T, P});
  b.labels = Tensor<float>(Shape{indices.size(), C});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& item = dataset.items.at(indices[i]);
    if (item.tokens() != T || item.patches.dim(1) != P) {
      fail(ErrorKind::kShape, "make_batch: " + item.clip_id + " has shape " +
                                  adaf::to_string(item.patches.shape()) + ", batch expects [" +
                                  std::to_string(T) + "x" + std::to_string(P) + "]");
    }
    std::copy(item.patches.data().begin(), item.patches.data().end(),
              b.patches.data().begin() + static_cast<std::ptrdiff_t>(i * T * P));
    std::copy(item.label.begin(), item.label.end(),
              b.labels.data().begin() + static_cast<std::ptrdiff_t>(i * C));
    b.indices.push_back(indices[i]);
    b.clip_ids.push_back(item.clip_id);
  }
  return b;
}

BatchIterator::BatchIterator(const Dataset& dataset, std::size_t batch_size)
    : dataset_(&dataset), batch_size_(batch_size) {
  if (batch_size == 0) fail(ErrorKind::kContract, "batch_iter: batch_size must be >= 1");
  if (dataset.items.empty()) fail(ErrorKind::kContract, "batch_iter: empty dataset");
  order_.resize(dataset.items.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

BatchIterator::BatchIterator(const Dataset& dataset, std::size_t batch_size,
                             std::uint64_t epoch_seed)
    : BatchIterator(dataset, batch_size) {
  // Fisher-Yates with a portable index draw.
  std::mt19937_64 rng(epoch_seed);
  for (std::size_t i = order_.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(i));
    std::swap(order_[i - 1], order_[std::min(j, i - 1)]);
  }
}

BatchIterator BatchIterator::ordered(const Dataset& dataset, std::size_t batch_size) {
  return BatchIterator(dataset, batch_size);
}

std::optional<Batch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t n = std::min(batch_size_, order_.size() - cursor_);
  auto batch = make_batch(*dataset_, std::span<const std::size_t>(order_).subspan(cursor_, n));
  cursor_ += n;
  return batch;
}

}  // namespace adaf::io
