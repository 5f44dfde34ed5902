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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "adaf/tensor.hpp"

namespace adaf::io {

inline constexpr int kModelSampleRate = 16000;
inline constexpr std::size_t kDefaultPatchLength = 400;  // 25 ms at 16 kHz

struct AudioClip {
  std::vector<float> samples;  // mono, |x| <= 1
  int sample_rate = kModelSampleRate;
  std::string source_id;
};

// A clip cut into T non-overlapping patches of P samples, with its multi-hot label.
struct PatchSequence {
  Tensor<float> patches;     // T x P
  std::vector<float> label;  // C, entries in {0, 1}
  std::string clip_id;
  std::string source_id;  // clip the chunk was cut from; equals clip_id for single-chunk clips

  std::size_t tokens() const { return patches.dim(0); }
};

// ---------------------------------------------------------------------------
// WAV

enum class SampleFormat { kPcm16, kFloat32 };

// RIFF/WAVE with 16-bit PCM or 32-bit IEEE float samples, any channel count.
// Channels are averaged to mono.
AudioClip decode_wav(const std::filesystem::path& path);
AudioClip decode_wav_bytes(std::span<const std::uint8_t> bytes, const std::string& source_id);

std::vector<std::uint8_t> encode_wav(std::span<const float> samples, int sample_rate,
                                     SampleFormat format, int channels = 1);
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               SampleFormat format = SampleFormat::kFloat32);

// ---------------------------------------------------------------------------
// Resampling and patching

// Windowed-sinc polyphase resampler (Kaiser window, 64 taps per phase).
AudioClip resample(const AudioClip& clip, int target_rate);

// Non-overlapping, unwindowed patches; a trailing partial patch is dropped.
PatchSequence patchify(const AudioClip& clip, std::size_t patch_length);

// ---------------------------------------------------------------------------
// Manifests

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory unless absolute
  std::vector<std::string> labels;
};

struct DatasetManifest {
  std::vector<std::string> classes;  // label-vector index order
  std::vector<ManifestEntry> entries;
  std::string split = "train";

  void validate() const;
  std::vector<float> label_vector(const ManifestEntry& entry) const;
};

nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic data

enum class GeneratorKind { kPureTone, kAmTone, kChirp, kNoiseBurst, kHarmonicStack };

std::string to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& text);

struct SynthFamily {
  std::string name;
  GeneratorKind kind = GeneratorKind::kPureTone;
  // Fundamental (tones), start/end band (chirp) or band centre (noise), Hz.
  std::array<double, 2> freq_range{200.0, 300.0};
  // AM rate (am-tone) or burst rate (noise-burst), Hz.
  std::array<double, 2> mod_range{4.0, 12.0};
  std::array<double, 2> amplitude_range{0.3, 0.9};
};

struct SynthSpec {
  std::vector<SynthFamily> families;
  std::size_t clips_per_family = 10;
  double clip_seconds = 1.0;
  std::uint64_t seed = 0;
  std::size_t patch_length = kDefaultPatchLength;
  // Trailing share of each family's clips assigned to the "valid" split.
  double valid_fraction = 0.2;
  // Families' freq_range intervals must be disjoint unless this is set.
  bool allow_overlap = false;

  void validate() const;
};

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);
SynthSpec load_synth_spec(const std::filesystem::path& path);

struct SynthClip {
  AudioClip clip;
  std::size_t family = 0;
  std::string split;
  std::string relative_path;  // wav/<family>-<index>.wav
};

struct SyntheticSet {
  std::vector<std::string> classes;
  std::vector<SynthClip> clips;

  DatasetManifest manifest(const std::string& split) const;
};

// Pure function of the spec.
SyntheticSet generate_synthetic(const SynthSpec& spec);
// Writes float WAVs under out_dir/wav and manifest-<split>.json per split.
void write_synthetic(const SyntheticSet& set, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Datasets and batching

struct Dataset {
  std::vector<std::string> classes;
  std::vector<PatchSequence> items;
  std::string split;
  std::size_t patch_length = kDefaultPatchLength;
};

// Decodes, resamples to 16 kHz, cuts each clip into non-overlapping chunks of
// chunk_seconds (remainder dropped) and patchifies every chunk. Every chunk
// inherits the clip's label.
Dataset load_dataset(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                     std::size_t patch_length, double chunk_seconds = 1.0);
Dataset dataset_from_synthetic(const SyntheticSet& set, const std::string& split,
                               std::size_t patch_length, double chunk_seconds = 1.0);

struct Batch {
  Tensor<float> patches;  // B x T x P
  Tensor<float> labels;   // B x C
  std::vector<std::size_t> indices;
  std::vector<std::string> clip_ids;
};

// Deterministic shuffled pass over a dataset; the last batch may be short.
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t epoch_seed);
  // Sequential, unshuffled order.
  static BatchIterator ordered(const Dataset& dataset, std::size_t batch_size);

  std::optional<Batch> next();
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  BatchIterator(const Dataset& dataset, std::size_t batch_size);

  const Dataset* dataset_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

Batch make_batch(const Dataset& dataset, std::span<const std::size_t> indices);

}  // namespace adaf::io
