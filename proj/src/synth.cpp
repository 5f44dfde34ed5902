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
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "adaf/params.hpp"
#include "adaf/signal_io.hpp"

namespace adaf::io {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double draw(std::mt19937_64& rng, const std::array<double, 2>& range) {
  return range[0] + (range[1] - range[0]) * unit_uniform(rng);
}

void bad(const std::string& field, const std::string& why) {
  fail(ErrorKind::kValidation, "synth." + field + ": " + why);
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  if (!j.is_object()) bad(where, "expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      bad(where.empty() ? key : where + "." + key, "unknown field");
    }
  }
}

std::array<double, 2> read_range(const json& j, const char* key, std::array<double, 2> fallback,
                                 const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    bad(where + "." + key, "expected [low, high]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<double> render(const SynthFamily& family, std::size_t n, std::mt19937_64& rng) {
  const double fs = kModelSampleRate;
  const double duration = static_cast<double>(n) / fs;
  std::vector<double> x(n, 0.0);
  switch (family.kind) {
    case GeneratorKind::kPureTone: {
      const double f = draw(rng, family.freq_range);
      const double phase = kTwoPi * unit_uniform(rng);
      for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(kTwoPi * f * (i / fs) + phase);
      break;
    }
    case GeneratorKind::kAmTone: {
      const double f = draw(rng, family.freq_range);
      const double rate = draw(rng, family.mod_range);
      const double phase = kTwoPi * unit_uniform(rng);
      const double mod_phase = kTwoPi * unit_uniform(rng);
      constexpr double depth = 0.8;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = i / fs;
        x[i] = (1.0 + depth * std::sin(kTwoPi * rate * t + mod_phase)) *
               std::sin(kTwoPi * f * t + phase);
      }
      break;
    }
    case GeneratorKind::kChirp: {
      const double f0 = draw(rng, family.freq_range);
      const double f1 = draw(rng, family.freq_range);
      const double phase = kTwoPi * unit_uniform(rng);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = i / fs;
        x[i] = std::sin(kTwoPi * (f0 * t + (f1 - f0) * t * t / (2.0 * duration)) + phase);
      }
      break;
    }
    case GeneratorKind::kNoiseBurst: {
      // White noise through an RBJ band-pass biquad, gated at the burst rate.
      const double fc = draw(rng, family.freq_range);
      const double rate = draw(rng, family.mod_range);
      const double gate_phase = unit_uniform(rng);
      constexpr double q = 3.0;
      const double w0 = kTwoPi * fc / fs;
      const double alpha = std::sin(w0) / (2.0 * q);
      const double a0 = 1.0 + alpha;
      const double b0 = alpha / a0, b2 = -alpha / a0;
      const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
      double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double in = standard_normal(rng);
        const double y = b0 * in + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = in;
        y2 = y1;
        y1 = y;
        const double cycle = rate * (i / fs) + gate_phase;
        x[i] = (cycle - std::floor(cycle)) < 0.5 ? y : 0.0;
      }
      break;
    }
    case GeneratorKind::kHarmonicStack: {
      const double f = draw(rng, family.freq_range);
      for (int h = 1; h <= 8 && h * f < 0.45 * fs; ++h) {
        const double phase = kTwoPi * unit_uniform(rng);
        for (std::size_t i = 0; i < n; ++i) x[i] += std::sin(kTwoPi * h * f * (i / fs) + phase) / h;
      }
      break;
    }
  }
  const double amplitude = draw(rng, family.amplitude_range);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : x) v *= amplitude / peak;
  }
  return x;
}

}  // namespace

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kPureTone: return "pure-tone";
    case GeneratorKind::kAmTone: return "am-tone";
    case GeneratorKind::kChirp: return "chirp";
    case GeneratorKind::kNoiseBurst: return "noise-burst";
    case GeneratorKind::kHarmonicStack: return "harmonic-stack";
  }
  return "?";
}

GeneratorKind parse_generator_kind(const std::string& text) {
  for (auto k : {GeneratorKind::kPureTone, GeneratorKind::kAmTone, GeneratorKind::kChirp,
                 GeneratorKind::kNoiseBurst, GeneratorKind::kHarmonicStack}) {
    if (to_string(k) == text) return k;
  }
  bad("families.kind", "unknown generator '" + text + "'");
  return GeneratorKind::kPureTone;
}

void SynthSpec::validate() const {
  if (families.empty()) bad("families", "at least one family is required");
  if (clips_per_family < 1) bad("clips_per_family", "must be >= 1");
  if (!(clip_seconds > 0.0)) bad("clip_seconds", "must be > 0");
  if (patch_length < 1) bad("patch_length", "must be >= 1");
  if (clip_seconds * kModelSampleRate < static_cast<double>(patch_length)) {
    bad("clip_seconds", "clip is shorter than one patch");
  }
  if (valid_fraction < 0.0 || valid_fraction >= 1.0) bad("valid_fraction", "must lie in [0, 1)");
  const auto n_valid = static_cast<std::size_t>(std::llround(valid_fraction * clips_per_family));
  if (n_valid >= clips_per_family) bad("valid_fraction", "leaves no training clips");

  std::set<std::string> names;
  const double nyquist = kModelSampleRate / 2.0;
  for (const auto& f : families) {
    if (f.name.empty()) bad("families.name", "must be nonempty");
    if (!names.insert(f.name).second) bad("families.name", "duplicate family '" + f.name + "'");
    auto check = [&](const std::array<double, 2>& r, const char* field, double lo, double hi) {
      if (!(r[0] <= r[1]) || r[0] < lo || r[1] > hi) {
        bad(std::string("families.") + field, "invalid range for family '" + f.name + "'");
      }
    };
    check(f.freq_range, "freq_range", 1e-9, nyquist);
    check(f.mod_range, "mod_range", 0.0, nyquist);
    check(f.amplitude_range, "amplitude_range", 1e-9, 1.0);
  }
  if (!allow_overlap) {
    for (std::size_t i = 0; i < families.size(); ++i)
      for (std::size_t j = i + 1; j < families.size(); ++j) {
        const auto& a = families[i].freq_range;
        const auto& b = families[j].freq_range;
        if (a[0] <= b[1] && b[0] <= a[1]) {
          bad("families.freq_range", "'" + families[i].name + "' overlaps '" + families[j].name +
                                         "' (set allow_overlap to permit)");
        }
      }
  }
}

json to_json(const SynthSpec& spec) {
  json fams = json::array();
  for (const auto& f : spec.families) {
    fams.push_back({{"name", f.name},
                    {"kind", to_string(f.kind)},
                    {"freq_range", f.freq_range},
                    {"mod_range", f.mod_range},
                    {"amplitude_range", f.amplitude_range}});
  }
  return {{"families", fams},
          {"clips_per_family", spec.clips_per_family},
          {"clip_seconds", spec.clip_seconds},
          {"seed", spec.seed},
          {"patch_length", spec.patch_length},
          {"valid_fraction", spec.valid_fraction},
          {"allow_overlap", spec.allow_overlap}};
}

SynthSpec synth_spec_from_json(const json& j) {
  reject_unknown_keys(j, {"families", "clips_per_family", "clip_seconds", "seed", "patch_length",
                          "valid_fraction", "allow_overlap"},
                      "");
  SynthSpec spec;
  try {
    if (!j.contains("families") || !j.at("families").is_array()) bad("families", "required array");
    for (const auto& fj : j.at("families")) {
      reject_unknown_keys(fj, {"name", "kind", "freq_range", "mod_range", "amplitude_range"},
                          "families");
      SynthFamily f;
      f.name = fj.at("name").get<std::string>();
      f.kind = parse_generator_kind(fj.at("kind").get<std::string>());
      f.freq_range = read_range(fj, "freq_range", f.freq_range, "families");
      f.mod_range = read_range(fj, "mod_range", f.mod_range, "families");
      f.amplitude_range = read_range(fj, "amplitude_range", f.amplitude_range, "families");
      spec.families.push_back(std::move(f));
    }
    if (j.contains("clips_per_family")) {
      const auto v = j.at("clips_per_family").get<long long>();
      if (v < 0) bad("clips_per_family", "must be >= 1");
      spec.clips_per_family = static_cast<std::size_t>(v);
    }
    spec.clip_seconds = j.value("clip_seconds", spec.clip_seconds);
    spec.seed = j.value("seed", spec.seed);
    spec.patch_length = j.value("patch_length", spec.patch_length);
    spec.valid_fraction = j.value("valid_fraction", spec.valid_fraction);
    spec.allow_overlap = j.value("allow_overlap", spec.allow_overlap);
  } catch (const json::exception& e) {
    bad("spec", e.what());
  }
  spec.validate();
  return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
  return synth_spec_from_json(j);
}

DatasetManifest SyntheticSet::manifest(const std::string& split) const {
  DatasetManifest m;
  m.classes = classes;
  m.split = split;
  for (const auto& c : clips) {
    if (c.split == split) m.entries.push_back({c.relative_path, {classes[c.family]}});
  }
  return m;
}

SyntheticSet generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  SyntheticSet set;
  const auto n = static_cast<std::size_t>(std::llround(spec.clip_seconds * kModelSampleRate));
  const auto n_valid = static_cast<std::size_t>(std::llround(spec.valid_fraction * spec.clips_per_family));
  const std::size_t n_train = spec.clips_per_family - n_valid;
  for (std::size_t fi = 0; fi < spec.families.size(); ++fi) {
    const auto& family = spec.families[fi];
    set.classes.push_back(family.name);
    for (std::size_t ci = 0; ci < spec.clips_per_family; ++ci) {
      std::mt19937_64 rng(mix_seed({spec.seed, fi, ci}));
      const auto x = render(family, n, rng);
      char name[64];
      std::snprintf(name, sizeof name, "-%04zu.wav", ci);
      SynthClip clip;
      clip.family = fi;
      clip.split = ci < n_train ? "train" : "valid";
      clip.relative_path = "wav/" + family.name + name;
      clip.clip.sample_rate = kModelSampleRate;
      clip.clip.source_id = clip.relative_path;
      clip.clip.samples.assign(x.begin(), x.end());
      set.clips.push_back(std::move(clip));
    }
  }
  return set;
}

void write_synthetic(const SyntheticSet& set, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + (out_dir / "wav").string() + ": " + ec.message());
  for (const auto& c : set.clips) write_wav(out_dir / c.relative_path, c.clip, SampleFormat::kFloat32);
  for (const char* split : {"train", "valid"}) {
    auto m = set.manifest(split);
    if (!m.entries.empty()) save_manifest(m, out_dir / (std::string("manifest-") + split + ".json"));
  }
}

}  // namespace adaf::io
