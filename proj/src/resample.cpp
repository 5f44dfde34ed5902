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
#include <numbers>
#include <numeric>

#include "adaf/signal_io.hpp"

namespace adaf::io {

namespace {

constexpr int kTapsPerPhase = 64;
constexpr double kKaiserBeta = 8.6;
constexpr double kPassbandFraction = 0.97;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double u) {
  if (std::abs(u) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - u * u)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

// phases x taps table; row p interpolates at fractional offset p / L.
std::vector<double> polyphase_table(std::uint64_t up, std::uint64_t down) {
  const double cutoff = 0.5 * std::min(1.0, static_cast<double>(up) / static_cast<double>(down)) *
                        kPassbandFraction;
  constexpr int half = kTapsPerPhase / 2;
  std::vector<double> table(up * kTapsPerPhase);
  for (std::uint64_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    double* row = table.data() + p * kTapsPerPhase;
    double total = 0.0;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      const double t = static_cast<double>(k - half + 1) - frac;
      row[k] = 2.0 * cutoff * sinc(2.0 * cutoff * t) * kaiser(t / half);
      total += row[k];
    }
    for (int k = 0; k < kTapsPerPhase; ++k) row[k] /= total;  // unit DC gain per phase
  }
  return table;
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) {
    fail(ErrorKind::kContract, "resample: target rate must be positive, got " + std::to_string(target_rate));
  }
  if (clip.sample_rate <= 0) {
    fail(ErrorKind::kContract, "resample: clip has non-positive sample rate");
  }
  if (clip.sample_rate == target_rate) return clip;

  const auto g = std::gcd(clip.sample_rate, target_rate);
  const auto up = static_cast<std::uint64_t>(target_rate / g);
  const auto down = static_cast<std::uint64_t>(clip.sample_rate / g);
  const auto table = polyphase_table(up, down);

  const auto n_in = static_cast<std::uint64_t>(clip.samples.size());
  const std::uint64_t n_out = (n_in * up + down - 1) / down;
  constexpr int half = kTapsPerPhase / 2;

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_id = clip.source_id;
  out.samples.resize(n_out);
  for (std::uint64_t m = 0; m < n_out; ++m) {
    const std::uint64_t pos = m * down;
    const auto base = static_cast<std::int64_t>(pos / up);
    const double* row = table.data() + (pos % up) * kTapsPerPhase;
    double acc = 0.0;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      const std::int64_t idx = base + k - half + 1;
      if (idx >= 0 && idx < static_cast<std::int64_t>(n_in)) {
        acc += row[k] * clip.samples[static_cast<std::size_t>(idx)];
      }
    }
    out.samples[m] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return out;
}

PatchSequence patchify(const AudioClip& clip, std::size_t patch_length) {
  if (patch_length == 0) fail(ErrorKind::kContract, "patchify: patch_length must be >= 1");
  if (clip.sample_rate != kModelSampleRate) {
    fail(ErrorKind::kContract, "patchify: expected " + std::to_string(kModelSampleRate) +
                                   " Hz audio, got " + std::to_string(clip.sample_rate));
  }
  const std::size_t tokens = clip.samples.size() / patch_length;
  if (tokens == 0) {
    fail(ErrorKind::kTooShort, "patchify: " + clip.source_id + " has " +
                                   std::to_string(clip.samples.size()) +
                                   " samples, shorter than one patch of " +
                                   std::to_string(patch_length));
  }
  PatchSequence seq;
  seq.clip_id = clip.source_id;
  seq.source_id = clip.source_id;
  std::vector<float> data(clip.samples.begin(),
                          clip.samples.begin() + static_cast<std::ptrdiff_t>(tokens * patch_length));
  seq.patches = Tensor<float>(Shape{tokens, patch_length}, std::move(data));
  return seq;
}

}  // namespace adaf::io
