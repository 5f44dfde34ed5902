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
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adaf/signal_io.hpp"

namespace adaf::io {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      fail(ErrorKind::kDecode, source_ + ": truncated " + what + " at offset " +
                                   std::to_string(pos_) + " (need " + std::to_string(n) +
                                   " bytes, have " + std::to_string(remaining()) + ")");
    }
  }
  std::string tag(const char* what) {
    need(4, what);
    std::string t(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

struct Format {
  std::uint16_t code = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

AudioClip decode_wav_bytes(std::span<const std::uint8_t> bytes, const std::string& source_id) {
  Reader r(bytes, source_id);
  const std::size_t riff_at = r.offset();
  if (r.tag("RIFF header") != "RIFF") {
    fail(ErrorKind::kDecode, source_id + ": missing RIFF tag at offset " + std::to_string(riff_at));
  }
  r.u32("RIFF size");
  const std::size_t wave_at = r.offset();
  if (r.tag("WAVE tag") != "WAVE") {
    fail(ErrorKind::kDecode, source_id + ": missing WAVE tag at offset " + std::to_string(wave_at));
  }

  std::optional<Format> fmt;
  while (r.remaining() > 0) {
    const std::size_t chunk_at = r.offset();
    const std::string id = r.tag("chunk header");
    const std::uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      if (size < 16) {
        fail(ErrorKind::kDecode, source_id + ": fmt chunk too small at offset " +
                                     std::to_string(chunk_at));
      }
      const std::size_t body_at = r.offset();
      r.need(size, "fmt chunk");
      Format f;
      f.code = r.u16("format code");
      f.channels = r.u16("channel count");
      f.sample_rate = r.u32("sample rate");
      r.u32("byte rate");
      f.block_align = r.u16("block align");
      f.bits = r.u16("bits per sample");
      if (f.code == kFormatExtensible && size >= 40) {
        r.u16("extension size");
        r.u16("valid bits");
        r.u32("channel mask");
        f.code = r.u16("sub-format");
      }
      r.skip(size - (r.offset() - body_at) + (size & 1u), "fmt chunk");
      fmt = f;
    } else if (id == "data") {
      if (!fmt) {
        fail(ErrorKind::kDecode, source_id + ": data chunk before fmt chunk at offset " +
                                     std::to_string(chunk_at));
      }
      const Format& f = *fmt;
      const bool pcm16 = f.code == kFormatPcm && f.bits == 16;
      const bool float32 = f.code == kFormatFloat && f.bits == 32;
      if (!pcm16 && !float32) {
        fail(ErrorKind::kUnsupportedFormat,
             source_id + ": unsupported encoding (format code " + std::to_string(f.code) + ", " +
                 std::to_string(f.bits) + " bits); expected 16-bit PCM or 32-bit float");
      }
      const std::size_t width = f.bits / 8;
      if (f.channels == 0 || f.sample_rate == 0 || f.block_align != width * f.channels) {
        fail(ErrorKind::kDecode, source_id + ": inconsistent fmt chunk (channels " +
                                     std::to_string(f.channels) + ", block align " +
                                     std::to_string(f.block_align) + ")");
      }
      if (r.remaining() < size) {
        fail(ErrorKind::kDecode, source_id + ": truncated data chunk at offset " +
                                     std::to_string(r.offset()) + " (declares " +
                                     std::to_string(size) + " bytes, " +
                                     std::to_string(r.remaining()) + " present)");
      }
      auto data = r.take(size, "data chunk");
      const std::size_t frames = size / f.block_align;
      if (frames == 0) {
        fail(ErrorKind::kDecode, source_id + ": data chunk at offset " + std::to_string(chunk_at) +
                                     " holds no complete frame");
      }
      AudioClip clip;
      clip.sample_rate = static_cast<int>(f.sample_rate);
      clip.source_id = source_id;
      clip.samples.resize(frames);
      const double inv_channels = 1.0 / f.channels;
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < f.channels; ++c) {
          const std::uint8_t* p = data.data() + i * f.block_align + c * width;
          if (pcm16) {
            const auto raw = static_cast<std::int16_t>(p[0] | (p[1] << 8));
            acc += raw / 32768.0;
          } else {
            std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                 (static_cast<std::uint32_t>(p[2]) << 16) |
                                 (static_cast<std::uint32_t>(p[3]) << 24);
            const float v = std::bit_cast<float>(bits);
            if (!std::isfinite(v)) {
              fail(ErrorKind::kDecode, source_id + ": non-finite sample at offset " +
                                           std::to_string(static_cast<std::size_t>(p - bytes.data())));
            }
            acc += std::clamp(v, -1.0f, 1.0f);
          }
        }
        clip.samples[i] = static_cast<float>(acc * inv_channels);
      }
      return clip;
    } else {
      r.skip(size + (size & 1u), "chunk body");
    }
  }
  fail(ErrorKind::kDecode, source_id + ": no data chunk before end of file at offset " +
                               std::to_string(r.offset()));
}

AudioClip decode_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav_bytes(bytes, path.string());
}

std::vector<std::uint8_t> encode_wav(std::span<const float> samples, int sample_rate,
                                     SampleFormat format, int channels) {
  if (channels < 1 || samples.size() % static_cast<std::size_t>(channels) != 0) {
    fail(ErrorKind::kContract, "encode_wav: sample count not divisible by channel count");
  }
  const std::uint16_t width = format == SampleFormat::kPcm16 ? 2 : 4;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * width);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == SampleFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * width * static_cast<std::uint32_t>(channels));
  put_u16(out, static_cast<std::uint16_t>(width * channels));
  put_u16(out, static_cast<std::uint16_t>(width * 8));
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (float s : samples) {
    if (format == SampleFormat::kPcm16) {
      const double scaled = std::round(std::clamp(static_cast<double>(s), -1.0, 1.0) * 32768.0);
      const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      put_u16(out, static_cast<std::uint16_t>(v));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(s));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, SampleFormat format) {
  const auto bytes = encode_wav(clip.samples, clip.sample_rate, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace adaf::io
