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

#include "adaf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <iterator>

#include "adaf/error.hpp"

namespace adaf::checkpoint {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

namespace {

constexpr char kMagic[4] = {'A', 'D', 'A', 'F'};

template <typename U>
void put(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> take(std::uint64_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t offset() const { return pos_; }

 private:
  void need(std::uint64_t n, const char* what) {
    if (n > bytes_.size() - pos_) {
      fail(ErrorKind::kCheckpoint, std::string("truncated while reading ") + what + " at offset " +
                                       std::to_string(pos_));
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.value;
  return nullptr;
}

const Tensor<float>& Checkpoint::at(const std::string& name) const {
  if (const auto* t = find(name)) return *t;
  fail(ErrorKind::kCheckpoint, "missing tensor '" + name + "'");
}

std::vector<std::uint8_t> encode(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, value] : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(value.rank()));
    for (auto d : value.shape()) put<std::uint64_t>(out, d);
    for (float v : value.data()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  const std::string config = ckpt.config.dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config.size()));
  out.insert(out.end(), config.begin(), config.end());
  return out;
}

Checkpoint decode(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    fail(ErrorKind::kCheckpoint, "bad magic, not an ADAF checkpoint");
  }
  const auto version = in.get<std::uint32_t>("version");
  if (version != kFormatVersion) {
    fail(ErrorKind::kCheckpoint, "unsupported format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto count = in.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    auto name = in.take(in.get<std::uint32_t>("name length"), "name");
    t.name.assign(name.begin(), name.end());
    const auto rank = in.get<std::uint32_t>("rank");
    Shape shape;
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = in.get<std::uint64_t>("dims");
      if (d != 0 && n > (std::uint64_t{1} << 62) / d) {
        fail(ErrorKind::kCheckpoint, "tensor '" + t.name + "' has an absurd element count");
      }
      shape.push_back(static_cast<std::size_t>(d));
      n *= d;
    }
    auto raw = in.take(n * 4, "tensor values");
    std::vector<float> values(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < values.size(); ++k) {
      std::uint32_t w = 0;
      for (int b = 0; b < 4; ++b) w |= static_cast<std::uint32_t>(raw[4 * k + b]) << (8 * b);
      values[k] = std::bit_cast<float>(w);
    }
    t.value = Tensor<float>(std::move(shape), std::move(values));
    ckpt.tensors.push_back(std::move(t));
  }
  auto config = in.take(in.get<std::uint32_t>("config length"), "config");
  try {
    ckpt.config = nlohmann::json::parse(config.begin(), config.end());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kCheckpoint, std::string("config snapshot: ") + e.what());
  }
  if (!in.done()) {
    fail(ErrorKind::kCheckpoint, "trailing bytes at offset " + std::to_string(in.offset()));
  }
  return ckpt;
}

void save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

Tensor<float> pack_u64(std::uint64_t value) {
  Tensor<float> t(Shape{4});
  for (int i = 0; i < 4; ++i) t[static_cast<std::size_t>(i)] = static_cast<float>((value >> (16 * i)) & 0xffff);
  return t;
}

std::uint64_t unpack_u64(const Tensor<float>& packed) {
  if (packed.size() != 4) fail(ErrorKind::kCheckpoint, "packed integer must have 4 limbs");
  std::uint64_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint64_t>(packed[static_cast<std::size_t>(i)]) << (16 * i);
  }
  return v;
}

}  // namespace adaf::checkpoint
