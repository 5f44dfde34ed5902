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

#include "adaf/tensor.hpp"

#include <cassert>
#include <sstream>

namespace adaf {

std::string_view kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kDecode: return "decode";
    case ErrorKind::kUnsupportedFormat: return "unsupported-format";
    case ErrorKind::kTooShort: return "too-short";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kSequenceLength: return "sequence-length";
    case ErrorKind::kNoPositives: return "no-positives";
    case ErrorKind::kUnsupportedAnalysis: return "unsupported-analysis";
    case ErrorKind::kAlignment: return "alignment";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kCheckpoint: return "checkpoint";
  }
  return "unknown";
}

std::size_t numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (numel(shape_) != data_.size()) {
    fail(ErrorKind::kShape, "tensor shape " + to_string(shape_) + " does not match " +
                                std::to_string(data_.size()) + " values");
  }
}

template <typename Real>
Tensor<Real> Tensor<Real>::from(std::initializer_list<Real> values) {
  return Tensor(Shape{values.size()}, std::vector<Real>(values));
}

template <typename Real>
std::size_t Tensor<Real>::offset(std::initializer_list<std::size_t> index) const {
  assert(index.size() == shape_.size());
  std::size_t off = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    assert(i < shape_[axis]);
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

template <typename Real>
Real& Tensor<Real>::at(std::initializer_list<std::size_t> index) {
  return data_[offset(index)];
}

template <typename Real>
Real Tensor<Real>::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(index)];
}

template <typename Real>
Tensor<Real> Tensor<Real>::reshaped(Shape shape) const {
  if (numel(shape) != data_.size()) {
    fail(ErrorKind::kShape,
         "cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

template <typename Real>
void Tensor<Real>::fill(Real value) {
  std::fill(data_.begin(), data_.end(), value);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace adaf
