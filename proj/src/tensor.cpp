// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/tensor.hpp"

#include <cmath>
#include <sstream>

#include "avse/common.hpp"

namespace avse::nn {

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  int64_t n = 1;
  for (int d : shape_) {
    if (d < 0) throw ShapeError("Tensor: negative dimension");
    n *= d;
  }
  data_.assign(static_cast<size_t>(n), fill);
}

void Tensor::fill(double v) {
  for (auto& x : data_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ',';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  Tensor out(std::move(shape));
  if (out.size() != size())
    throw ShapeError("Tensor::reshaped: size mismatch " + shape_str() + " -> " + out.shape_str());
  out.data_ = data_;
  return out;
}

}  // namespace avse::nn
