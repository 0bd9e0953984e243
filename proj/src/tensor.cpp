// SPDX-License-Identifier: Apache-2.0
#include "vanast/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace vanast {

size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("tensor: negative extent");
        n *= static_cast<size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<float>>(shape_numel(shape_), 0.0f)) {}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<float>>(std::move(data))) {
    if (shape_numel(shape_) != data_->size())
        throw std::invalid_argument("tensor: shape/data size mismatch");
}

Tensor Tensor::full(std::vector<int> shape, float v) {
    Tensor t(std::move(shape));
    std::fill(t.data_->begin(), t.data_->end(), v);
    return t;
}

bool Tensor::all_finite() const {
    for (float v : *data_)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Tensor::all_zero() const {
    for (float v : *data_)
        if (v != 0.0f) return false;
    return true;
}

bool Tensor::bitwise_equal(const Tensor& o) const {
    if (shape_ != o.shape_) return false;
    return std::memcmp(data_->data(), o.data_->data(), data_->size() * sizeof(float)) == 0;
}

Tensor Tensor::clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.data_ = std::make_shared<std::vector<float>>(*data_);
    return t;
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
    if (shape_numel(shape) != data_->size())
        throw std::invalid_argument("tensor: reshape element count mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << "]";
    return os.str();
}

}  // namespace vanast
