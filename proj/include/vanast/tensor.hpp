// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

namespace vanast {

// Dense row-major float32 array. Treated as immutable once handed to another
// component; copies are cheap (shared storage).
class Tensor {
public:
    Tensor() : data_(std::make_shared<std::vector<float>>()) {}
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<float> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float v);
    static Tensor scalar(float v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    size_t size() const { return data_->size(); }
    bool empty() const { return data_->empty(); }

    // 2-D helpers (most graph ops work on [rows x cols])
    int rows() const { return shape_.size() == 2 ? shape_[0] : (shape_.size() == 1 ? 1 : 0); }
    int cols() const { return shape_.size() == 2 ? shape_[1] : (shape_.size() == 1 ? shape_[0] : 0); }

    const float* data() const { return data_->data(); }
    float* data() { return data_->data(); }
    float at(size_t i) const { return (*data_)[i]; }
    float& at(size_t i) { return (*data_)[i]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    bool all_zero() const;
    bool bitwise_equal(const Tensor& o) const;

    Tensor clone() const;
    // Shares storage under a new shape; element count must match.
    Tensor reshaped(std::vector<int> shape) const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::shared_ptr<std::vector<float>> data_;
};

size_t shape_numel(const std::vector<int>& shape);

}  // namespace vanast
