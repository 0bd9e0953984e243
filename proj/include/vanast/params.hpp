// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vanast/autodiff.hpp"
#include "vanast/common.hpp"

namespace vanast {

// Named parameter store. Leaf nodes persist across graph constructions;
// the trainable flag is the leaf's requires_grad. A frozen parameter is
// never touched by an optimizer step and never receives a gradient.
class ParamSet {
public:
    Value add(const std::string& name, Tensor t, bool trainable);
    const Value& get(const std::string& name) const;
    bool has(const std::string& name) const { return items_.count(name) != 0; }
    void set_value(const std::string& name, Tensor t);
    void set_trainable(const std::string& name, bool trainable);
    bool trainable(const std::string& name) const { return get(name)->requires_grad; }

    // trainable = true for every name matching one of the prefixes, false
    // otherwise
    void set_trainable_by_prefix(const std::vector<std::string>& prefixes);

    void zero_grad();
    size_t size() const { return items_.size(); }

    std::vector<std::string> names() const;
    std::vector<std::string> names_with_prefix(const std::string& prefix) const;
    size_t count_scalars(const std::string& prefix, bool trainable_only) const;

    // order-stable content hash over (name, shape, raw float bytes)
    uint64_t content_hash(const std::string& prefix = "") const;

    const std::map<std::string, Value>& items() const { return items_; }

private:
    std::map<std::string, Value> items_;
};

// Gradient of a scalar loss w.r.t. every trainable parameter. Frozen
// parameters are absent from the result; trainable parameters that the loss
// does not depend on map to zero tensors.
std::map<std::string, Tensor> reverse_gradient(const Value& loss, ParamSet& params);

// Central-difference gradient estimate, (f(x+eps) - f(x-eps)) / (2 eps) per
// coordinate of every trainable parameter. f must be deterministic.
std::map<std::string, Tensor> finite_difference_gradient(
    const std::function<double(ParamSet&)>& f, ParamSet& params, double eps);

// init helpers
Tensor random_normal(std::vector<int> shape, float stddev, Rng& rng);
Tensor random_uniform(std::vector<int> shape, float lo, float hi, Rng& rng);

}  // namespace vanast
