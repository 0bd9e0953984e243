// SPDX-License-Identifier: Apache-2.0
#include "vanast/params.hpp"

#include <cmath>
#include <stdexcept>

namespace vanast {

Value ParamSet::add(const std::string& name, Tensor t, bool trainable) {
    if (items_.count(name)) throw std::invalid_argument("param already exists: " + name);
    auto v = leaf(std::move(t), trainable);
    items_.emplace(name, v);
    return v;
}

const Value& ParamSet::get(const std::string& name) const {
    auto it = items_.find(name);
    if (it == items_.end()) throw std::invalid_argument("no such param: " + name);
    return it->second;
}

void ParamSet::set_value(const std::string& name, Tensor t) {
    auto it = items_.find(name);
    if (it == items_.end()) throw std::invalid_argument("no such param: " + name);
    if (!it->second->val.same_shape(t))
        throw std::invalid_argument("param shape change not allowed: " + name);
    it->second->val = std::move(t);
}

void ParamSet::set_trainable(const std::string& name, bool trainable) {
    auto it = items_.find(name);
    if (it == items_.end()) throw std::invalid_argument("no such param: " + name);
    it->second->requires_grad = trainable;
}

void ParamSet::set_trainable_by_prefix(const std::vector<std::string>& prefixes) {
    for (auto& [name, v] : items_) {
        bool t = false;
        for (const auto& p : prefixes)
            if (name.rfind(p, 0) == 0) {
                t = true;
                break;
            }
        v->requires_grad = t;
    }
}

void ParamSet::zero_grad() {
    for (auto& [name, v] : items_) {
        (void)name;
        v->has_grad = false;
        v->grad = Tensor();
    }
}

std::vector<std::string> ParamSet::names() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [name, v] : items_) {
        (void)v;
        out.push_back(name);
    }
    return out;
}

std::vector<std::string> ParamSet::names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, v] : items_) {
        (void)v;
        if (name.rfind(prefix, 0) == 0) out.push_back(name);
    }
    return out;
}

size_t ParamSet::count_scalars(const std::string& prefix, bool trainable_only) const {
    size_t n = 0;
    for (const auto& [name, v] : items_) {
        if (name.rfind(prefix, 0) != 0) continue;
        if (trainable_only && !v->requires_grad) continue;
        n += v->val.size();
    }
    return n;
}

uint64_t ParamSet::content_hash(const std::string& prefix) const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [name, v] : items_) {
        if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
        h = fnv1a64(name.data(), name.size(), h);
        const auto& shape = v->val.shape();
        h = fnv1a64(shape.data(), shape.size() * sizeof(int), h);
        h = fnv1a64(v->val.data(), v->val.size() * sizeof(float), h);
    }
    return h;
}

std::map<std::string, Tensor> reverse_gradient(const Value& loss, ParamSet& params) {
    params.zero_grad();
    backward(loss);
    std::map<std::string, Tensor> out;
    for (const auto& [name, v] : params.items()) {
        if (!v->requires_grad) continue;
        if (v->has_grad) {
            if (!v->grad.all_finite())
                throw NumericError("reverse_gradient: non-finite gradient for " + name);
            out.emplace(name, v->grad);
        } else {
            out.emplace(name, Tensor(v->val.shape()));
        }
    }
    return out;
}

std::map<std::string, Tensor> finite_difference_gradient(
    const std::function<double(ParamSet&)>& f, ParamSet& params, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("finite_difference_gradient: eps must be > 0");
    std::map<std::string, Tensor> out;
    for (const auto& [name, v] : params.items()) {
        if (!v->requires_grad) continue;
        Tensor g(v->val.shape());
        float* data = v->val.data();
        for (size_t i = 0, n = v->val.size(); i < n; ++i) {
            const float orig = data[i];
            const float hi = static_cast<float>(static_cast<double>(orig) + eps);
            const float lo = static_cast<float>(static_cast<double>(orig) - eps);
            data[i] = hi;
            double fp = f(params);
            data[i] = lo;
            double fm = f(params);
            data[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("finite_difference_gradient: non-finite probe at " + name);
            // use the realized perturbation, not the nominal eps
            g.at(i) = static_cast<float>((fp - fm) / (static_cast<double>(hi) - lo));
        }
        out.emplace(name, std::move(g));
    }
    return out;
}

Tensor random_normal(std::vector<int> shape, float stddev, Rng& rng) {
    Tensor t(std::move(shape));
    float* p = t.data();
    for (size_t i = 0, n = t.size(); i < n; ++i) p[i] = stddev * rng.normal();
    return t;
}

Tensor random_uniform(std::vector<int> shape, float lo, float hi, Rng& rng) {
    Tensor t(std::move(shape));
    float* p = t.data();
    for (size_t i = 0, n = t.size(); i < n; ++i)
        p[i] = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

}  // namespace vanast
