// SPDX-License-Identifier: Apache-2.0
//
// Substrate tests: reverse-mode gradients against the central-difference
// oracle, plus the documented trivial identities.

#include "doctest.h"

#include <cmath>

#include "vanast/autodiff.hpp"
#include "vanast/params.hpp"

using namespace vanast;

namespace {

// Relative agreement with an absolute floor. The floor absorbs the
// central-difference noise from the f32 forward pass (~ulp(loss)/2eps), which
// dominates for near-zero gradient entries.
bool grads_agree(const Tensor& a, const Tensor& b, double rel_tol, double abs_floor = 1e-4) {
    REQUIRE(a.same_shape(b));
    for (size_t i = 0; i < a.size(); ++i) {
        double x = a.at(i), y = b.at(i);
        if (std::abs(x - y) <= abs_floor) continue;
        if (std::abs(x - y) / std::max(std::abs(x), std::abs(y)) > rel_tol) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("quadratic gradient: loss = sum(w*w)") {
    ParamSet ps;
    auto w = ps.add("w", Tensor({2}, {1.0f, 2.0f}), true);
    auto w2 = w->val.reshaped({1, 2});
    // rebuild leaf as 2-D for the op API
    ParamSet ps2;
    auto wv = ps2.add("w", w2.clone(), true);
    auto loss = sum(mul(wv, wv));
    auto grads = reverse_gradient(loss, ps2);
    CHECK(grads.at("w").at(0) == doctest::Approx(2.0f));
    CHECK(grads.at("w").at(1) == doctest::Approx(4.0f));
}

TEST_CASE("constant loss has zero gradient") {
    ParamSet ps;
    auto w = ps.add("w", Tensor({1, 2}, {3.0f, -1.0f}), true);
    (void)w;
    auto loss = constant(Tensor::scalar(5.0f));
    // constant graph does not touch w; reverse_gradient reports zeros
    auto c = add(loss, scale(sum(mul(ps.get("w"), ps.get("w"))), 0.0f));
    auto grads = reverse_gradient(c, ps);
    CHECK(grads.at("w").at(0) == 0.0f);
    CHECK(grads.at("w").at(1) == 0.0f);
}

TEST_CASE("finite differences: w^2 and sin(w)") {
    ParamSet ps;
    ps.add("w", Tensor({1, 1}, {3.0f}), true);
    auto fd = finite_difference_gradient(
        [](ParamSet& p) {
            double w = p.get("w")->val.at(0);
            return w * w;
        },
        ps, 1e-4);
    CHECK(fd.at("w").at(0) == doctest::Approx(6.0).epsilon(1e-6));

    ParamSet ps2;
    ps2.add("w", Tensor({1, 1}, {0.0f}), true);
    auto fd2 = finite_difference_gradient(
        [](ParamSet& p) { return std::sin(static_cast<double>(p.get("w")->val.at(0))); }, ps2,
        1e-4);
    CHECK(fd2.at("w").at(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("random 2-layer MLP matches finite differences") {
    Rng rng(42);
    ParamSet ps;
    ps.add("w1", random_normal({2, 2}, 0.7f, rng), true);
    ps.add("b1", random_normal({2}, 0.3f, rng), true);
    ps.add("w2", random_normal({2, 1}, 0.7f, rng), true);
    ps.add("b2", random_normal({1}, 0.3f, rng), true);
    Tensor x({1, 2}, {0.4f, -0.9f});

    auto fwd = [&x](ParamSet& p) -> Value {
        auto h = silu(linear(constant(x), p.get("w1"), p.get("b1")));
        auto y = linear(h, p.get("w2"), p.get("b2"));
        return mean(mul(y, y));
    };

    auto loss = fwd(ps);
    auto grads = reverse_gradient(loss, ps);
    auto fd = finite_difference_gradient(
        [&fwd](ParamSet& p) { return static_cast<double>(fwd(p)->val.at(0)); }, ps, 1e-3);

    for (const auto& name : ps.names())
        CHECK_MESSAGE(grads_agree(grads.at(name), fd.at(name), 1e-3), "param ", name);
}

TEST_CASE("frozen parameters receive no gradient entry") {
    Rng rng(7);
    ParamSet ps;
    ps.add("trainable", random_normal({1, 4}, 1.0f, rng), true);
    ps.add("frozen", random_normal({1, 4}, 1.0f, rng), false);
    auto y = mul(ps.get("trainable"), ps.get("frozen"));
    auto loss = sum(y);
    auto grads = reverse_gradient(loss, ps);
    CHECK(grads.count("trainable") == 1);
    CHECK(grads.count("frozen") == 0);
}

TEST_CASE("fused ops match finite differences on random small inputs") {
    Rng rng(1234);
    for (int trial = 0; trial < 4; ++trial) {
        ParamSet ps;
        ps.add("q", random_normal({3, 8}, 0.8f, rng), true);
        ps.add("k", random_normal({5, 8}, 0.8f, rng), true);
        ps.add("v", random_normal({5, 8}, 0.8f, rng), true);
        ps.add("g", random_normal({1, 8}, 0.5f, rng), true);
        ps.add("sh", random_normal({1, 8}, 0.5f, rng), true);
        ps.add("sc", random_normal({1, 8}, 0.5f, rng), true);
        Tensor tgt = random_normal({3, 8}, 1.0f, rng);

        auto fwd = [&tgt](ParamSet& p) -> Value {
            auto a = attention(p.get("q"), p.get("k"), p.get("v"), 2);
            auto n = layer_norm(a);
            auto m = modulate(n, p.get("sh"), p.get("sc"));
            auto gctl = colwise_mul(m, p.get("g"));
            return mse(gctl, constant(tgt));
        };

        auto grads = reverse_gradient(fwd(ps), ps);
        auto fd = finite_difference_gradient(
            [&fwd](ParamSet& p) { return static_cast<double>(fwd(p)->val.at(0)); }, ps, 1e-2);
        for (const auto& name : ps.names())
            CHECK_MESSAGE(grads_agree(grads.at(name), fd.at(name), 1e-2), "trial ", trial,
                          " param ", name);
    }
}

TEST_CASE("structural ops: concat/slice/gather round trips") {
    Rng rng(5);
    Tensor a = random_normal({3, 4}, 1.0f, rng);
    Tensor b = random_normal({2, 4}, 1.0f, rng);
    auto cat = concat_rows(constant(a), constant(b));
    CHECK(slice_rows(cat, 0, 3)->val.bitwise_equal(a));
    CHECK(slice_rows(cat, 3, 2)->val.bitwise_equal(b));

    Tensor x = random_normal({2, 2, 4, 4}, 1.0f, rng);
    auto patches = gather_patches(constant(x), 1, 2, 2);
    CHECK(patches->val.dim(0) == 2 * 2 * 2);
    CHECK(patches->val.dim(1) == 2 * 1 * 2 * 2);

    // gradient of gather_patches is the inverse scatter: grad of sum is ones
    ParamSet ps;
    ps.add("x", x.clone(), true);
    auto loss = sum(gather_patches(ps.get("x"), 1, 2, 2));
    auto grads = reverse_gradient(loss, ps);
    for (size_t i = 0; i < grads.at("x").size(); ++i) CHECK(grads.at("x").at(i) == 1.0f);
}

TEST_CASE("backward rejects non-scalar and non-finite losses") {
    ParamSet ps;
    ps.add("w", Tensor({1, 2}, {1.0f, 2.0f}), true);
    auto v = mul(ps.get("w"), ps.get("w"));
    CHECK_THROWS_AS(backward(v), NumericError);

    ParamSet ps2;
    ps2.add("w", Tensor({1, 1}, {1e38f}), true);
    auto huge = mul(ps2.get("w"), ps2.get("w"));  // overflows to inf
    auto loss = sum(huge);
    CHECK_THROWS_AS(backward(loss), NumericError);
}

TEST_CASE("determinism: same graph twice gives bitwise-identical results") {
    Rng rng(99);
    Tensor q = random_normal({4, 8}, 1.0f, rng);
    Tensor k = random_normal({4, 8}, 1.0f, rng);
    Tensor v = random_normal({4, 8}, 1.0f, rng);
    auto run = [&] {
        return attention(constant(q), constant(k), constant(v), 4)->val;
    };
    CHECK(run().bitwise_equal(run()));
}
