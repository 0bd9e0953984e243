// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "vanast/tensor.hpp"

namespace vanast {

// Reverse-mode differentiation over explicitly constructed graphs. Operations
// record their inputs in the returned node; there is no global tape, so any
// number of independent graphs can coexist (Eq.-style dual context streams
// rely on this).
struct Node {
    Tensor val;
    Tensor grad;  // allocated on first accumulation during backward
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void()> backprop;
    const char* op = "";

    void ensure_grad();
    void accumulate(const Tensor& g);
    void accumulate_scaled(const Tensor& g, float s);
};

using Value = std::shared_ptr<Node>;

Value constant(Tensor t);
Value leaf(Tensor t, bool requires_grad);

// elementwise
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value add_scaled(const Value& a, float s, const Value& b);  // a + s*b
Value scale(const Value& a, float s);
Value lerp(const Value& a, const Value& b, float w);  // w*a + (1-w)*b
Value silu(const Value& x);

// 2-D linear algebra ([rows x cols])
Value matmul(const Value& a, const Value& b);
Value linear(const Value& x, const Value& w, const Value& b);  // x*w + b
Value linear_nobias(const Value& x, const Value& w);

// rowwise layer norm without affine, eps 1e-5
Value layer_norm(const Value& x);
// y[i,:] = x[i,:] * (1 + scale[0,:]) + shift[0,:]
Value modulate(const Value& x, const Value& shift, const Value& scl);
// y[i,j] = x[i,j] * g[0,j]
Value colwise_mul(const Value& x, const Value& g);

// fused multi-head attention over already-projected q/k/v of width D,
// split into `heads` heads; softmax is max-subtracted for stability
Value attention(const Value& q, const Value& k, const Value& v, int heads);

// structure
Value concat_rows(const Value& a, const Value& b);
Value slice_rows(const Value& x, int r0, int len);
Value slice_cols(const Value& x, int c0, int len);
Value gather_rows(const Value& table, const std::vector<int>& ids);

// Non-overlapping 3-D patch extraction on a [T,C,H,W] tensor: one output row
// per (t,y,x) grid cell, each row the flattened (C,tp,hp,wp) patch. The
// inverse scatter is the backward pass.
Value gather_patches(const Value& x, int tp, int hp, int wp);

// reductions (64-bit accumulation)
Value sum(const Value& x);
Value mean(const Value& x);
Value mse(const Value& a, const Value& b);

// Runs reverse-mode accumulation from a scalar loss. Throws NumericError on
// a non-scalar or non-finite loss.
void backward(const Value& loss);

// raw kernels shared with non-graph code paths
namespace kernels {
// C += A(MxK) * B(KxN)
void gemm_nn(int M, int K, int N, const float* A, const float* B, float* C);
// C += A(MxK) * B(NxK)^T
void gemm_nt(int M, int K, int N, const float* A, const float* B, float* C);
// C(KxN) += A(MxK)^T * dC(MxN)
void gemm_tn(int M, int K, int N, const float* A, const float* dC, float* C);
}  // namespace kernels

}  // namespace vanast
