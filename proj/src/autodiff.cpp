// SPDX-License-Identifier: Apache-2.0
#include "vanast/autodiff.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

#include "vanast/common.hpp"

namespace vanast {

namespace kernels {

void gemm_nn(int M, int K, int N, const float* A, const float* B, float* C) {
    for (int m = 0; m < M; ++m) {
        const float* a = A + static_cast<size_t>(m) * K;
        float* c = C + static_cast<size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            const float av = a[k];
            if (av == 0.0f) continue;
            const float* b = B + static_cast<size_t>(k) * N;
            for (int n = 0; n < N; ++n) c[n] += av * b[n];
        }
    }
}

void gemm_nt(int M, int K, int N, const float* A, const float* B, float* C) {
    for (int m = 0; m < M; ++m) {
        const float* a = A + static_cast<size_t>(m) * K;
        float* c = C + static_cast<size_t>(m) * N;
        for (int n = 0; n < N; ++n) {
            const float* b = B + static_cast<size_t>(n) * K;
            float acc = 0.0f;
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            c[n] += acc;
        }
    }
}

void gemm_tn(int M, int K, int N, const float* A, const float* dC, float* C) {
    for (int m = 0; m < M; ++m) {
        const float* a = A + static_cast<size_t>(m) * K;
        const float* d = dC + static_cast<size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            const float av = a[k];
            if (av == 0.0f) continue;
            float* c = C + static_cast<size_t>(k) * N;
            for (int n = 0; n < N; ++n) c[n] += av * d[n];
        }
    }
}

}  // namespace kernels

void Node::ensure_grad() {
    if (!has_grad) {
        grad = Tensor(val.shape());
        has_grad = true;
    }
}

void Node::accumulate(const Tensor& g) {
    ensure_grad();
    float* dst = grad.data();
    const float* src = g.data();
    for (size_t i = 0, n = grad.size(); i < n; ++i) dst[i] += src[i];
}

void Node::accumulate_scaled(const Tensor& g, float s) {
    ensure_grad();
    float* dst = grad.data();
    const float* src = g.data();
    for (size_t i = 0, n = grad.size(); i < n; ++i) dst[i] += s * src[i];
}

namespace {

Value make_node(Tensor val, std::vector<Value> inputs, const char* op) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    n->inputs = std::move(inputs);
    n->op = op;
    for (const auto& in : n->inputs)
        if (in->requires_grad) n->requires_grad = true;
    return n;
}

void check_same_shape(const Value& a, const Value& b, const char* op) {
    if (!a->val.same_shape(b->val))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    a->val.shape_str() + " vs " + b->val.shape_str());
}

void check_2d(const Value& x, const char* op) {
    if (x->val.ndim() != 2)
        throw std::invalid_argument(std::string(op) + ": expected 2-D tensor, got " +
                                    x->val.shape_str());
}

}  // namespace

Value constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->val = std::move(t);
    n->op = "const";
    return n;
}

Value leaf(Tensor t, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->val = std::move(t);
    n->requires_grad = requires_grad;
    n->op = "leaf";
    return n;
}

Value add(const Value& a, const Value& b) {
    check_same_shape(a, b, "add");
    Tensor out(a->val.shape());
    const float* pa = a->val.data();
    const float* pb = b->val.data();
    float* po = out.data();
    for (size_t i = 0, n = out.size(); i < n; ++i) po[i] = pa[i] + pb[i];
    auto node = make_node(std::move(out), {a, b}, "add");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* na = a.get();
        Node* nb = b.get();
        node->backprop = [self, na, nb] {
            if (na->requires_grad) na->accumulate(self->grad);
            if (nb->requires_grad) nb->accumulate(self->grad);
        };
    }
    return node;
}

Value add_scaled(const Value& a, float s, const Value& b) {
    check_same_shape(a, b, "add_scaled");
    Tensor out(a->val.shape());
    const float* pa = a->val.data();
    const float* pb = b->val.data();
    float* po = out.data();
    for (size_t i = 0, n = out.size(); i < n; ++i) po[i] = pa[i] + s * pb[i];
    auto node = make_node(std::move(out), {a, b}, "add_scaled");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* na = a.get();
        Node* nb = b.get();
        node->backprop = [self, na, nb, s] {
            if (na->requires_grad) na->accumulate(self->grad);
            if (nb->requires_grad) nb->accumulate_scaled(self->grad, s);
        };
    }
    return node;
}

Value sub(const Value& a, const Value& b) { return add_scaled(a, -1.0f, b); }

Value lerp(const Value& a, const Value& b, float w) {
    check_same_shape(a, b, "lerp");
    const float wb = 1.0f - w;
    Tensor out(a->val.shape());
    const float* pa = a->val.data();
    const float* pb = b->val.data();
    float* po = out.data();
    for (size_t i = 0, n = out.size(); i < n; ++i) po[i] = w * pa[i] + wb * pb[i];
    auto node = make_node(std::move(out), {a, b}, "lerp");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* na = a.get();
        Node* nb = b.get();
        node->backprop = [self, na, nb, w, wb] {
            if (na->requires_grad) na->accumulate_scaled(self->grad, w);
            if (nb->requires_grad) nb->accumulate_scaled(self->grad, wb);
        };
    }
    return node;
}

Value mul(const Value& a, const Value& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a->val.shape());
    const float* pa = a->val.data();
    const float* pb = b->val.data();
    float* po = out.data();
    for (size_t i = 0, n = out.size(); i < n; ++i) po[i] = pa[i] * pb[i];
    auto node = make_node(std::move(out), {a, b}, "mul");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* na = a.get();
        Node* nb = b.get();
        node->backprop = [self, na, nb] {
            const float* g = self->grad.data();
            if (na->requires_grad) {
                na->ensure_grad();
                float* da = na->grad.data();
                const float* pb2 = nb->val.data();
                for (size_t i = 0, n = self->grad.size(); i < n; ++i) da[i] += g[i] * pb2[i];
            }
            if (nb->requires_grad) {
                nb->ensure_grad();
                float* db = nb->grad.data();
                const float* pa2 = na->val.data();
                for (size_t i = 0, n = self->grad.size(); i < n; ++i) db[i] += g[i] * pa2[i];
            }
        };
    }
    return node;
}

Value scale(const Value& a, float s) {
    Tensor out(a->val.shape());
    const float* pa = a->val.data();
    float* po = out.data();
    for (size_t i = 0, n = out.size(); i < n; ++i) po[i] = s * pa[i];
    auto node = make_node(std::move(out), {a}, "scale");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* na = a.get();
        node->backprop = [self, na, s] { na->accumulate_scaled(self->grad, s); };
    }
    return node;
}

Value silu(const Value& x) {
    Tensor out(x->val.shape());
    const float* px = x->val.data();
    float* po = out.data();
    const size_t n = out.size();
    for (size_t i = 0; i < n; ++i) {
        float s = 1.0f / (1.0f + std::exp(-px[i]));
        po[i] = px[i] * s;
    }
    auto node = make_node(std::move(out), {x}, "silu");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        node->backprop = [self, nx] {
            nx->ensure_grad();
            const float* g = self->grad.data();
            const float* px2 = nx->val.data();
            float* dx = nx->grad.data();
            for (size_t i = 0, n2 = self->grad.size(); i < n2; ++i) {
                float s = 1.0f / (1.0f + std::exp(-px2[i]));
                dx[i] += g[i] * (s + px2[i] * s * (1.0f - s));
            }
        };
    }
    return node;
}

Value matmul(const Value& a, const Value& b) {
    check_2d(a, "matmul");
    check_2d(b, "matmul");
    const int M = a->val.dim(0), K = a->val.dim(1);
    if (b->val.dim(0) != K)
        throw std::invalid_argument("matmul: inner extent mismatch " + a->val.shape_str() +
                                    " vs " + b->val.shape_str());
    const int N = b->val.dim(1);
    Tensor out({M, N});
    kernels::gemm_nn(M, K, N, a->val.data(), b->val.data(), out.data());
    auto node = make_node(std::move(out), {a, b}, "matmul");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* na = a.get();
        Node* nb = b.get();
        node->backprop = [self, na, nb, M, K, N] {
            if (na->requires_grad) {
                na->ensure_grad();
                kernels::gemm_nt(M, N, K, self->grad.data(), nb->val.data(), na->grad.data());
            }
            if (nb->requires_grad) {
                nb->ensure_grad();
                kernels::gemm_tn(M, K, N, na->val.data(), self->grad.data(), nb->grad.data());
            }
        };
    }
    return node;
}

Value linear(const Value& x, const Value& w, const Value& b) {
    check_2d(x, "linear");
    check_2d(w, "linear");
    const int M = x->val.dim(0), K = x->val.dim(1);
    if (w->val.dim(0) != K)
        throw std::invalid_argument("linear: weight fan-in mismatch " + x->val.shape_str() +
                                    " vs " + w->val.shape_str());
    const int N = w->val.dim(1);
    if (static_cast<int>(b->val.size()) != N)
        throw std::invalid_argument("linear: bias extent mismatch");
    Tensor out({M, N});
    float* po = out.data();
    const float* pb = b->val.data();
    for (int m = 0; m < M; ++m) std::memcpy(po + static_cast<size_t>(m) * N, pb, sizeof(float) * N);
    kernels::gemm_nn(M, K, N, x->val.data(), w->val.data(), po);
    auto node = make_node(std::move(out), {x, w, b}, "linear");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        Node* nw = w.get();
        Node* nb = b.get();
        node->backprop = [self, nx, nw, nb, M, K, N] {
            const float* g = self->grad.data();
            if (nx->requires_grad) {
                nx->ensure_grad();
                kernels::gemm_nt(M, N, K, g, nw->val.data(), nx->grad.data());
            }
            if (nw->requires_grad) {
                nw->ensure_grad();
                kernels::gemm_tn(M, K, N, nx->val.data(), g, nw->grad.data());
            }
            if (nb->requires_grad) {
                nb->ensure_grad();
                float* db = nb->grad.data();
                for (int m = 0; m < M; ++m) {
                    const float* gr = g + static_cast<size_t>(m) * N;
                    for (int n = 0; n < N; ++n) db[n] += gr[n];
                }
            }
        };
    }
    return node;
}

Value linear_nobias(const Value& x, const Value& w) { return matmul(x, w); }

Value layer_norm(const Value& x) {
    check_2d(x, "layer_norm");
    constexpr double kEps = 1e-5;
    const int M = x->val.dim(0), D = x->val.dim(1);
    Tensor out({M, D});
    Tensor inv_std({M});
    const float* px = x->val.data();
    float* po = out.data();
    float* pis = inv_std.data();
    for (int m = 0; m < M; ++m) {
        const float* row = px + static_cast<size_t>(m) * D;
        double mu = 0.0;
        for (int j = 0; j < D; ++j) mu += row[j];
        mu /= D;
        double var = 0.0;
        for (int j = 0; j < D; ++j) {
            double d = row[j] - mu;
            var += d * d;
        }
        var /= D;
        double is = 1.0 / std::sqrt(var + kEps);
        pis[m] = static_cast<float>(is);
        float* orow = po + static_cast<size_t>(m) * D;
        for (int j = 0; j < D; ++j)
            orow[j] = static_cast<float>((row[j] - mu) * is);
    }
    auto node = make_node(std::move(out), {x}, "layer_norm");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        Tensor y = self->val;  // normalized output, shared storage
        node->backprop = [self, nx, y, inv_std, M, D] {
            nx->ensure_grad();
            const float* g = self->grad.data();
            const float* py = y.data();
            float* dx = nx->grad.data();
            for (int m = 0; m < M; ++m) {
                const float* gr = g + static_cast<size_t>(m) * D;
                const float* yr = py + static_cast<size_t>(m) * D;
                float* dr = dx + static_cast<size_t>(m) * D;
                double gmean = 0.0, gymean = 0.0;
                for (int j = 0; j < D; ++j) {
                    gmean += gr[j];
                    gymean += static_cast<double>(gr[j]) * yr[j];
                }
                gmean /= D;
                gymean /= D;
                const float is = inv_std.at(static_cast<size_t>(m));
                for (int j = 0; j < D; ++j)
                    dr[j] += is * static_cast<float>(gr[j] - gmean - yr[j] * gymean);
            }
        };
    }
    return node;
}

Value modulate(const Value& x, const Value& shift, const Value& scl) {
    check_2d(x, "modulate");
    const int M = x->val.dim(0), D = x->val.dim(1);
    if (static_cast<int>(shift->val.size()) != D || static_cast<int>(scl->val.size()) != D)
        throw std::invalid_argument("modulate: shift/scale extent mismatch");
    Tensor out({M, D});
    const float* px = x->val.data();
    const float* psh = shift->val.data();
    const float* psc = scl->val.data();
    float* po = out.data();
    for (int m = 0; m < M; ++m) {
        const float* row = px + static_cast<size_t>(m) * D;
        float* orow = po + static_cast<size_t>(m) * D;
        for (int j = 0; j < D; ++j) orow[j] = row[j] * (1.0f + psc[j]) + psh[j];
    }
    auto node = make_node(std::move(out), {x, shift, scl}, "modulate");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        Node* nsh = shift.get();
        Node* nsc = scl.get();
        node->backprop = [self, nx, nsh, nsc, M, D] {
            const float* g = self->grad.data();
            if (nx->requires_grad) {
                nx->ensure_grad();
                const float* psc2 = nsc->val.data();
                float* dx = nx->grad.data();
                for (int m = 0; m < M; ++m)
                    for (int j = 0; j < D; ++j)
                        dx[static_cast<size_t>(m) * D + j] +=
                            g[static_cast<size_t>(m) * D + j] * (1.0f + psc2[j]);
            }
            if (nsh->requires_grad) {
                nsh->ensure_grad();
                float* dsh = nsh->grad.data();
                for (int m = 0; m < M; ++m)
                    for (int j = 0; j < D; ++j) dsh[j] += g[static_cast<size_t>(m) * D + j];
            }
            if (nsc->requires_grad) {
                nsc->ensure_grad();
                const float* px2 = nx->val.data();
                float* dsc = nsc->grad.data();
                for (int m = 0; m < M; ++m)
                    for (int j = 0; j < D; ++j)
                        dsc[j] += g[static_cast<size_t>(m) * D + j] *
                                  px2[static_cast<size_t>(m) * D + j];
            }
        };
    }
    return node;
}

Value colwise_mul(const Value& x, const Value& g) {
    check_2d(x, "colwise_mul");
    const int M = x->val.dim(0), D = x->val.dim(1);
    if (static_cast<int>(g->val.size()) != D)
        throw std::invalid_argument("colwise_mul: gate extent mismatch");
    Tensor out({M, D});
    const float* px = x->val.data();
    const float* pg = g->val.data();
    float* po = out.data();
    for (int m = 0; m < M; ++m)
        for (int j = 0; j < D; ++j)
            po[static_cast<size_t>(m) * D + j] = px[static_cast<size_t>(m) * D + j] * pg[j];
    auto node = make_node(std::move(out), {x, g}, "colwise_mul");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        Node* ng = g.get();
        node->backprop = [self, nx, ng, M, D] {
            const float* gr = self->grad.data();
            if (nx->requires_grad) {
                nx->ensure_grad();
                const float* pg2 = ng->val.data();
                float* dx = nx->grad.data();
                for (int m = 0; m < M; ++m)
                    for (int j = 0; j < D; ++j)
                        dx[static_cast<size_t>(m) * D + j] +=
                            gr[static_cast<size_t>(m) * D + j] * pg2[j];
            }
            if (ng->requires_grad) {
                ng->ensure_grad();
                const float* px2 = nx->val.data();
                float* dg = ng->grad.data();
                for (int m = 0; m < M; ++m)
                    for (int j = 0; j < D; ++j)
                        dg[j] += gr[static_cast<size_t>(m) * D + j] *
                                 px2[static_cast<size_t>(m) * D + j];
            }
        };
    }
    return node;
}

Value attention(const Value& q, const Value& k, const Value& v, int heads) {
    check_2d(q, "attention");
    check_2d(k, "attention");
    check_2d(v, "attention");
    const int N = q->val.dim(0), D = q->val.dim(1);
    const int M = k->val.dim(0);
    if (k->val.dim(1) != D || v->val.dim(1) != D || v->val.dim(0) != M)
        throw std::invalid_argument("attention: q/k/v extent mismatch");
    if (heads <= 0 || D % heads != 0)
        throw std::invalid_argument("attention: head count must divide width");
    const int dh = D / heads;
    const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));

    Tensor out({N, D});
    // per-head softmax weights saved for backward
    auto weights = std::make_shared<std::vector<Tensor>>();
    weights->reserve(static_cast<size_t>(heads));

    const float* pq = q->val.data();
    const float* pk = k->val.data();
    const float* pv = v->val.data();
    float* po = out.data();

    std::vector<float> logits(static_cast<size_t>(M));
    for (int h = 0; h < heads; ++h) {
        const int c0 = h * dh;
        Tensor a({N, M});
        float* pa = a.data();
        for (int i = 0; i < N; ++i) {
            const float* qi = pq + static_cast<size_t>(i) * D + c0;
            double denom = 0.0;
            float mx = -std::numeric_limits<float>::infinity();
            for (int j = 0; j < M; ++j) {
                const float* kj = pk + static_cast<size_t>(j) * D + c0;
                float acc = 0.0f;
                for (int c = 0; c < dh; ++c) acc += qi[c] * kj[c];
                logits[static_cast<size_t>(j)] = acc * inv_sqrt;
                mx = std::max(mx, logits[static_cast<size_t>(j)]);
            }
            for (int j = 0; j < M; ++j) {
                float e = std::exp(logits[static_cast<size_t>(j)] - mx);
                logits[static_cast<size_t>(j)] = e;
                denom += e;
            }
            const float inv_denom = static_cast<float>(1.0 / denom);
            float* arow = pa + static_cast<size_t>(i) * M;
            for (int j = 0; j < M; ++j) arow[j] = logits[static_cast<size_t>(j)] * inv_denom;
            // o_i = sum_j a_ij v_j
            float* oi = po + static_cast<size_t>(i) * D + c0;
            for (int c = 0; c < dh; ++c) oi[c] = 0.0f;
            for (int j = 0; j < M; ++j) {
                const float aij = arow[j];
                if (aij == 0.0f) continue;
                const float* vj = pv + static_cast<size_t>(j) * D + c0;
                for (int c = 0; c < dh; ++c) oi[c] += aij * vj[c];
            }
        }
        weights->push_back(std::move(a));
    }

    auto node = make_node(std::move(out), {q, k, v}, "attention");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nq = q.get();
        Node* nk = k.get();
        Node* nv = v.get();
        node->backprop = [self, nq, nk, nv, weights, N, M, D, heads, dh, inv_sqrt] {
            nq->ensure_grad();
            nk->ensure_grad();
            nv->ensure_grad();
            const float* g = self->grad.data();
            const float* pq2 = nq->val.data();
            const float* pk2 = nk->val.data();
            const float* pv2 = nv->val.data();
            float* dq = nq->grad.data();
            float* dk = nk->grad.data();
            float* dv = nv->grad.data();
            std::vector<float> da(static_cast<size_t>(M));
            for (int h = 0; h < heads; ++h) {
                const int c0 = h * dh;
                const Tensor& a = (*weights)[static_cast<size_t>(h)];
                const float* pa = a.data();
                for (int i = 0; i < N; ++i) {
                    const float* gi = g + static_cast<size_t>(i) * D + c0;
                    const float* arow = pa + static_cast<size_t>(i) * M;
                    // dV += a^T g ; da = g V^T
                    double dot_da_a = 0.0;
                    for (int j = 0; j < M; ++j) {
                        const float* vj = pv2 + static_cast<size_t>(j) * D + c0;
                        float acc = 0.0f;
                        for (int c = 0; c < dh; ++c) acc += gi[c] * vj[c];
                        da[static_cast<size_t>(j)] = acc;
                        dot_da_a += static_cast<double>(acc) * arow[j];
                        float* dvj = dv + static_cast<size_t>(j) * D + c0;
                        const float aij = arow[j];
                        for (int c = 0; c < dh; ++c) dvj[c] += aij * gi[c];
                    }
                    // dlogits = a * (da - <da, a>)  then dQ/dK through the dot products
                    const float* qi = pq2 + static_cast<size_t>(i) * D + c0;
                    float* dqi = dq + static_cast<size_t>(i) * D + c0;
                    for (int j = 0; j < M; ++j) {
                        const float dl =
                            arow[j] * (da[static_cast<size_t>(j)] - static_cast<float>(dot_da_a)) *
                            inv_sqrt;
                        if (dl == 0.0f) continue;
                        const float* kj = pk2 + static_cast<size_t>(j) * D + c0;
                        float* dkj = dk + static_cast<size_t>(j) * D + c0;
                        for (int c = 0; c < dh; ++c) {
                            dqi[c] += dl * kj[c];
                            dkj[c] += dl * qi[c];
                        }
                    }
                }
            }
        };
    }
    return node;
}

Value concat_rows(const Value& a, const Value& b) {
    check_2d(a, "concat_rows");
    check_2d(b, "concat_rows");
    if (a->val.dim(1) != b->val.dim(1))
        throw std::invalid_argument("concat_rows: column extent mismatch");
    const int Ma = a->val.dim(0), Mb = b->val.dim(0), D = a->val.dim(1);
    Tensor out({Ma + Mb, D});
    std::memcpy(out.data(), a->val.data(), sizeof(float) * a->val.size());
    std::memcpy(out.data() + a->val.size(), b->val.data(), sizeof(float) * b->val.size());
    auto node = make_node(std::move(out), {a, b}, "concat_rows");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* na = a.get();
        Node* nb = b.get();
        node->backprop = [self, na, nb, Ma, Mb, D] {
            const float* g = self->grad.data();
            if (na->requires_grad) {
                na->ensure_grad();
                float* da = na->grad.data();
                for (size_t i = 0, n = static_cast<size_t>(Ma) * D; i < n; ++i) da[i] += g[i];
            }
            if (nb->requires_grad) {
                nb->ensure_grad();
                float* db = nb->grad.data();
                const float* gb = g + static_cast<size_t>(Ma) * D;
                for (size_t i = 0, n = static_cast<size_t>(Mb) * D; i < n; ++i) db[i] += gb[i];
            }
        };
    }
    return node;
}

Value slice_rows(const Value& x, int r0, int len) {
    check_2d(x, "slice_rows");
    const int M = x->val.dim(0), D = x->val.dim(1);
    if (r0 < 0 || len < 0 || r0 + len > M)
        throw std::invalid_argument("slice_rows: range out of bounds");
    Tensor out({len, D});
    std::memcpy(out.data(), x->val.data() + static_cast<size_t>(r0) * D,
                sizeof(float) * out.size());
    auto node = make_node(std::move(out), {x}, "slice_rows");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        node->backprop = [self, nx, r0, D, len] {
            nx->ensure_grad();
            const float* g = self->grad.data();
            float* dx = nx->grad.data() + static_cast<size_t>(r0) * D;
            for (size_t i = 0, n = static_cast<size_t>(len) * D; i < n; ++i) dx[i] += g[i];
        };
    }
    return node;
}

Value slice_cols(const Value& x, int c0, int len) {
    check_2d(x, "slice_cols");
    const int M = x->val.dim(0), D = x->val.dim(1);
    if (c0 < 0 || len < 0 || c0 + len > D)
        throw std::invalid_argument("slice_cols: range out of bounds");
    Tensor out({M, len});
    const float* px = x->val.data();
    float* po = out.data();
    for (int m = 0; m < M; ++m)
        std::memcpy(po + static_cast<size_t>(m) * len, px + static_cast<size_t>(m) * D + c0,
                    sizeof(float) * len);
    auto node = make_node(std::move(out), {x}, "slice_cols");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        node->backprop = [self, nx, c0, len, M, D] {
            nx->ensure_grad();
            const float* g = self->grad.data();
            float* dx = nx->grad.data();
            for (int m = 0; m < M; ++m)
                for (int j = 0; j < len; ++j)
                    dx[static_cast<size_t>(m) * D + c0 + j] += g[static_cast<size_t>(m) * len + j];
        };
    }
    return node;
}

Value gather_rows(const Value& table, const std::vector<int>& ids) {
    check_2d(table, "gather_rows");
    const int V = table->val.dim(0), D = table->val.dim(1);
    const int N = static_cast<int>(ids.size());
    for (int id : ids)
        if (id < 0 || id >= V) throw std::invalid_argument("gather_rows: index out of range");
    Tensor out({N, D});
    const float* pt = table->val.data();
    float* po = out.data();
    for (int i = 0; i < N; ++i)
        std::memcpy(po + static_cast<size_t>(i) * D,
                    pt + static_cast<size_t>(ids[static_cast<size_t>(i)]) * D, sizeof(float) * D);
    auto node = make_node(std::move(out), {table}, "gather_rows");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nt = table.get();
        node->backprop = [self, nt, ids, D] {
            nt->ensure_grad();
            const float* g = self->grad.data();
            float* dt = nt->grad.data();
            for (size_t i = 0; i < ids.size(); ++i) {
                float* row = dt + static_cast<size_t>(ids[i]) * D;
                const float* gr = g + i * D;
                for (int j = 0; j < D; ++j) row[j] += gr[j];
            }
        };
    }
    return node;
}

Value gather_patches(const Value& x, int tp, int hp, int wp) {
    if (x->val.ndim() != 4)
        throw std::invalid_argument("gather_patches: expected [T,C,H,W], got " +
                                    x->val.shape_str());
    const int T = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
    if (tp <= 0 || hp <= 0 || wp <= 0 || T % tp != 0 || H % hp != 0 || W % wp != 0)
        throw std::invalid_argument("gather_patches: extents not divisible by patch size");
    const int Tg = T / tp, Hg = H / hp, Wg = W / wp;
    const int ntok = Tg * Hg * Wg;
    const int pv = C * tp * hp * wp;
    Tensor out({ntok, pv});
    const float* px = x->val.data();
    float* po = out.data();
    auto src_index = [&](int t, int c, int y, int xx) {
        return ((static_cast<size_t>(t) * C + c) * H + y) * W + xx;
    };
    int tok = 0;
    for (int tg = 0; tg < Tg; ++tg)
        for (int yg = 0; yg < Hg; ++yg)
            for (int xg = 0; xg < Wg; ++xg, ++tok) {
                float* row = po + static_cast<size_t>(tok) * pv;
                int idx = 0;
                for (int c = 0; c < C; ++c)
                    for (int dt = 0; dt < tp; ++dt)
                        for (int dy = 0; dy < hp; ++dy)
                            for (int dx = 0; dx < wp; ++dx)
                                row[idx++] = px[src_index(tg * tp + dt, c, yg * hp + dy,
                                                          xg * wp + dx)];
            }
    auto node = make_node(std::move(out), {x}, "gather_patches");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        node->backprop = [self, nx, T, C, H, W, tp, hp, wp, pv] {
            nx->ensure_grad();
            const int Tg2 = T / tp, Hg2 = H / hp, Wg2 = W / wp;
            const float* g = self->grad.data();
            float* dx = nx->grad.data();
            auto dst_index = [&](int t, int c, int y, int xx) {
                return ((static_cast<size_t>(t) * C + c) * H + y) * W + xx;
            };
            int tok = 0;
            for (int tg = 0; tg < Tg2; ++tg)
                for (int yg = 0; yg < Hg2; ++yg)
                    for (int xg = 0; xg < Wg2; ++xg, ++tok) {
                        const float* row = g + static_cast<size_t>(tok) * pv;
                        int idx = 0;
                        for (int c = 0; c < C; ++c)
                            for (int dt = 0; dt < tp; ++dt)
                                for (int dy = 0; dy < hp; ++dy)
                                    for (int dxp = 0; dxp < wp; ++dxp)
                                        dx[dst_index(tg * tp + dt, c, yg * hp + dy,
                                                     xg * wp + dxp)] += row[idx++];
                    }
        };
    }
    return node;
}

Value sum(const Value& x) {
    double acc = 0.0;
    const float* px = x->val.data();
    for (size_t i = 0, n = x->val.size(); i < n; ++i) acc += px[i];
    auto node = make_node(Tensor::scalar(static_cast<float>(acc)), {x}, "sum");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        node->backprop = [self, nx] {
            nx->ensure_grad();
            const float g = self->grad.at(0);
            float* dx = nx->grad.data();
            for (size_t i = 0, n = nx->grad.size(); i < n; ++i) dx[i] += g;
        };
    }
    return node;
}

Value mean(const Value& x) {
    const size_t n = x->val.size();
    if (n == 0) throw std::invalid_argument("mean: empty tensor");
    double acc = 0.0;
    const float* px = x->val.data();
    for (size_t i = 0; i < n; ++i) acc += px[i];
    auto node = make_node(Tensor::scalar(static_cast<float>(acc / static_cast<double>(n))), {x},
                          "mean");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* nx = x.get();
        node->backprop = [self, nx, n] {
            nx->ensure_grad();
            const float g = self->grad.at(0) / static_cast<float>(n);
            float* dx = nx->grad.data();
            for (size_t i = 0; i < n; ++i) dx[i] += g;
        };
    }
    return node;
}

Value mse(const Value& a, const Value& b) {
    check_same_shape(a, b, "mse");
    const size_t n = a->val.size();
    if (n == 0) throw std::invalid_argument("mse: empty tensor");
    double acc = 0.0;
    const float* pa = a->val.data();
    const float* pb = b->val.data();
    for (size_t i = 0; i < n; ++i) {
        double d = static_cast<double>(pa[i]) - pb[i];
        acc += d * d;
    }
    auto node = make_node(Tensor::scalar(static_cast<float>(acc / static_cast<double>(n))), {a, b},
                          "mse");
    if (node->requires_grad) {
        Node* self = node.get();
        Node* na = a.get();
        Node* nb = b.get();
        node->backprop = [self, na, nb, n] {
            const float g = self->grad.at(0) * 2.0f / static_cast<float>(n);
            const float* pa2 = na->val.data();
            const float* pb2 = nb->val.data();
            if (na->requires_grad) {
                na->ensure_grad();
                float* da = na->grad.data();
                for (size_t i = 0; i < n; ++i) da[i] += g * (pa2[i] - pb2[i]);
            }
            if (nb->requires_grad) {
                nb->ensure_grad();
                float* db = nb->grad.data();
                for (size_t i = 0; i < n; ++i) db[i] -= g * (pa2[i] - pb2[i]);
            }
        };
    }
    return node;
}

void backward(const Value& loss) {
    if (loss->val.size() != 1)
        throw NumericError("backward: loss must be a scalar, got " + loss->val.shape_str());
    if (!std::isfinite(loss->val.at(0)))
        throw NumericError("backward: non-finite loss");

    // iterative post-order over the requires-grad subgraph; discovery marking
    // guarantees a single visit per node on the (acyclic) graph
    std::vector<Node*> order;
    std::unordered_set<Node*> discovered;
    std::vector<std::pair<Node*, size_t>> stack;
    if (loss->requires_grad) {
        stack.emplace_back(loss.get(), 0);
        discovered.insert(loss.get());
    }
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->inputs.size()) {
            Node* child = node->inputs[idx++].get();
            if (child->requires_grad && !discovered.count(child)) {
                discovered.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->ensure_grad();
    loss->grad.at(0) = 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->has_grad) n->backprop();
    }
}

}  // namespace vanast
