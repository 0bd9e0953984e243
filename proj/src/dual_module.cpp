// SPDX-License-Identifier: Apache-2.0
#include "vanast/dual_module.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace vanast {

InjectionSchedule InjectionSchedule::even_sites(int num_blocks) {
    InjectionSchedule s;
    for (int l = 0; l < num_blocks; l += 2) s.sites.push_back(l);
    return s;
}

void InjectionSchedule::validate(int num_blocks) const {
    if (sites.empty()) throw ConfigError("injection schedule: no sites");
    int prev = -1;
    for (int l : sites) {
        if (l % 2 != 0) throw ConfigError("injection schedule: site index must be even");
        if (l <= prev) throw ConfigError("injection schedule: sites must be strictly increasing");
        if (l >= num_blocks) throw ConfigError("injection schedule: site index beyond last block");
        prev = l;
    }
    if (!std::isfinite(alpha) || !std::isfinite(beta))
        throw ConfigError("injection schedule: non-finite strength scalar");
}

int InjectionSchedule::site_index(int l) const {
    for (size_t k = 0; k < sites.size(); ++k)
        if (sites[k] == l) return static_cast<int>(k);
    return -1;
}

namespace {

void copy_linear(ParamSet& ps, const std::string& src, const std::string& dst) {
    ps.add(dst + ".w", ps.get(src + ".w")->val.clone(), true);
    ps.add(dst + ".b", ps.get(src + ".b")->val.clone(), true);
}

}  // namespace

void init_adapter_params(ParamSet& ps, const std::string& prefix, const BackboneConfig& cfg,
                         const InjectionSchedule& sched) {
    sched.validate(cfg.num_blocks);
    const int D = cfg.model_dim;
    copy_linear(ps, "backbone.patchify", prefix + "proj_in");
    for (size_t k = 0; k < sched.sites.size(); ++k) {
        const std::string src = "backbone.blocks." + std::to_string(sched.sites[k]) + ".";
        const std::string dst = prefix + "blocks." + std::to_string(k) + ".";
        for (const char* layer : {"attn.q", "attn.k", "attn.v", "attn.o", "xattn.q", "xattn.k",
                                  "xattn.v", "xattn.o", "mlp.fc1", "mlp.fc2", "mod"})
            copy_linear(ps, src + layer, dst + layer);
        // residual projection starts at exactly zero
        ps.add(dst + "proj.w", Tensor({D, D}), true);
        ps.add(dst + "proj.b", Tensor({D}), true);
    }
}

void init_dual_module_params(ParamSet& ps, const BackboneConfig& cfg,
                             const InjectionSchedule& sched) {
    init_adapter_params(ps, "ham.", cfg, sched);
    init_adapter_params(ps, "gtm.", cfg, sched);
}

Value project_context(const LatentVolume& ctx, const ParamSet& ps,
                      const std::string& adapter_prefix, const BackboneConfig& cfg) {
    token_grid_for(ctx, cfg);  // validates divisibility
    auto patches = gather_patches(constant(ctx.data), cfg.patch_t, cfg.patch_h, cfg.patch_w);
    return dense(ps, adapter_prefix + "proj_in", patches);
}

std::pair<Value, Value> adapter_block(const Value& main_h, const Value& ctx_state,
                                      const Value& text_feats, const Value& tvec,
                                      const ParamSet& ps, const std::string& block_prefix,
                                      const BackboneConfig& cfg) {
    if (main_h->val.dim(1) != ctx_state->val.dim(1))
        throw std::invalid_argument("adapter_block: token width mismatch");
    const int n_ctx = ctx_state->val.dim(0);
    const int n_main = main_h->val.dim(0);
    auto joint = concat_rows(ctx_state, main_h);
    auto processed = backbone_block(joint, text_feats, tvec, ps, block_prefix, cfg);
    auto new_ctx = slice_rows(processed, 0, n_ctx);
    auto aligned = slice_rows(processed, n_ctx, n_main);
    auto residual = dense(ps, block_prefix + "proj", aligned);
    return {residual, new_ctx};
}

namespace {

struct AdapterStream {
    std::string prefix;
    Value ctx;
};

// The residual addition: during training the graph keeps every term so
// gradients reach zero-initialized projections; at inference, adding an
// exact-zero residual (or a zero coefficient) is skipped, which keeps the
// degenerate cases bitwise equal to the plain backbone path.
Value add_residual(const Value& h, float coeff, const Value& residual, bool train) {
    if (!train && (coeff == 0.0f || residual->val.all_zero())) return h;
    return add_scaled(h, coeff, residual);
}

struct InjectedPass {
    const BackboneConfig& cfg;
    const ParamSet& ps;
    const InjectionSchedule& sched;
    bool train;

    // combine(out, site residuals per stream) applies the injection equation
    Value run(const LatentVolume& x, float t, const std::vector<int>& text_ids,
              std::vector<AdapterStream>& streams,
              const std::vector<const LatentVolume*>& ctx_volumes,
              const std::function<Value(Value, const std::vector<Value>&)>& combine) {
        if (t < 0.0f || t > 1.0f)
            throw std::invalid_argument("forward: t outside [0,1]");
        sched.validate(cfg.num_blocks);
        token_grid_for(x, cfg);
        auto tvec = timestep_embedding(t, ps, cfg);
        auto text = text_features(text_ids, ps);
        for (size_t s = 0; s < streams.size(); ++s)
            streams[s].ctx = project_context(*ctx_volumes[s], ps, streams[s].prefix, cfg);
        auto h = patchify_tokens(x.data, ps, cfg);
        std::vector<Value> residuals(streams.size());
        for (int l = 0; l < cfg.num_blocks; ++l) {
            auto out = backbone_block(h, text, tvec, ps,
                                      "backbone.blocks." + std::to_string(l) + ".", cfg);
            const int k = sched.site_index(l);
            if (k >= 0) {
                for (size_t s = 0; s < streams.size(); ++s) {
                    auto [residual, new_ctx] = adapter_block(
                        h, streams[s].ctx, text, tvec, ps,
                        streams[s].prefix + "blocks." + std::to_string(k) + ".", cfg);
                    streams[s].ctx = new_ctx;
                    residuals[s] = residual;
                }
                out = combine(out, residuals);
            }
            h = out;
        }
        return head_tokens(h, tvec, ps, cfg);
    }
};

}  // namespace

Value forward_injected_tokens(const LatentVolume& x, float t, const std::vector<int>& text_ids,
                              const LatentVolume& ham_ctx, const LatentVolume& gtm_ctx,
                              const InjectionSchedule& sched, const BackboneConfig& cfg,
                              const ParamSet& ps, bool train) {
    std::vector<AdapterStream> streams = {{"ham.", nullptr}, {"gtm.", nullptr}};
    InjectedPass pass{cfg, ps, sched, train};
    auto combine = [&sched, train](Value out, const std::vector<Value>& res) {
        out = add_residual(out, sched.alpha, res[0], train);
        return add_residual(out, sched.beta, res[1], train);
    };
    return pass.run(x, t, text_ids, streams, {&ham_ctx, &gtm_ctx}, combine);
}

LatentVolume forward_injected(const LatentVolume& x, float t, const std::vector<int>& text_ids,
                              const LatentVolume& ham_ctx, const LatentVolume& gtm_ctx,
                              const InjectionSchedule& sched, const BackboneConfig& cfg,
                              const ParamSet& ps, bool train) {
    auto tokens =
        forward_injected_tokens(x, t, text_ids, ham_ctx, gtm_ctx, sched, cfg, ps, train);
    LatentVolume out = x;
    out.data = unpatchify(tokens->val, token_grid_for(x, cfg), cfg);
    return out;
}

Value forward_interpolated_tokens(const LatentVolume& x, float t,
                                  const std::vector<int>& text_ids, const LatentVolume& ham_ctx,
                                  const LatentVolume& gtm_ctx_a, const LatentVolume& gtm_ctx_b,
                                  float gamma, const InjectionSchedule& sched,
                                  const BackboneConfig& cfg, const ParamSet& ps, bool train) {
    if (gamma < 0.0f || gamma > 1.0f)
        throw std::invalid_argument("forward_interpolated: gamma outside [0,1]");
    std::vector<AdapterStream> streams = {{"ham.", nullptr}, {"gtm.", nullptr}, {"gtm.", nullptr}};
    InjectedPass pass{cfg, ps, sched, train};
    // the two garment residuals are blended elementwise before a single
    // addition, so identical streams collapse exactly and the endpoints
    // reduce to the plain injected pass
    auto combine = [&sched, gamma, train](Value out, const std::vector<Value>& res) {
        out = add_residual(out, sched.alpha, res[0], train);
        if (!train && gamma == 1.0f) return add_residual(out, 1.0f, res[1], train);
        if (!train && gamma == 0.0f) return add_residual(out, 1.0f, res[2], train);
        return add_residual(out, 1.0f, lerp(res[1], res[2], gamma), train);
    };
    return pass.run(x, t, text_ids, streams, {&ham_ctx, &gtm_ctx_a, &gtm_ctx_b}, combine);
}

LatentVolume forward_interpolated(const LatentVolume& x, float t,
                                  const std::vector<int>& text_ids, const LatentVolume& ham_ctx,
                                  const LatentVolume& gtm_ctx_a, const LatentVolume& gtm_ctx_b,
                                  float gamma, const InjectionSchedule& sched,
                                  const BackboneConfig& cfg, const ParamSet& ps, bool train) {
    auto tokens = forward_interpolated_tokens(x, t, text_ids, ham_ctx, gtm_ctx_a, gtm_ctx_b,
                                              gamma, sched, cfg, ps, train);
    LatentVolume out = x;
    out.data = unpatchify(tokens->val, token_grid_for(x, cfg), cfg);
    return out;
}

Value forward_single_module_tokens(const LatentVolume& x, float t,
                                   const std::vector<int>& text_ids,
                                   const LatentVolume& ham_ctx, const LatentVolume& gtm_ctx,
                                   const InjectionSchedule& sched, const BackboneConfig& cfg,
                                   const ParamSet& ps, bool train) {
    if (t < 0.0f || t > 1.0f) throw std::invalid_argument("forward: t outside [0,1]");
    sched.validate(cfg.num_blocks);
    token_grid_for(x, cfg);
    auto tvec = timestep_embedding(t, ps, cfg);
    auto text = text_features(text_ids, ps);
    auto ctx = concat_rows(project_context(ham_ctx, ps, "single.", cfg),
                           project_context(gtm_ctx, ps, "single.", cfg));
    auto h = patchify_tokens(x.data, ps, cfg);
    for (int l = 0; l < cfg.num_blocks; ++l) {
        auto out =
            backbone_block(h, text, tvec, ps, "backbone.blocks." + std::to_string(l) + ".", cfg);
        const int k = sched.site_index(l);
        if (k >= 0) {
            auto [residual, new_ctx] = adapter_block(
                h, ctx, text, tvec, ps, "single.blocks." + std::to_string(k) + ".", cfg);
            ctx = new_ctx;
            out = add_residual(out, 1.0f, residual, train);
        }
        h = out;
    }
    return head_tokens(h, tvec, ps, cfg);
}

Value forward_backbone_lora_tokens(const LatentVolume& x, float t,
                                   const std::vector<int>& text_ids,
                                   const LatentVolume& ham_ctx, const LatentVolume& gtm_ctx,
                                   const BackboneConfig& cfg, const ParamSet& ps) {
    if (t < 0.0f || t > 1.0f) throw std::invalid_argument("forward: t outside [0,1]");
    TokenGrid grid = token_grid_for(x, cfg);
    auto tvec = timestep_embedding(t, ps, cfg, true);
    auto text = text_features(text_ids, ps);
    auto cond = concat_rows(patchify_tokens(ham_ctx.data, ps, cfg, true),
                            patchify_tokens(gtm_ctx.data, ps, cfg, true));
    auto h = concat_rows(cond, patchify_tokens(x.data, ps, cfg, true));
    for (int l = 0; l < cfg.num_blocks; ++l)
        h = backbone_block(h, text, tvec, ps, "backbone.blocks." + std::to_string(l) + ".", cfg,
                           true);
    const int n_cond = cond->val.dim(0);
    auto main_only = slice_rows(h, n_cond, grid.count());
    return head_tokens(main_only, tvec, ps, cfg, true);
}

}  // namespace vanast
