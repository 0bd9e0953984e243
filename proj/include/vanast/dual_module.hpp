// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vanast/backbone.hpp"

namespace vanast {

// Where adapter residuals enter the frozen backbone: block indices l = 2k,
// one adapter block per site, with global strength scalars.
struct InjectionSchedule {
    std::vector<int> sites;
    float alpha = 0.5f;
    float beta = 0.5f;

    static InjectionSchedule even_sites(int num_blocks);
    void validate(int num_blocks) const;
    // returns the site index k when l is an injection site, -1 otherwise
    int site_index(int l) const;
};

// Adapter stacks (HAM / GTM / the single-module ablation stack) share the
// backbone block architecture. Each block keeps a persistent context token
// stream, attends jointly over [ctx || main], and emits a residual through a
// zero-initialized projection, so a freshly initialized adapter leaves the
// backbone untouched.
void init_adapter_params(ParamSet& ps, const std::string& prefix, const BackboneConfig& cfg,
                         const InjectionSchedule& sched);
void init_dual_module_params(ParamSet& ps, const BackboneConfig& cfg,
                             const InjectionSchedule& sched);

// 3-D conv projection (kernel == stride == patch) from a context latent
// volume to the adapter's token stream.
Value project_context(const LatentVolume& ctx, const ParamSet& ps,
                      const std::string& adapter_prefix, const BackboneConfig& cfg);

// One adapter block step: returns (residual on main-token positions, advanced
// context stream).
std::pair<Value, Value> adapter_block(const Value& main_h, const Value& ctx_state,
                                      const Value& text_feats, const Value& tvec,
                                      const ParamSet& ps, const std::string& block_prefix,
                                      const BackboneConfig& cfg);

// Eq.-2-style injected forward pass. `train` keeps zero residual additions in
// the graph so gradients reach the adapter projections; inference mode skips
// exact-zero additions, making the zero-adapter path bitwise identical to the
// plain backbone.
Value forward_injected_tokens(const LatentVolume& x, float t, const std::vector<int>& text_ids,
                              const LatentVolume& ham_ctx, const LatentVolume& gtm_ctx,
                              const InjectionSchedule& sched, const BackboneConfig& cfg,
                              const ParamSet& ps, bool train);
LatentVolume forward_injected(const LatentVolume& x, float t, const std::vector<int>& text_ids,
                              const LatentVolume& ham_ctx, const LatentVolume& gtm_ctx,
                              const InjectionSchedule& sched, const BackboneConfig& cfg,
                              const ParamSet& ps, bool train = false);

// Zero-shot garment interpolation: two independent GTM context cascades
// sharing GTM parameters, blended by gamma at every site.
Value forward_interpolated_tokens(const LatentVolume& x, float t,
                                  const std::vector<int>& text_ids, const LatentVolume& ham_ctx,
                                  const LatentVolume& gtm_ctx_a, const LatentVolume& gtm_ctx_b,
                                  float gamma, const InjectionSchedule& sched,
                                  const BackboneConfig& cfg, const ParamSet& ps, bool train);
LatentVolume forward_interpolated(const LatentVolume& x, float t,
                                  const std::vector<int>& text_ids, const LatentVolume& ham_ctx,
                                  const LatentVolume& gtm_ctx_a, const LatentVolume& gtm_ctx_b,
                                  float gamma, const InjectionSchedule& sched,
                                  const BackboneConfig& cfg, const ParamSet& ps,
                                  bool train = false);

// Ablation forwards -------------------------------------------------------

// single trainable stack fed the concatenated [HAM ctx || GTM ctx] stream
Value forward_single_module_tokens(const LatentVolume& x, float t,
                                   const std::vector<int>& text_ids,
                                   const LatentVolume& ham_ctx, const LatentVolume& gtm_ctx,
                                   const InjectionSchedule& sched, const BackboneConfig& cfg,
                                   const ParamSet& ps, bool train);

// no adapters: condition tokens concatenated to the backbone input sequence,
// low-rank deltas on every block linear; the head reads only the main tokens
Value forward_backbone_lora_tokens(const LatentVolume& x, float t,
                                   const std::vector<int>& text_ids,
                                   const LatentVolume& ham_ctx, const LatentVolume& gtm_ctx,
                                   const BackboneConfig& cfg, const ParamSet& ps);

}  // namespace vanast
