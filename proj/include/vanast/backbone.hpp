// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "vanast/latent.hpp"
#include "vanast/params.hpp"

namespace vanast {

// Toy text-to-video DiT. Weights are randomly initialized once, saved, and
// from then on treated as pretrained and frozen.
struct BackboneConfig {
    int num_blocks = 8;
    int model_dim = 64;
    int num_heads = 4;
    int patch_t = 1;
    int patch_h = 4;
    int patch_w = 4;
    int text_vocab = 64;
    int text_dim = 32;
    int latent_channels = 8;

    void validate() const;
    int patch_vec() const { return latent_channels * patch_t * patch_h * patch_w; }
    bool operator==(const BackboneConfig&) const = default;
};

struct TokenGrid {
    int t = 0, h = 0, w = 0;
    int count() const { return t * h * w; }
    bool operator==(const TokenGrid&) const = default;
};

TokenGrid token_grid_for(const LatentVolume& z, const BackboneConfig& cfg);

// whitespace tokenization over a small fixed vocabulary; id 0 is the learned
// null token (unknown words and the empty prompt map to it)
const std::vector<std::string>& default_text_vocab();
std::vector<int> encode_text(const std::string& prompt, const BackboneConfig& cfg);

// parameter construction -------------------------------------------------

// Adds all backbone parameters under "backbone." with trainable=false.
void init_backbone_params(ParamSet& ps, const BackboneConfig& cfg, uint64_t seed);

// Adds rank-r additive low-rank deltas ("lora.<layer>.{a,b}") for every
// linear layer of every block; b matrices start at zero.
void init_lora_params(ParamSet& ps, const BackboneConfig& cfg, int rank, uint64_t seed);
std::vector<std::string> lora_adapted_layers(const BackboneConfig& cfg);

// graph builders ----------------------------------------------------------

// linear layer <name>.w/<name>.b, optionally with its low-rank delta
Value dense(const ParamSet& ps, const std::string& name, const Value& x, bool use_lora = false);

Value timestep_embedding(float t, const ParamSet& ps, const BackboneConfig& cfg,
                         bool use_lora = false);
Value text_features(const std::vector<int>& ids, const ParamSet& ps);

Value patchify_tokens(const Tensor& latent, const ParamSet& ps, const BackboneConfig& cfg,
                      bool use_lora = false);

// residual DiT block: timestep-modulated self-attention, text cross-attention
// and MLP; grid is unchanged
Value backbone_block(const Value& h, const Value& text_feats, const Value& tvec,
                     const ParamSet& ps, const std::string& prefix, const BackboneConfig& cfg,
                     bool use_lora = false);

// final norm + modulation + projection back to patch vectors
Value head_tokens(const Value& h, const Value& tvec, const ParamSet& ps,
                  const BackboneConfig& cfg, bool use_lora = false);

Tensor unpatchify(const Tensor& tokens, const TokenGrid& grid, const BackboneConfig& cfg);

// full velocity prediction pass of the frozen backbone
LatentVolume backbone_forward(const LatentVolume& noisy, float t,
                              const std::vector<int>& text_ids, const BackboneConfig& cfg,
                              const ParamSet& ps);

}  // namespace vanast
