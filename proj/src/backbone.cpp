// SPDX-License-Identifier: Apache-2.0
#include "vanast/backbone.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>

namespace vanast {

namespace {
constexpr float kInitStd = 0.08f;
constexpr float kOutProjStd = 0.02f;
constexpr float kHeadStd = 0.2f;
}  // namespace

void BackboneConfig::validate() const {
    if (num_blocks < 2 || num_blocks % 2 != 0)
        throw ConfigError("backbone: num_blocks must be even and >= 2");
    if (model_dim <= 0 || model_dim % num_heads != 0)
        throw ConfigError("backbone: model_dim must be divisible by num_heads");
    if (model_dim % 2 != 0) throw ConfigError("backbone: model_dim must be even");
    if (patch_t <= 0 || patch_h <= 0 || patch_w <= 0)
        throw ConfigError("backbone: patch extents must be positive");
    if (text_vocab < 1 || text_dim < 1) throw ConfigError("backbone: bad text config");
    if (latent_channels < 1) throw ConfigError("backbone: bad latent channel count");
}

TokenGrid token_grid_for(const LatentVolume& z, const BackboneConfig& cfg) {
    if (z.frames % cfg.patch_t != 0 || z.height % cfg.patch_h != 0 || z.width % cfg.patch_w != 0)
        throw std::invalid_argument("patchify: latent extents not divisible by patch extents");
    if (z.channels != cfg.latent_channels)
        throw std::invalid_argument("patchify: latent channel mismatch");
    return TokenGrid{z.frames / cfg.patch_t, z.height / cfg.patch_h, z.width / cfg.patch_w};
}

const std::vector<std::string>& default_text_vocab() {
    // id 0 is the null token
    static const std::vector<std::string> vocab = {
        "<null>",  "a",       "the",     "person",  "man",      "woman",  "wearing",
        "walking", "standing", "dancing", "turning", "moving",   "in",     "with",
        "and",     "red",     "green",   "blue",    "yellow",   "orange", "purple",
        "cyan",    "magenta", "white",   "black",   "gray",     "shirt",  "t-shirt",
        "dress",   "jacket",  "pants",   "skirt",   "hoodie",   "coat",   "top",
        "garment", "studio",  "outdoor", "indoor",  "plain",    "bright", "dark",
        "motion",  "video",   "fashion", "casual",  "background",
    };
    return vocab;
}

std::vector<int> encode_text(const std::string& prompt, const BackboneConfig& cfg) {
    static std::map<std::string, int> index = [] {
        std::map<std::string, int> m;
        const auto& vocab = default_text_vocab();
        for (size_t i = 0; i < vocab.size(); ++i) m[vocab[i]] = static_cast<int>(i);
        return m;
    }();
    std::vector<int> ids;
    for (const auto& word : split_ws(lowercase(prompt))) {
        auto it = index.find(word);
        int id = it == index.end() ? 0 : it->second;
        if (id >= cfg.text_vocab) id = 0;
        ids.push_back(id);
    }
    if (ids.empty()) ids.push_back(0);
    return ids;
}

namespace {

void add_linear(ParamSet& ps, const std::string& name, int fan_in, int fan_out, float stddev,
                Rng& rng) {
    ps.add(name + ".w", random_normal({fan_in, fan_out}, stddev, rng), false);
    ps.add(name + ".b", Tensor({fan_out}), false);
}

void add_block_params(ParamSet& ps, const std::string& prefix, const BackboneConfig& cfg,
                      Rng& rng) {
    const int D = cfg.model_dim;
    add_linear(ps, prefix + "attn.q", D, D, kInitStd, rng);
    add_linear(ps, prefix + "attn.k", D, D, kInitStd, rng);
    add_linear(ps, prefix + "attn.v", D, D, kInitStd, rng);
    add_linear(ps, prefix + "attn.o", D, D, kOutProjStd, rng);
    add_linear(ps, prefix + "xattn.q", D, D, kInitStd, rng);
    add_linear(ps, prefix + "xattn.k", cfg.text_dim, D, kInitStd, rng);
    add_linear(ps, prefix + "xattn.v", cfg.text_dim, D, kInitStd, rng);
    add_linear(ps, prefix + "xattn.o", D, D, kOutProjStd, rng);
    add_linear(ps, prefix + "mlp.fc1", D, 4 * D, kInitStd, rng);
    add_linear(ps, prefix + "mlp.fc2", 4 * D, D, kOutProjStd, rng);
    add_linear(ps, prefix + "mod", D, 6 * D, kOutProjStd, rng);
}

std::vector<std::string> block_linear_names(const std::string& prefix) {
    return {prefix + "attn.q",  prefix + "attn.k",  prefix + "attn.v",  prefix + "attn.o",
            prefix + "xattn.q", prefix + "xattn.k", prefix + "xattn.v", prefix + "xattn.o",
            prefix + "mlp.fc1", prefix + "mlp.fc2", prefix + "mod"};
}

}  // namespace

void init_backbone_params(ParamSet& ps, const BackboneConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(derive_seed(seed, "backbone-init"));
    const int D = cfg.model_dim;
    ps.add("backbone.text.embed", random_normal({cfg.text_vocab, cfg.text_dim}, kInitStd, rng),
           false);
    add_linear(ps, "backbone.tembed.fc1", D, D, kInitStd, rng);
    add_linear(ps, "backbone.tembed.fc2", D, D, kInitStd, rng);
    add_linear(ps, "backbone.patchify", cfg.patch_vec(), D, kInitStd, rng);
    for (int l = 0; l < cfg.num_blocks; ++l)
        add_block_params(ps, "backbone.blocks." + std::to_string(l) + ".", cfg, rng);
    add_linear(ps, "backbone.head.mod", D, 2 * D, kOutProjStd, rng);
    add_linear(ps, "backbone.head.out", D, cfg.patch_vec(), kHeadStd, rng);
}

std::vector<std::string> lora_adapted_layers(const BackboneConfig& cfg) {
    std::vector<std::string> out;
    for (int l = 0; l < cfg.num_blocks; ++l)
        for (auto& n : block_linear_names("backbone.blocks." + std::to_string(l) + "."))
            out.push_back(n);
    return out;
}

void init_lora_params(ParamSet& ps, const BackboneConfig& cfg, int rank, uint64_t seed) {
    if (rank < 1) throw ConfigError("lora: rank must be >= 1");
    Rng rng(derive_seed(seed, "lora-init"));
    for (const auto& layer : lora_adapted_layers(cfg)) {
        const auto& w = ps.get(layer + ".w")->val;
        const int fan_in = w.dim(0), fan_out = w.dim(1);
        ps.add("lora." + layer + ".a", random_normal({fan_in, rank}, 0.05f, rng), true);
        ps.add("lora." + layer + ".b", Tensor({rank, fan_out}), true);
    }
}

Value dense(const ParamSet& ps, const std::string& name, const Value& x, bool use_lora) {
    auto y = linear(x, ps.get(name + ".w"), ps.get(name + ".b"));
    if (use_lora && ps.has("lora." + name + ".a"))
        y = add(y, matmul(matmul(x, ps.get("lora." + name + ".a")),
                          ps.get("lora." + name + ".b")));
    return y;
}

Value timestep_embedding(float t, const ParamSet& ps, const BackboneConfig& cfg, bool use_lora) {
    const int D = cfg.model_dim;
    const int half = D / 2;
    Tensor feat({1, D});
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        const double arg = 1000.0 * static_cast<double>(t) * freq;
        feat.at(static_cast<size_t>(i)) = static_cast<float>(std::cos(arg));
        feat.at(static_cast<size_t>(half + i)) = static_cast<float>(std::sin(arg));
    }
    auto h = silu(dense(ps, "backbone.tembed.fc1", constant(feat), use_lora));
    return dense(ps, "backbone.tembed.fc2", h, use_lora);
}

Value text_features(const std::vector<int>& ids, const ParamSet& ps) {
    if (ids.empty()) throw std::invalid_argument("text_features: empty id list");
    return gather_rows(ps.get("backbone.text.embed"), ids);
}

Value patchify_tokens(const Tensor& latent, const ParamSet& ps, const BackboneConfig& cfg,
                      bool use_lora) {
    auto patches = gather_patches(constant(latent), cfg.patch_t, cfg.patch_h, cfg.patch_w);
    return dense(ps, "backbone.patchify", patches, use_lora);
}

Value backbone_block(const Value& h, const Value& text_feats, const Value& tvec,
                     const ParamSet& ps, const std::string& prefix, const BackboneConfig& cfg,
                     bool use_lora) {
    const int D = cfg.model_dim;
    if (h->val.ndim() != 2 || h->val.dim(1) != D)
        throw std::invalid_argument("backbone_block: hidden state width mismatch at " + prefix);
    auto m = dense(ps, prefix + "mod", silu(tvec), use_lora);
    auto shift1 = slice_cols(m, 0, D);
    auto scale1 = slice_cols(m, D, D);
    auto gate1 = slice_cols(m, 2 * D, D);
    auto shift2 = slice_cols(m, 3 * D, D);
    auto scale2 = slice_cols(m, 4 * D, D);
    auto gate2 = slice_cols(m, 5 * D, D);

    auto a_in = modulate(layer_norm(h), shift1, scale1);
    auto q = dense(ps, prefix + "attn.q", a_in, use_lora);
    auto k = dense(ps, prefix + "attn.k", a_in, use_lora);
    auto v = dense(ps, prefix + "attn.v", a_in, use_lora);
    auto attn_out = dense(ps, prefix + "attn.o", attention(q, k, v, cfg.num_heads), use_lora);
    auto h1 = add(h, colwise_mul(attn_out, gate1));

    auto c_in = layer_norm(h1);
    auto qc = dense(ps, prefix + "xattn.q", c_in, use_lora);
    auto kc = dense(ps, prefix + "xattn.k", text_feats, use_lora);
    auto vc = dense(ps, prefix + "xattn.v", text_feats, use_lora);
    auto x_out = dense(ps, prefix + "xattn.o", attention(qc, kc, vc, cfg.num_heads), use_lora);
    auto h2 = add(h1, x_out);

    auto m_in = modulate(layer_norm(h2), shift2, scale2);
    auto mlp_out = dense(ps, prefix + "mlp.fc2", silu(dense(ps, prefix + "mlp.fc1", m_in, use_lora)),
                         use_lora);
    return add(h2, colwise_mul(mlp_out, gate2));
}

Value head_tokens(const Value& h, const Value& tvec, const ParamSet& ps,
                  const BackboneConfig& cfg, bool use_lora) {
    const int D = cfg.model_dim;
    auto m = dense(ps, "backbone.head.mod", silu(tvec), use_lora);
    auto shift = slice_cols(m, 0, D);
    auto scl = slice_cols(m, D, D);
    auto x = modulate(layer_norm(h), shift, scl);
    return dense(ps, "backbone.head.out", x, use_lora);
}

Tensor unpatchify(const Tensor& tokens, const TokenGrid& grid, const BackboneConfig& cfg) {
    const int pv = cfg.patch_vec();
    if (tokens.ndim() != 2 || tokens.dim(0) != grid.count() || tokens.dim(1) != pv)
        throw std::invalid_argument("unpatchify: token shape mismatch");
    const int T = grid.t * cfg.patch_t, H = grid.h * cfg.patch_h, W = grid.w * cfg.patch_w;
    const int C = cfg.latent_channels;
    Tensor out({T, C, H, W});
    const float* pt = tokens.data();
    float* po = out.data();
    int tok = 0;
    for (int tg = 0; tg < grid.t; ++tg)
        for (int yg = 0; yg < grid.h; ++yg)
            for (int xg = 0; xg < grid.w; ++xg, ++tok) {
                const float* row = pt + static_cast<size_t>(tok) * pv;
                int idx = 0;
                for (int c = 0; c < C; ++c)
                    for (int dt = 0; dt < cfg.patch_t; ++dt)
                        for (int dy = 0; dy < cfg.patch_h; ++dy)
                            for (int dx = 0; dx < cfg.patch_w; ++dx)
                                po[((static_cast<size_t>(tg * cfg.patch_t + dt) * C + c) * H +
                                    yg * cfg.patch_h + dy) *
                                       W +
                                   xg * cfg.patch_w + dx] = row[idx++];
            }
    return out;
}

LatentVolume backbone_forward(const LatentVolume& noisy, float t,
                              const std::vector<int>& text_ids, const BackboneConfig& cfg,
                              const ParamSet& ps) {
    if (t < 0.0f || t > 1.0f) throw std::invalid_argument("backbone_forward: t outside [0,1]");
    TokenGrid grid = token_grid_for(noisy, cfg);
    auto tvec = timestep_embedding(t, ps, cfg);
    auto text = text_features(text_ids, ps);
    auto h = patchify_tokens(noisy.data, ps, cfg);
    for (int l = 0; l < cfg.num_blocks; ++l)
        h = backbone_block(h, text, tvec, ps, "backbone.blocks." + std::to_string(l) + ".", cfg);
    auto out_tokens = head_tokens(h, tvec, ps, cfg);
    LatentVolume out = noisy;
    out.data = unpatchify(out_tokens->val, grid, cfg);
    return out;
}

}  // namespace vanast
