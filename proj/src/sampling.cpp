// SPDX-License-Identifier: Apache-2.0
#include "vanast/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace vanast {

void GenerationRequest::validate() const {
    if (human.frames != 1) throw ConfigError("generate: human input must be a single frame");
    if (garments.empty()) throw ConfigError("generate: at least one garment required");
    if (pose.frames < 1) throw ConfigError("generate: pose sequence required");
    if (steps < 1) throw ConfigError("generate: steps must be >= 1");
    if (gamma) {
        if (garments.size() != 2)
            throw ConfigError("generate: interpolation requires exactly two garments");
        if (*gamma < 0.0f || *gamma > 1.0f)
            throw ConfigError("generate: gamma outside [0,1]");
    }
    if (static_cast<int>(garments.size()) > pose.frames + 1)
        throw ConfigError("generate: too many garments for the context length");
    for (const auto& g : garments)
        if (g.height != human.height || g.width != human.width)
            throw ConfigError("generate: garment extents must match the human image");
}

namespace {

struct PreparedRequest {
    LatentVolume ham_ctx;
    std::vector<LatentVolume> garment_latents;
    std::vector<int> text_ids;
    int latent_frames = 0;
    int latent_h = 0;
    int latent_w = 0;
};

PreparedRequest prepare(const GenerationRequest& req, const BackboneConfig& cfg) {
    req.validate();
    PreparedRequest p;
    LatentVolume z_h = encode_latent(req.human);
    VideoTensor pose_render = rasterize_pose(req.pose, req.human.height, req.human.width);
    LatentVolume z_p = encode_latent(pose_render);
    p.ham_ctx = build_ham_context(z_h, z_p);
    for (const auto& g : req.garments) p.garment_latents.push_back(encode_latent(g));
    p.text_ids = encode_text(req.prompt, cfg);
    p.latent_frames = req.pose.frames;
    p.latent_h = z_h.height;
    p.latent_w = z_h.width;
    return p;
}

LatentVolume seeded_noise_latent(int f, int c, int h, int w, uint64_t seed) {
    Rng rng(derive_seed(seed, "generation-noise"));
    LatentVolume z = LatentVolume::zeros(f, c, h, w);
    for (size_t i = 0; i < z.data.size(); ++i) z.data.at(i) = rng.normal();
    return z;
}

VideoTensor euler_sample(const GenerationRequest& req, const BackboneConfig& cfg,
                         const std::function<LatentVolume(const LatentVolume&, float)>& velocity) {
    PreparedRequest p = prepare(req, cfg);
    LatentVolume x = seeded_noise_latent(p.latent_frames, cfg.latent_channels, p.latent_h,
                                         p.latent_w, req.seed);
    const float dt = 1.0f / static_cast<float>(req.steps);
    for (int i = 0; i < req.steps; ++i) {
        const float t = static_cast<float>(i) / static_cast<float>(req.steps);
        LatentVolume v = velocity(x, t);
        for (size_t j = 0; j < x.data.size(); ++j) x.data.at(j) += dt * v.data.at(j);
        if (!x.data.all_finite())
            throw NumericError("generate: non-finite latent at step " + std::to_string(i));
    }
    VideoTensor out = decode_latent(x);
    for (size_t j = 0; j < out.data.size(); ++j)
        out.data.at(j) = std::clamp(out.data.at(j), 0.0f, 1.0f);
    return out;
}

}  // namespace

VideoTensor generate(const GenerationRequest& req, const ParamSet& ps,
                     const BackboneConfig& cfg, const InjectionSchedule& sched,
                     Variant variant) {
    if (req.gamma) return generate_interpolated(req, ps, cfg, sched);
    PreparedRequest p = prepare(req, cfg);
    InjectionSchedule s = sched;
    s.alpha = req.alpha;
    s.beta = req.beta;
    LatentVolume gtm_ctx = build_gtm_context(p.garment_latents, p.ham_ctx.frames);
    EncodedSample es;  // reused by the variant dispatcher
    es.ham_ctx = p.ham_ctx;
    es.gtm_ctx = gtm_ctx;
    es.text_ids = p.text_ids;
    return euler_sample(req, cfg, [&](const LatentVolume& x, float t) {
        auto tokens = predict_velocity_tokens(variant, x, t, es, s, cfg, ps, /*train=*/false);
        LatentVolume v = x;
        v.data = unpatchify(tokens->val, token_grid_for(x, cfg), cfg);
        return v;
    });
}

VideoTensor generate_interpolated(const GenerationRequest& req, const ParamSet& ps,
                                  const BackboneConfig& cfg, const InjectionSchedule& sched) {
    if (!req.gamma) throw ConfigError("generate_interpolated: gamma required");
    PreparedRequest p = prepare(req, cfg);
    InjectionSchedule s = sched;
    s.alpha = req.alpha;
    s.beta = 1.0f;  // the gamma blend carries the garment strength
    LatentVolume ctx_a = build_gtm_context({p.garment_latents[0]}, p.ham_ctx.frames);
    LatentVolume ctx_b = build_gtm_context({p.garment_latents[1]}, p.ham_ctx.frames);
    const float gamma = *req.gamma;
    return euler_sample(req, cfg, [&](const LatentVolume& x, float t) {
        return forward_interpolated(x, t, p.text_ids, p.ham_ctx, ctx_a, ctx_b, gamma, s, cfg,
                                    ps);
    });
}

void save_generation(const std::string& out_dir, const VideoTensor& video) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    save_video_dir(out_dir, video);
    save_video_raw((fs::path(out_dir) / "video.vvid").string(), video);
}

}  // namespace vanast
