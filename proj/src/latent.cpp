// SPDX-License-Identifier: Apache-2.0
#include "vanast/latent.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "vanast/common.hpp"

namespace vanast {

const LatentCodec& LatentCodec::instance() {
    static LatentCodec codec;
    return codec;
}

LatentCodec::LatentCodec() {
    constexpr int C = kChannels;
    constexpr int P = kPatchVec;
    constexpr int S = kSpatialStride;
    proj_.assign(static_cast<size_t>(C) * P, 0.0f);

    // rows 0..2: normalized per-channel patch means (entries 1/S over the
    // S*S positions of that channel)
    const float mean_entry = 1.0f / static_cast<float>(S);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < S * S; ++i)
            proj_[static_cast<size_t>(c) * P + c * S * S + i] = mean_entry;

    // rows 3..C-1: Gram-Schmidt orthonormal completion from a fixed seed
    Rng rng(derive_seed(0x76616e61u, "latent-codec"));
    for (int r = 3; r < C; ++r) {
        float* row = proj_.data() + static_cast<size_t>(r) * P;
        while (true) {
            for (int i = 0; i < P; ++i) row[i] = rng.normal();
            for (int q = 0; q < r; ++q) {
                const float* prev = proj_.data() + static_cast<size_t>(q) * P;
                double dot = 0.0;
                for (int i = 0; i < P; ++i) dot += static_cast<double>(row[i]) * prev[i];
                for (int i = 0; i < P; ++i) row[i] -= static_cast<float>(dot) * prev[i];
            }
            double norm2 = 0.0;
            for (int i = 0; i < P; ++i) norm2 += static_cast<double>(row[i]) * row[i];
            if (norm2 > 1e-3) {
                const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
                for (int i = 0; i < P; ++i) row[i] *= inv;
                break;
            }
        }
    }
}

LatentVolume LatentCodec::encode(const VideoTensor& v) const {
    if (!v.valid()) throw std::invalid_argument("encode_latent: empty video");
    if (v.height % kSpatialStride != 0 || v.width % kSpatialStride != 0)
        throw std::invalid_argument("encode_latent: extents not divisible by spatial stride");
    constexpr int S = kSpatialStride;
    const int h = v.height / S, w = v.width / S;
    LatentVolume z = LatentVolume::zeros(v.frames, kChannels, h, w);
    float patch[kPatchVec];
    for (int f = 0; f < v.frames; ++f)
        for (int py = 0; py < h; ++py)
            for (int px = 0; px < w; ++px) {
                int i = 0;
                for (int c = 0; c < 3; ++c)
                    for (int dy = 0; dy < S; ++dy)
                        for (int dx = 0; dx < S; ++dx)
                            patch[i++] = v.at(f, c, py * S + dy, px * S + dx);
                for (int c = 0; c < kChannels; ++c) {
                    const float* row = proj_.data() + static_cast<size_t>(c) * kPatchVec;
                    float acc = 0.0f;
                    for (int k = 0; k < kPatchVec; ++k) acc += row[k] * patch[k];
                    z.data.at(((static_cast<size_t>(f) * kChannels + c) * h + py) * w + px) = acc;
                }
            }
    return z;
}

VideoTensor LatentCodec::decode(const LatentVolume& z) const {
    if (z.channels != kChannels)
        throw std::invalid_argument("decode_latent: unexpected channel count");
    constexpr int S = kSpatialStride;
    VideoTensor v = VideoTensor::zeros(z.frames, z.height * S, z.width * S);
    float patch[kPatchVec];
    for (int f = 0; f < z.frames; ++f)
        for (int py = 0; py < z.height; ++py)
            for (int px = 0; px < z.width; ++px) {
                std::memset(patch, 0, sizeof(patch));
                for (int c = 0; c < kChannels; ++c) {
                    const float zc = z.at(f, c, py, px);
                    if (zc == 0.0f) continue;
                    const float* row = proj_.data() + static_cast<size_t>(c) * kPatchVec;
                    for (int k = 0; k < kPatchVec; ++k) patch[k] += zc * row[k];
                }
                int i = 0;
                for (int c = 0; c < 3; ++c)
                    for (int dy = 0; dy < S; ++dy)
                        for (int dx = 0; dx < S; ++dx)
                            v.set(f, c, py * S + dy, px * S + dx, patch[i++]);
            }
    return v;
}

LatentVolume encode_latent(const VideoTensor& v) { return LatentCodec::instance().encode(v); }
VideoTensor decode_latent(const LatentVolume& z) { return LatentCodec::instance().decode(z); }

LatentVolume build_ham_context(const LatentVolume& z_human, const LatentVolume& z_pose) {
    if (z_human.frames != 1)
        throw std::invalid_argument("build_ham_context: human latent must be single-frame");
    if (z_pose.frames > 0 && !z_human.spatial_match(z_pose))
        throw std::invalid_argument("build_ham_context: spatial/channel mismatch");
    LatentVolume out = LatentVolume::zeros(1 + z_pose.frames, z_human.channels, z_human.height,
                                           z_human.width);
    const size_t frame_elems =
        static_cast<size_t>(z_human.channels) * z_human.height * z_human.width;
    std::memcpy(out.data.data(), z_human.data.data(), sizeof(float) * frame_elems);
    if (z_pose.frames > 0)
        std::memcpy(out.data.data() + frame_elems, z_pose.data.data(),
                    sizeof(float) * frame_elems * static_cast<size_t>(z_pose.frames));
    return out;
}

LatentVolume build_gtm_context(const std::vector<LatentVolume>& z_garments, int target_frames) {
    if (z_garments.empty()) throw std::invalid_argument("build_gtm_context: no garments");
    if (static_cast<int>(z_garments.size()) > target_frames)
        throw std::invalid_argument("build_gtm_context: too many garments for target length");
    const LatentVolume& first = z_garments.front();
    for (const auto& g : z_garments) {
        if (g.frames != 1)
            throw std::invalid_argument("build_gtm_context: garment latents must be single-frame");
        if (!g.spatial_match(first))
            throw std::invalid_argument("build_gtm_context: garment extent mismatch");
    }
    LatentVolume out =
        LatentVolume::zeros(target_frames, first.channels, first.height, first.width);
    const size_t frame_elems = static_cast<size_t>(first.channels) * first.height * first.width;
    for (size_t i = 0; i < z_garments.size(); ++i)
        std::memcpy(out.data.data() + i * frame_elems, z_garments[i].data.data(),
                    sizeof(float) * frame_elems);
    return out;  // trailing frames remain exactly zero
}

}  // namespace vanast
