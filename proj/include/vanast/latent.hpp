// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "vanast/tensor.hpp"
#include "vanast/video.hpp"

namespace vanast {

struct LatentVolume {
    int frames = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    Tensor data;  // [frames, channels, height, width]

    static LatentVolume zeros(int f, int c, int h, int w) {
        LatentVolume z;
        z.frames = f;
        z.channels = c;
        z.height = h;
        z.width = w;
        z.data = Tensor({f, c, h, w});
        return z;
    }
    float at(int f, int c, int y, int x) const {
        return data.at(((static_cast<size_t>(f) * channels + c) * height + y) * width + x);
    }
    bool same_extents(const LatentVolume& o) const {
        return frames == o.frames && channels == o.channels && height == o.height &&
               width == o.width;
    }
    bool spatial_match(const LatentVolume& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// Deterministic, training-free latent codec standing in for a learned video
// VAE. Each 4x4 RGB patch is projected by a fixed matrix whose first three
// rows read the per-channel patch means and whose remaining rows are a random
// orthonormal completion, so decode(encode(x)) is exact on patch-constant
// content and bounded elsewhere.
class LatentCodec {
public:
    static constexpr int kSpatialStride = 4;
    static constexpr int kTemporalStride = 1;
    static constexpr int kChannels = 8;
    static constexpr int kPatchVec = 3 * kSpatialStride * kSpatialStride;

    static const LatentCodec& instance();

    LatentVolume encode(const VideoTensor& v) const;
    // approximate inverse (transpose of the projection); values unclamped
    VideoTensor decode(const LatentVolume& z) const;

    // row-major [kChannels x kPatchVec], exposed so tests can derive the
    // reconstruction bound from the actual matrix
    const std::vector<float>& projection() const { return proj_; }

private:
    LatentCodec();
    std::vector<float> proj_;
};

LatentVolume encode_latent(const VideoTensor& v);
VideoTensor decode_latent(const LatentVolume& z);

// HAM context: human latent (single frame) followed by the pose latent
// frames along the temporal axis.
LatentVolume build_ham_context(const LatentVolume& z_human, const LatentVolume& z_pose);

// GTM context: garment latents (single frame each) in order, zero placeholder
// frames appended to reach exactly target_frames.
LatentVolume build_gtm_context(const std::vector<LatentVolume>& z_garments, int target_frames);

}  // namespace vanast
