// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vanast/training.hpp"

namespace vanast {

struct GenerationRequest {
    VideoTensor human;                  // single frame
    std::vector<VideoTensor> garments;  // 1..n; exactly 2 when interpolating
    PoseSequence pose;
    std::string prompt;
    int steps = 20;
    uint64_t seed = 0;
    float alpha = 0.5f;
    float beta = 0.5f;
    std::optional<float> gamma;

    void validate() const;
};

// Deterministic Euler integration of the learned velocity field from noise
// (t=0) to data (t=1), decoded through the latent codec's approximate
// inverse. Output has exactly pose.frames frames at the human image
// resolution.
VideoTensor generate(const GenerationRequest& req, const ParamSet& ps,
                     const BackboneConfig& cfg, const InjectionSchedule& sched,
                     Variant variant = Variant::DualModule);

// Identical loop, every step evaluated with the gamma-blended garment pair.
VideoTensor generate_interpolated(const GenerationRequest& req, const ParamSet& ps,
                                  const BackboneConfig& cfg, const InjectionSchedule& sched);

// emits the frame directory + index and the raw container next to it
void save_generation(const std::string& out_dir, const VideoTensor& video);

}  // namespace vanast
