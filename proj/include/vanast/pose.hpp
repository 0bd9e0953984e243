// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "vanast/video.hpp"

namespace vanast {

// COCO-17 keypoint layout (what 2-D keypoint estimators emit):
// 0 nose, 1 l-eye, 2 r-eye, 3 l-ear, 4 r-ear, 5 l-shoulder, 6 r-shoulder,
// 7 l-elbow, 8 r-elbow, 9 l-wrist, 10 r-wrist, 11 l-hip, 12 r-hip,
// 13 l-knee, 14 r-knee, 15 l-ankle, 16 r-ankle
constexpr int kPoseJoints = 17;

struct Keypoint {
    float x = 0.0f;  // normalized [0,1]
    float y = 0.0f;
    float conf = 0.0f;
};

struct PoseSequence {
    int frames = 0;
    std::vector<Keypoint> kp;  // frames * kPoseJoints

    static PoseSequence zeros(int frames);
    Keypoint& at(int f, int j) { return kp[static_cast<size_t>(f) * kPoseJoints + j]; }
    const Keypoint& at(int f, int j) const {
        return kp[static_cast<size_t>(f) * kPoseJoints + j];
    }
    bool valid() const {
        return frames >= 1 && kp.size() == static_cast<size_t>(frames) * kPoseJoints;
    }
};

// Deterministic skeleton rasterizer: joints as 3-pixel discs, bones as
// 1-pixel segments, limb-coded colors on black. Joints below the confidence
// threshold are skipped.
VideoTensor rasterize_pose(const PoseSequence& pose, int height, int width,
                           float conf_threshold = 0.05f);

void save_pose_json(const std::string& path, const PoseSequence& pose);
PoseSequence load_pose_json(const std::string& path);

const std::vector<std::pair<int, int>>& pose_bones();

}  // namespace vanast
