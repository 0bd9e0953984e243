// SPDX-License-Identifier: Apache-2.0
#include "vanast/pose.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "vanast/common.hpp"

namespace vanast {

PoseSequence PoseSequence::zeros(int frames) {
    PoseSequence p;
    p.frames = frames;
    p.kp.assign(static_cast<size_t>(frames) * kPoseJoints, Keypoint{});
    return p;
}

const std::vector<std::pair<int, int>>& pose_bones() {
    static const std::vector<std::pair<int, int>> bones = {
        {0, 1},  {0, 2},  {1, 3},   {2, 4},             // head
        {5, 6},  {5, 7},  {7, 9},   {6, 8},   {8, 10},  // arms
        {5, 11}, {6, 12}, {11, 12},                     // torso
        {11, 13}, {13, 15}, {12, 14}, {14, 16},         // legs
    };
    return bones;
}

namespace {

// one color per bone, cycling a small limb palette
const float kLimbColors[][3] = {
    {1.0f, 0.0f, 0.0f}, {1.0f, 0.33f, 0.0f}, {1.0f, 0.66f, 0.0f}, {1.0f, 1.0f, 0.0f},
    {0.66f, 1.0f, 0.0f}, {0.33f, 1.0f, 0.0f}, {0.0f, 1.0f, 0.0f}, {0.0f, 1.0f, 0.33f},
    {0.0f, 1.0f, 0.66f}, {0.0f, 1.0f, 1.0f}, {0.0f, 0.66f, 1.0f}, {0.0f, 0.33f, 1.0f},
    {0.0f, 0.0f, 1.0f}, {0.33f, 0.0f, 1.0f}, {0.66f, 0.0f, 1.0f}, {1.0f, 0.0f, 1.0f},
};

void put_pixel(VideoTensor& v, int f, int x, int y, const float* rgb) {
    if (x < 0 || x >= v.width || y < 0 || y >= v.height) return;
    for (int c = 0; c < 3; ++c) v.set(f, c, y, x, rgb[c]);
}

void draw_disc(VideoTensor& v, int f, int cx, int cy, const float* rgb) {
    // 3-pixel diameter
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            if (dx * dx + dy * dy <= 1) put_pixel(v, f, cx + dx, cy + dy, rgb);
}

void draw_line(VideoTensor& v, int f, int x0, int y0, int x1, int y1, const float* rgb) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        put_pixel(v, f, x0, y0, rgb);
        if (x0 == x1 && y0 == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace

VideoTensor rasterize_pose(const PoseSequence& pose, int height, int width,
                           float conf_threshold) {
    if (!pose.valid()) throw std::invalid_argument("rasterize_pose: invalid pose sequence");
    VideoTensor out = VideoTensor::zeros(pose.frames, height, width);
    auto px = [&](float nx) { return static_cast<int>(std::lround(nx * (width - 1))); };
    auto py = [&](float ny) { return static_cast<int>(std::lround(ny * (height - 1))); };
    const auto& bones = pose_bones();
    for (int f = 0; f < pose.frames; ++f) {
        for (size_t b = 0; b < bones.size(); ++b) {
            const Keypoint& a = pose.at(f, bones[b].first);
            const Keypoint& c = pose.at(f, bones[b].second);
            if (a.conf < conf_threshold || c.conf < conf_threshold) continue;
            draw_line(out, f, px(a.x), py(a.y), px(c.x), py(c.y),
                      kLimbColors[b % (sizeof(kLimbColors) / sizeof(kLimbColors[0]))]);
        }
        const float joint_color[3] = {1.0f, 1.0f, 1.0f};
        for (int j = 0; j < kPoseJoints; ++j) {
            const Keypoint& k = pose.at(f, j);
            if (k.conf < conf_threshold) continue;
            draw_disc(out, f, px(k.x), py(k.y), joint_color);
        }
    }
    return out;
}

void save_pose_json(const std::string& path, const PoseSequence& pose) {
    nlohmann::json j;
    j["joints"] = kPoseJoints;
    j["frames"] = pose.frames;
    nlohmann::json fr = nlohmann::json::array();
    for (int f = 0; f < pose.frames; ++f) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < kPoseJoints; ++k) {
            const Keypoint& kp = pose.at(f, k);
            row.push_back({kp.x, kp.y, kp.conf});
        }
        fr.push_back(row);
    }
    j["keypoints"] = fr;
    std::ofstream out(path);
    if (!out) throw ConfigError("save_pose_json: cannot open " + path);
    out << j.dump() << "\n";
}

PoseSequence load_pose_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_pose_json: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("joints").get<int>() != kPoseJoints)
        throw ConfigError("load_pose_json: unexpected joint count");
    PoseSequence pose = PoseSequence::zeros(j.at("frames").get<int>());
    const auto& fr = j.at("keypoints");
    if (static_cast<int>(fr.size()) != pose.frames)
        throw ConfigError("load_pose_json: frame count mismatch");
    for (int f = 0; f < pose.frames; ++f)
        for (int k = 0; k < kPoseJoints; ++k) {
            const auto& row = fr[static_cast<size_t>(f)][static_cast<size_t>(k)];
            pose.at(f, k) = {row[0].get<float>(), row[1].get<float>(), row[2].get<float>()};
        }
    return pose;
}

}  // namespace vanast
