// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "vanast/pose.hpp"
#include "vanast/video.hpp"

namespace vanast {

// One training/eval unit: human image in an alternate outfit, garment images,
// pose sequence, prompt, and the ground-truth motion video.
struct TripletSample {
    VideoTensor human;  // single frame
    std::vector<VideoTensor> garments;
    PoseSequence pose;
    std::string prompt;
    VideoTensor truth;
    std::string provenance;  // internet | captured | in-the-wild | synthetic-toy

    void validate() const;
};

// Line-delimited manifest record; media referenced by path relative to the
// manifest directory.
struct SampleRecord {
    std::string id;
    std::string mode;
    std::string human_path;
    std::vector<std::string> garment_paths;
    std::string pose_path;
    std::string truth_path;
    std::string prompt;
    std::string provenance;
    bool rejected = false;
    std::string reason;

    std::string to_json_line() const;
    static SampleRecord from_json_line(const std::string& line);
};

std::vector<SampleRecord> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<SampleRecord>& records);

TripletSample load_sample(const SampleRecord& rec, const std::string& base_dir);

// the w/o-SynthHuman loader substitution: the human image becomes a raw
// truth-video frame
TripletSample substitute_human_with_truth_frame(TripletSample sample, int frame_index = 0);

}  // namespace vanast
