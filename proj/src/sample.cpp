// SPDX-License-Identifier: Apache-2.0
#include "vanast/sample.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vanast/common.hpp"

namespace fs = std::filesystem;

namespace vanast {

void TripletSample::validate() const {
    if (human.frames != 1) throw ConfigError("triplet: human image must be a single frame");
    if (garments.empty()) throw ConfigError("triplet: garment list must be non-empty");
    if (!truth.valid()) throw ConfigError("triplet: missing truth video");
    if (pose.frames != truth.frames)
        throw ConfigError("triplet: pose frame count must match truth video");
}

std::string SampleRecord::to_json_line() const {
    nlohmann::json j;
    j["id"] = id;
    j["mode"] = mode;
    j["paths"] = {{"human", human_path},
                  {"garments", garment_paths},
                  {"pose", pose_path},
                  {"truth", truth_path}};
    j["prompt"] = prompt;
    j["provenance"] = provenance;
    if (rejected) {
        j["rejected"] = true;
        j["reason"] = reason;
    }
    return j.dump();
}

SampleRecord SampleRecord::from_json_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    SampleRecord r;
    r.id = j.at("id").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    const auto& p = j.at("paths");
    r.human_path = p.at("human").get<std::string>();
    r.garment_paths = p.at("garments").get<std::vector<std::string>>();
    r.pose_path = p.at("pose").get<std::string>();
    r.truth_path = p.at("truth").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.provenance = j.at("provenance").get<std::string>();
    r.rejected = j.value("rejected", false);
    r.reason = j.value("reason", std::string());
    return r;
}

std::vector<SampleRecord> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("read_manifest: cannot open " + path);
    std::vector<SampleRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(SampleRecord::from_json_line(line));
    }
    return out;
}

void write_manifest(const std::string& path, const std::vector<SampleRecord>& records) {
    std::ofstream f(path);
    if (!f) throw ConfigError("write_manifest: cannot open " + path);
    for (const auto& r : records) f << r.to_json_line() << "\n";
}

TripletSample load_sample(const SampleRecord& rec, const std::string& base_dir) {
    if (rec.rejected) throw ConfigError("load_sample: record is rejected: " + rec.id);
    auto full = [&](const std::string& rel) { return (fs::path(base_dir) / rel).string(); };
    TripletSample s;
    s.human = load_video_any(full(rec.human_path));
    for (const auto& g : rec.garment_paths) s.garments.push_back(load_video_any(full(g)));
    s.pose = load_pose_json(full(rec.pose_path));
    s.truth = load_video_any(full(rec.truth_path));
    s.prompt = rec.prompt;
    s.provenance = rec.provenance;
    s.validate();
    return s;
}

TripletSample substitute_human_with_truth_frame(TripletSample sample, int frame_index) {
    sample.human = sample.truth.frame(frame_index);
    return sample;
}

}  // namespace vanast
