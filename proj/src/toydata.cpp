// SPDX-License-Identifier: Apache-2.0
#include "vanast/toydata.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vanast/common.hpp"

namespace fs = std::filesystem;

namespace vanast {

namespace {

constexpr float u8f(int v) { return static_cast<float>(v) / 255.0f; }

const std::array<std::array<float, 3>, 8> kPalette = {{
    {u8f(220), u8f(30), u8f(30)},    // red
    {u8f(30), u8f(200), u8f(60)},    // green
    {u8f(40), u8f(60), u8f(220)},    // blue
    {u8f(230), u8f(220), u8f(40)},   // yellow
    {u8f(210), u8f(40), u8f(200)},   // magenta
    {u8f(40), u8f(210), u8f(210)},   // cyan
    {u8f(240), u8f(140), u8f(30)},   // orange
    {u8f(130), u8f(40), u8f(210)},   // purple
}};

const char* kColorNames[8] = {"red",     "green", "blue",   "yellow",
                              "magenta", "cyan",  "orange", "purple"};

const float kBackground[3] = {u8f(30), u8f(30), u8f(30)};
const float kSkin[3] = {u8f(220), u8f(180), u8f(140)};
const float kLegs[3] = {u8f(50), u8f(50), u8f(80)};
// every human image wears the same neutral garment, so the garment stream is
// the only source of the output garment color
const float kWornNeutral[3] = {u8f(128), u8f(128), u8f(128)};

// normalized torso rectangle shared by every figure
constexpr float kTorsoX0 = 0.36f, kTorsoX1 = 0.64f;
constexpr float kTorsoY0 = 0.30f, kTorsoY1 = 0.56f;

struct FigurePose {
    PoseSequence seq;
};

// one fixed motion: arms swing, slight head bob
PoseSequence make_motion(int frames) {
    PoseSequence p = PoseSequence::zeros(frames);
    for (int f = 0; f < frames; ++f) {
        const float phase = 2.0f * static_cast<float>(M_PI) * f / std::max(1, frames);
        const float swing = 0.06f * std::sin(phase);
        const float bob = 0.01f * std::cos(phase);
        auto set = [&](int j, float x, float y) { p.at(f, j) = {x, y, 1.0f}; };
        set(0, 0.50f, 0.16f + bob);            // nose
        set(1, 0.47f, 0.14f + bob);            // eyes
        set(2, 0.53f, 0.14f + bob);
        set(3, 0.44f, 0.16f + bob);            // ears
        set(4, 0.56f, 0.16f + bob);
        set(5, 0.38f, 0.31f);                  // shoulders
        set(6, 0.62f, 0.31f);
        set(7, 0.33f, 0.43f + swing * 0.3f);   // elbows
        set(8, 0.67f, 0.43f - swing * 0.3f);
        set(9, 0.30f + swing, 0.55f);          // wrists
        set(10, 0.70f - swing, 0.55f);
        set(11, 0.42f, 0.55f);                 // hips
        set(12, 0.58f, 0.55f);
        set(13, 0.41f, 0.72f);                 // knees
        set(14, 0.59f, 0.72f);
        set(15, 0.40f, 0.90f);                 // ankles
        set(16, 0.60f, 0.90f);
    }
    return p;
}

void fill_bg(VideoTensor& v, int f) {
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < v.height; ++y)
            for (int x = 0; x < v.width; ++x) v.set(f, c, y, x, kBackground[c]);
}

void draw_thick_segment(VideoTensor& v, int f, float nx0, float ny0, float nx1, float ny1,
                        const float* rgb) {
    const int steps = 2 * std::max(v.width, v.height);
    for (int i = 0; i <= steps; ++i) {
        float u = static_cast<float>(i) / steps;
        int x = static_cast<int>(std::lround((nx0 + (nx1 - nx0) * u) * (v.width - 1)));
        int y = static_cast<int>(std::lround((ny0 + (ny1 - ny0) * u) * (v.height - 1)));
        for (int dy = 0; dy <= 0; ++dy)
            for (int dx = 0; dx <= 0; ++dx) {
                int px = x + dx, py = y + dy;
                if (px < 0 || px >= v.width || py < 0 || py >= v.height) continue;
                for (int c = 0; c < 3; ++c) v.set(f, c, py, px, rgb[c]);
            }
    }
}

void draw_disc_n(VideoTensor& v, int f, float nx, float ny, float nr, const float* rgb) {
    int cx = static_cast<int>(std::lround(nx * (v.width - 1)));
    int cy = static_cast<int>(std::lround(ny * (v.height - 1)));
    int r = std::max(1, static_cast<int>(std::lround(nr * v.width)));
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            if (dx * dx + dy * dy > r * r) continue;
            int px = cx + dx, py = cy + dy;
            if (px < 0 || px >= v.width || py < 0 || py >= v.height) continue;
            for (int c = 0; c < 3; ++c) v.set(f, c, py, px, rgb[c]);
        }
}

BBoxI torso_rect(int size) {
    return BBoxI{static_cast<int>(std::lround(kTorsoX0 * (size - 1))),
                 static_cast<int>(std::lround(kTorsoY0 * (size - 1))),
                 static_cast<int>(std::lround(kTorsoX1 * (size - 1))) + 1,
                 static_cast<int>(std::lround(kTorsoY1 * (size - 1))) + 1};
}

void draw_figure(VideoTensor& v, int f, const PoseSequence& pose, int pose_frame,
                 const float* garment_rgb) {
    fill_bg(v, f);
    auto kp = [&](int j) { return pose.at(pose_frame, j); };
    // legs
    draw_thick_segment(v, f, kp(11).x, kp(11).y, kp(13).x, kp(13).y, kLegs);
    draw_thick_segment(v, f, kp(13).x, kp(13).y, kp(15).x, kp(15).y, kLegs);
    draw_thick_segment(v, f, kp(12).x, kp(12).y, kp(14).x, kp(14).y, kLegs);
    draw_thick_segment(v, f, kp(14).x, kp(14).y, kp(16).x, kp(16).y, kLegs);
    // arms
    draw_thick_segment(v, f, kp(5).x, kp(5).y, kp(7).x, kp(7).y, kSkin);
    draw_thick_segment(v, f, kp(7).x, kp(7).y, kp(9).x, kp(9).y, kSkin);
    draw_thick_segment(v, f, kp(6).x, kp(6).y, kp(8).x, kp(8).y, kSkin);
    draw_thick_segment(v, f, kp(8).x, kp(8).y, kp(10).x, kp(10).y, kSkin);
    // torso block in the garment color
    BBoxI t = torso_rect(v.width);
    for (int y = t.y0; y < t.y1; ++y)
        for (int x = t.x0; x < t.x1; ++x)
            for (int c = 0; c < 3; ++c) v.set(f, c, y, x, garment_rgb[c]);
    // head
    draw_disc_n(v, f, kp(0).x, kp(0).y - 0.02f, 0.07f, kSkin);
}

VideoTensor make_catalog_garment(int size, const float* rgb) {
    VideoTensor g = VideoTensor::zeros(1, size, size);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) g.set(0, c, y, x, 1.0f);
    BBoxI t = torso_rect(size);
    for (int y = t.y0; y < t.y1; ++y)
        for (int x = t.x0; x < t.x1; ++x)
            for (int c = 0; c < 3; ++c) g.set(0, c, y, x, rgb[c]);
    // sleeves hint so the garment reads as an upper garment
    int sy0 = t.y0, sy1 = t.y0 + (t.y1 - t.y0) / 3;
    for (int y = sy0; y < sy1; ++y) {
        for (int x = std::max(0, t.x0 - 3); x < t.x0; ++x)
            for (int c = 0; c < 3; ++c) g.set(0, c, y, x, rgb[c]);
        for (int x = t.x1; x < std::min(size, t.x1 + 3); ++x)
            for (int c = 0; c < 3; ++c) g.set(0, c, y, x, rgb[c]);
    }
    return g;
}

}  // namespace

const std::array<std::array<float, 3>, 8>& toy_palette() { return kPalette; }
const char* toy_color_name(int index) { return kColorNames[index & 7]; }

std::vector<ToySample> make_toy_corpus(const ToyCorpusConfig& cfg) {
    if (cfg.size % 16 != 0) throw ConfigError("toy corpus: size must be divisible by 16");
    if (cfg.triplets < 1 || cfg.triplets > 8)
        throw ConfigError("toy corpus: triplet count must be in [1,8]");
    std::vector<ToySample> out;
    PoseSequence motion = make_motion(cfg.frames);
    BBoxI torso = torso_rect(cfg.size);
    for (int i = 0; i < cfg.triplets; ++i) {
        ToySample ts;
        ts.garment_color = i;
        ts.worn_color = -1;  // neutral; never the target garment

        TripletSample& s = ts.sample;
        s.pose = motion;
        s.truth = VideoTensor::zeros(cfg.frames, cfg.size, cfg.size);
        for (int f = 0; f < cfg.frames; ++f)
            draw_figure(s.truth, f, motion, f, kPalette[static_cast<size_t>(i)].data());
        s.human = VideoTensor::zeros(1, cfg.size, cfg.size);
        draw_figure(s.human, 0, motion, 0, kWornNeutral);
        s.garments.push_back(make_catalog_garment(cfg.size, kPalette[static_cast<size_t>(i)].data()));
        s.prompt = std::string("a person wearing a ") + kColorNames[i] + " shirt";
        s.provenance = "synthetic-toy";
        s.validate();

        ts.torso_mask = MaskImage::zeros(cfg.size, cfg.size);
        for (int y = torso.y0; y < torso.y1; ++y)
            for (int x = torso.x0; x < torso.x1; ++x) ts.torso_mask.set(y, x, 1);
        out.push_back(std::move(ts));
    }
    return out;
}

void write_toy_corpus(const std::string& dir, const ToyCorpusConfig& cfg) {
    auto corpus = make_toy_corpus(cfg);
    fs::create_directories(dir);
    std::vector<SampleRecord> records;
    std::ofstream videos_list(fs::path(dir) / "videos.jsonl");
    for (size_t i = 0; i < corpus.size(); ++i) {
        const auto& ts = corpus[i];
        const std::string id = "toy-" + std::to_string(i);
        fs::path sub = fs::path(dir) / id;
        fs::create_directories(sub);
        write_ppm((sub / "human.ppm").string(), ts.sample.human);
        for (size_t g = 0; g < ts.sample.garments.size(); ++g)
            write_ppm((sub / ("garment_" + std::to_string(g) + ".ppm")).string(),
                      ts.sample.garments[g]);
        save_pose_json((sub / "pose.json").string(), ts.sample.pose);
        save_video_dir((sub / "truth").string(), ts.sample.truth);
        write_pgm((sub / "torso_mask.pgm").string(), ts.torso_mask);

        SampleRecord rec;
        rec.id = id;
        rec.mode = "synthetic-toy";
        rec.human_path = id + "/human.ppm";
        rec.garment_paths = {id + "/garment_0.ppm"};
        rec.pose_path = id + "/pose.json";
        rec.truth_path = id + "/truth";
        rec.prompt = ts.sample.prompt;
        rec.provenance = "synthetic-toy";
        records.push_back(rec);

        nlohmann::json vline;
        vline["id"] = id;
        vline["video"] = id + "/truth";
        vline["garments"] = {id + "/garment_0.ppm"};
        videos_list << vline.dump() << "\n";
    }
    write_manifest((fs::path(dir) / "manifest.jsonl").string(), records);
}

}  // namespace vanast
