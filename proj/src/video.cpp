// SPDX-License-Identifier: Apache-2.0
#include "vanast/video.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vanast/common.hpp"

namespace fs = std::filesystem;

namespace vanast {

VideoTensor VideoTensor::frame(int f) const {
    if (f < 0 || f >= frames) throw std::invalid_argument("frame index out of range");
    VideoTensor out = VideoTensor::zeros(1, height, width);
    std::memcpy(out.data.data(), data.data() + idx(f, 0, 0, 0),
                sizeof(float) * 3 * static_cast<size_t>(height) * width);
    return out;
}

VideoTensor VideoTensor::clone() const {
    VideoTensor out = *this;
    out.data = data.clone();
    return out;
}

size_t MaskImage::count() const {
    size_t n = 0;
    for (uint8_t v : data) n += v ? 1 : 0;
    return n;
}

std::optional<BBoxI> MaskImage::bbox() const {
    int x0 = width, y0 = height, x1 = -1, y1 = -1;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (at(y, x)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return std::nullopt;
    return BBoxI{x0, y0, x1 + 1, y1 + 1};
}

MaskImage MaskImage::translated(int dx, int dy) const {
    MaskImage out = MaskImage::zeros(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            if (!at(y, x)) continue;
            int nx = x + dx, ny = y + dy;
            if (nx >= 0 && nx < width && ny >= 0 && ny < height) out.set(ny, nx, 1);
        }
    return out;
}

uint8_t quantize_u8(float v) {
    float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<uint8_t>(std::lround(c * 255.0f));
}

void write_ppm(const std::string& path, const VideoTensor& frame, int frame_index) {
    if (!frame.valid()) throw std::invalid_argument("write_ppm: empty frame");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("write_ppm: cannot open " + path);
    f << "P6\n" << frame.width << " " << frame.height << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(frame.width) * 3);
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x)
            for (int c = 0; c < 3; ++c)
                row[static_cast<size_t>(x) * 3 + c] = quantize_u8(frame.at(frame_index, c, y, x));
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw ConfigError("write_ppm: write failed " + path);
}

namespace {
int read_pnm_int(std::istream& f) {
    int c = f.peek();
    while (c == '#' || std::isspace(c)) {
        if (c == '#') {
            std::string line;
            std::getline(f, line);
        } else {
            f.get();
        }
        c = f.peek();
    }
    int v = 0;
    f >> v;
    return v;
}
}  // namespace

VideoTensor read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("read_ppm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P6") throw ConfigError("read_ppm: not a P6 file: " + path);
    int w = read_pnm_int(f), h = read_pnm_int(f), maxv = read_pnm_int(f);
    if (w <= 0 || h <= 0 || maxv != 255) throw ConfigError("read_ppm: bad header: " + path);
    f.get();  // single whitespace after header
    std::vector<uint8_t> buf(static_cast<size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw ConfigError("read_ppm: truncated file: " + path);
    VideoTensor v = VideoTensor::zeros(1, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                v.set(0, c, y, x,
                      static_cast<float>(buf[(static_cast<size_t>(y) * w + x) * 3 + c]) / 255.0f);
    return v;
}

void write_pgm(const std::string& path, const MaskImage& mask) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("write_pgm: cannot open " + path);
    f << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(mask.width));
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) row[static_cast<size_t>(x)] = mask.at(y, x) ? 255 : 0;
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
}

MaskImage read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("read_pgm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw ConfigError("read_pgm: not a P5 file: " + path);
    int w = read_pnm_int(f), h = read_pnm_int(f), maxv = read_pnm_int(f);
    if (w <= 0 || h <= 0 || maxv != 255) throw ConfigError("read_pgm: bad header: " + path);
    f.get();
    std::vector<uint8_t> buf(static_cast<size_t>(w) * h);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw ConfigError("read_pgm: truncated file: " + path);
    MaskImage m = MaskImage::zeros(h, w);
    for (size_t i = 0; i < buf.size(); ++i) m.data[i] = buf[i] >= 128 ? 1 : 0;
    return m;
}

void save_video_dir(const std::string& dir, const VideoTensor& v) {
    fs::create_directories(dir);
    nlohmann::json index;
    index["frames"] = v.frames;
    index["height"] = v.height;
    index["width"] = v.width;
    std::vector<std::string> files;
    for (int f = 0; f < v.frames; ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.ppm", f);
        write_ppm((fs::path(dir) / name).string(), v, f);
        files.emplace_back(name);
    }
    index["files"] = files;
    std::ofstream idx(fs::path(dir) / "index.json");
    idx << index.dump(2) << "\n";
}

VideoTensor load_video_dir(const std::string& dir) {
    std::ifstream idx(fs::path(dir) / "index.json");
    if (!idx) throw ConfigError("load_video_dir: missing index.json in " + dir);
    nlohmann::json index = nlohmann::json::parse(idx);
    int frames = index.at("frames").get<int>();
    int h = index.at("height").get<int>();
    int w = index.at("width").get<int>();
    auto files = index.at("files").get<std::vector<std::string>>();
    if (static_cast<int>(files.size()) != frames)
        throw ConfigError("load_video_dir: index frame count mismatch");
    VideoTensor v = VideoTensor::zeros(frames, h, w);
    for (int f = 0; f < frames; ++f) {
        VideoTensor fr = read_ppm((fs::path(dir) / files[static_cast<size_t>(f)]).string());
        if (fr.height != h || fr.width != w)
            throw ConfigError("load_video_dir: frame extent mismatch");
        std::memcpy(v.data.data() + v.idx(f, 0, 0, 0), fr.data.data(),
                    sizeof(float) * 3 * static_cast<size_t>(h) * w);
    }
    return v;
}

namespace {
constexpr char kRawMagic[8] = {'V', 'A', 'N', 'V', 'I', 'D', '0', '1'};
}

void save_video_raw(const std::string& path, const VideoTensor& v) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("save_video_raw: cannot open " + path);
    f.write(kRawMagic, sizeof(kRawMagic));
    uint32_t dims[3] = {static_cast<uint32_t>(v.frames), static_cast<uint32_t>(v.height),
                        static_cast<uint32_t>(v.width)};
    f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    f.write(reinterpret_cast<const char*>(v.data.data()),
            static_cast<std::streamsize>(v.data.size() * sizeof(float)));
    if (!f) throw ConfigError("save_video_raw: write failed " + path);
}

VideoTensor load_video_raw(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("load_video_raw: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kRawMagic, sizeof(magic)) != 0)
        throw ConfigError("load_video_raw: bad magic in " + path);
    uint32_t dims[3];
    f.read(reinterpret_cast<char*>(dims), sizeof(dims));
    VideoTensor v = VideoTensor::zeros(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                                       static_cast<int>(dims[2]));
    f.read(reinterpret_cast<char*>(v.data.data()),
           static_cast<std::streamsize>(v.data.size() * sizeof(float)));
    if (!f) throw ConfigError("load_video_raw: truncated file " + path);
    return v;
}

VideoTensor load_video_any(const std::string& path) {
    if (fs::is_directory(path)) return load_video_dir(path);
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".ppm") return read_ppm(path);
    return load_video_raw(path);
}

VideoTensor crop_frame(const VideoTensor& frame, const BBoxI& box, int frame_index) {
    if (!box.valid() || box.x0 < 0 || box.y0 < 0 || box.x1 > frame.width ||
        box.y1 > frame.height)
        throw std::invalid_argument("crop_frame: box outside image");
    VideoTensor out = VideoTensor::zeros(1, box.height(), box.width());
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < box.height(); ++y)
            for (int x = 0; x < box.width(); ++x)
                out.set(0, c, y, x, frame.at(frame_index, c, box.y0 + y, box.x0 + x));
    return out;
}

VideoTensor resize_bilinear(const VideoTensor& v, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize: bad extents");
    VideoTensor out = VideoTensor::zeros(v.frames, out_h, out_w);
    const float sy = out_h > 1 ? static_cast<float>(v.height - 1) / (out_h - 1) : 0.0f;
    const float sx = out_w > 1 ? static_cast<float>(v.width - 1) / (out_w - 1) : 0.0f;
    for (int f = 0; f < v.frames; ++f)
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x) {
                const float fy = y * sy, fx = x * sx;
                const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
                const int y1 = std::min(y0 + 1, v.height - 1);
                const int x1 = std::min(x0 + 1, v.width - 1);
                const float wy = fy - y0, wx = fx - x0;
                for (int c = 0; c < 3; ++c) {
                    const float top = v.at(f, c, y0, x0) * (1 - wx) + v.at(f, c, y0, x1) * wx;
                    const float bot = v.at(f, c, y1, x0) * (1 - wx) + v.at(f, c, y1, x1) * wx;
                    out.set(f, c, y, x, top * (1 - wy) + bot * wy);
                }
            }
    return out;
}

}  // namespace vanast
