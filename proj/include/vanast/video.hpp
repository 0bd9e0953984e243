// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vanast/tensor.hpp"

namespace vanast {

// F-frame RGB clip with values in [0,1], stored [F,3,H,W].
struct VideoTensor {
    int frames = 0;
    int height = 0;
    int width = 0;
    Tensor data;

    static VideoTensor zeros(int f, int h, int w) {
        VideoTensor v;
        v.frames = f;
        v.height = h;
        v.width = w;
        v.data = Tensor({f, 3, h, w});
        return v;
    }

    float at(int f, int c, int y, int x) const {
        return data.at(idx(f, c, y, x));
    }
    void set(int f, int c, int y, int x, float v) { data.at(idx(f, c, y, x)) = v; }
    size_t idx(int f, int c, int y, int x) const {
        return ((static_cast<size_t>(f) * 3 + c) * height + y) * width + x;
    }
    bool valid() const { return frames >= 1 && height >= 1 && width >= 1; }

    VideoTensor frame(int f) const;
    VideoTensor clone() const;
};

struct BBoxI {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open [x0,x1) x [y0,y1)
    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool valid() const { return x0 < x1 && y0 < y1; }
    bool contains(const BBoxI& o) const {
        return x0 <= o.x0 && y0 <= o.y0 && x1 >= o.x1 && y1 >= o.y1;
    }
};

// Binary mask aligned to an image; values are strictly 0/1.
struct MaskImage {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> data;

    static MaskImage zeros(int h, int w) {
        MaskImage m;
        m.height = h;
        m.width = w;
        m.data.assign(static_cast<size_t>(h) * w, 0);
        return m;
    }
    uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    void set(int y, int x, uint8_t v) { data[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t count() const;
    bool empty_mask() const { return count() == 0; }
    std::optional<BBoxI> bbox() const;
    MaskImage translated(int dx, int dy) const;
};

// lossless 8-bit image files (PPM P6 / PGM P5)
void write_ppm(const std::string& path, const VideoTensor& frame, int frame_index = 0);
VideoTensor read_ppm(const std::string& path);
void write_pgm(const std::string& path, const MaskImage& mask);
MaskImage read_pgm(const std::string& path);

// per-frame image sequence in a directory plus an index file
void save_video_dir(const std::string& dir, const VideoTensor& v);
VideoTensor load_video_dir(const std::string& dir);

// single-file raw container: magic, F/H/W header, row-major f32 frames
void save_video_raw(const std::string& path, const VideoTensor& v);
VideoTensor load_video_raw(const std::string& path);

// loads either a raw container, a .ppm image, or a frame directory
VideoTensor load_video_any(const std::string& path);

uint8_t quantize_u8(float v);

VideoTensor crop_frame(const VideoTensor& frame, const BBoxI& box, int frame_index = 0);
VideoTensor resize_bilinear(const VideoTensor& v, int out_h, int out_w);

}  // namespace vanast
