// SPDX-License-Identifier: Apache-2.0
//
// Latent codec, context builders, pose rasterizer and media IO.

#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "vanast/backbone.hpp"
#include "vanast/dual_module.hpp"
#include "vanast/latent.hpp"
#include "vanast/pose.hpp"
#include "vanast/video.hpp"

using namespace vanast;

namespace {

VideoTensor random_video(int f, int h, int w, uint64_t seed) {
    Rng rng(seed);
    VideoTensor v = VideoTensor::zeros(f, h, w);
    for (size_t i = 0; i < v.data.size(); ++i)
        v.data.at(i) = static_cast<float>(rng.uniform());
    return v;
}

}  // namespace

TEST_CASE("encode_latent stride arithmetic and linearity") {
    VideoTensor v = random_video(8, 64, 64, 11);
    LatentVolume z = encode_latent(v);
    CHECK(z.frames == 8);
    CHECK(z.channels == 8);
    CHECK(z.height == 16);
    CHECK(z.width == 16);

    VideoTensor zero = VideoTensor::zeros(2, 32, 32);
    CHECK(encode_latent(zero).data.all_zero());

    VideoTensor bad = VideoTensor::zeros(1, 30, 32);
    CHECK_THROWS(encode_latent(bad));
}

TEST_CASE("encode/decode error matches the projection-derived bound") {
    // the reconstruction residual per patch is (I - P^T P) x; it is never
    // worse than reconstructing from the patch means alone
    const auto& codec = LatentCodec::instance();
    const auto& proj = codec.projection();
    constexpr int P = LatentCodec::kPatchVec;
    constexpr int C = LatentCodec::kChannels;

    VideoTensor v = random_video(1, 16, 16, 21);
    LatentVolume z = codec.encode(v);
    VideoTensor rec = codec.decode(z);

    constexpr int S = LatentCodec::kSpatialStride;
    for (int py = 0; py < 4; ++py)
        for (int px = 0; px < 4; ++px) {
            float patch[P], residual[P];
            int i = 0;
            for (int c = 0; c < 3; ++c)
                for (int dy = 0; dy < S; ++dy)
                    for (int dx = 0; dx < S; ++dx)
                        patch[i++] = v.at(0, c, py * S + dy, px * S + dx);
            // residual = patch - P^T P patch, straight from the matrix
            for (int a = 0; a < P; ++a) {
                double acc = patch[a];
                for (int r = 0; r < C; ++r) {
                    double zr = 0.0;
                    for (int b = 0; b < P; ++b)
                        zr += static_cast<double>(proj[static_cast<size_t>(r) * P + b]) * patch[b];
                    acc -= static_cast<double>(proj[static_cast<size_t>(r) * P + a]) * zr;
                }
                residual[a] = static_cast<float>(acc);
            }
            // per-pixel decode error equals the matrix-level residual
            i = 0;
            double err2 = 0.0, bound2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                double mean = 0.0;
                for (int dy = 0; dy < S; ++dy)
                    for (int dx = 0; dx < S; ++dx)
                        mean += v.at(0, c, py * S + dy, px * S + dx);
                mean /= S * S;
                for (int dy = 0; dy < S; ++dy)
                    for (int dx = 0; dx < S; ++dx) {
                        float got = rec.at(0, c, py * S + dy, px * S + dx);
                        float want = patch[i] - residual[i];
                        CHECK(std::abs(got - want) < 1e-5f);
                        err2 += static_cast<double>(patch[i] - got) * (patch[i] - got);
                        double d = patch[i] - mean;
                        bound2 += d * d;
                        ++i;
                    }
            }
            CHECK(err2 <= bound2 + 1e-9);
        }
}

TEST_CASE("patch-constant content decodes exactly") {
    VideoTensor v = VideoTensor::zeros(1, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            v.set(0, 0, y, x, 0.7f);
            v.set(0, 1, y, x, 0.2f);
            v.set(0, 2, y, x, 0.5f);
        }
    VideoTensor rec = decode_latent(encode_latent(v));
    for (size_t i = 0; i < v.data.size(); ++i)
        CHECK(std::abs(rec.data.at(i) - v.data.at(i)) < 1e-5f);
}

TEST_CASE("build_ham_context concatenates human then pose frames") {
    VideoTensor human = random_video(1, 32, 32, 5);
    VideoTensor posev = random_video(8, 32, 32, 6);
    LatentVolume zh = encode_latent(human);
    LatentVolume zp = encode_latent(posev);
    LatentVolume ctx = build_ham_context(zh, zp);
    CHECK(ctx.frames == 9);
    const size_t fe = static_cast<size_t>(zh.channels) * zh.height * zh.width;
    for (size_t i = 0; i < fe; ++i) CHECK(ctx.data.at(i) == zh.data.at(i));
    for (size_t i = 0; i < fe * 8; ++i) CHECK(ctx.data.at(fe + i) == zp.data.at(i));

    LatentVolume empty_pose = LatentVolume::zeros(0, zh.channels, zh.height, zh.width);
    LatentVolume only_h = build_ham_context(zh, empty_pose);
    CHECK(only_h.frames == 1);
    CHECK(only_h.data.bitwise_equal(zh.data));

    LatentVolume wrong = LatentVolume::zeros(2, zh.channels, zh.height, zh.width);
    CHECK_THROWS(build_ham_context(wrong, zp));
}

TEST_CASE("build_gtm_context zero padding is exactly zero") {
    VideoTensor g = random_video(1, 32, 32, 9);
    LatentVolume zg = encode_latent(g);
    LatentVolume ctx = build_gtm_context({zg}, 9);
    CHECK(ctx.frames == 9);
    const size_t fe = static_cast<size_t>(zg.channels) * zg.height * zg.width;
    for (size_t i = 0; i < fe; ++i) CHECK(ctx.data.at(i) == zg.data.at(i));
    for (size_t i = fe; i < ctx.data.size(); ++i) CHECK(ctx.data.at(i) == 0.0f);

    LatentVolume two = build_gtm_context({zg, zg}, 2);
    CHECK(two.frames == 2);
    for (size_t i = 0; i < fe; ++i) CHECK(two.data.at(fe + i) == zg.data.at(i));

    CHECK_THROWS(build_gtm_context({zg, zg, zg}, 2));
}

TEST_CASE("project_context: token count, bias replication, linearity") {
    BackboneConfig cfg;
    cfg.validate();
    ParamSet ps;
    init_backbone_params(ps, cfg, 77);
    InjectionSchedule sched = InjectionSchedule::even_sites(cfg.num_blocks);
    init_adapter_params(ps, "ham.", cfg, sched);

    LatentVolume ctx = LatentVolume::zeros(9, 8, 16, 16);
    auto zero_tok = project_context(ctx, ps, "ham.", cfg);
    CHECK(zero_tok->val.dim(0) == 9 * 4 * 4);
    CHECK(zero_tok->val.dim(1) == cfg.model_dim);
    // zero input leaves only the bias
    const auto& bias = ps.get("ham.proj_in.b")->val;
    for (int r = 0; r < zero_tok->val.dim(0); ++r)
        for (int c = 0; c < cfg.model_dim; ++c)
            CHECK(zero_tok->val.at(static_cast<size_t>(r) * cfg.model_dim + c) == bias.at(c));

    Rng rng(3);
    for (size_t i = 0; i < ctx.data.size(); ++i) ctx.data.at(i) = rng.normal();
    auto t1 = project_context(ctx, ps, "ham.", cfg);
    LatentVolume ctx2 = ctx;
    ctx2.data = ctx.data.clone();
    for (size_t i = 0; i < ctx2.data.size(); ++i) ctx2.data.at(i) *= 2.0f;
    auto t2 = project_context(ctx2, ps, "ham.", cfg);
    for (size_t i = 0; i < t1->val.size(); ++i) {
        float b = bias.at(i % cfg.model_dim);
        CHECK(std::abs((t2->val.at(i) - b) - 2.0f * (t1->val.at(i) - b)) < 2e-4f);
    }
}

TEST_CASE("pose rasterizer is deterministic and respects confidence") {
    PoseSequence pose = PoseSequence::zeros(2);
    for (int j = 0; j < kPoseJoints; ++j) {
        pose.at(0, j) = {0.2f + 0.03f * j, 0.1f + 0.04f * j, 1.0f};
        pose.at(1, j) = {0.25f + 0.03f * j, 0.12f + 0.04f * j, 1.0f};
    }
    VideoTensor a = rasterize_pose(pose, 32, 32);
    VideoTensor b = rasterize_pose(pose, 32, 32);
    CHECK(a.data.bitwise_equal(b.data));
    CHECK_FALSE(a.data.all_zero());

    for (int j = 0; j < kPoseJoints; ++j) pose.at(0, j).conf = 0.0f;
    VideoTensor c = rasterize_pose(pose, 32, 32);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) CHECK(c.at(0, ch, y, x) == 0.0f);
}

TEST_CASE("media io round trips") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "vanast_test_io";
    fs::create_directories(dir);

    VideoTensor v = random_video(3, 16, 12, 31);
    save_video_raw((dir / "clip.vvid").string(), v);
    VideoTensor r = load_video_raw((dir / "clip.vvid").string());
    CHECK(r.data.bitwise_equal(v.data));

    save_video_dir((dir / "clipdir").string(), v);
    VideoTensor d = load_video_dir((dir / "clipdir").string());
    CHECK(d.frames == 3);
    // 8-bit quantization bound
    for (size_t i = 0; i < v.data.size(); ++i)
        CHECK(std::abs(d.data.at(i) - v.data.at(i)) <= 0.5f / 255.0f + 1e-6f);

    PoseSequence pose = PoseSequence::zeros(3);
    for (int f = 0; f < 3; ++f)
        for (int j = 0; j < kPoseJoints; ++j)
            pose.at(f, j) = {0.1f * j / kPoseJoints + 0.01f * f, 0.5f, 0.9f};
    save_pose_json((dir / "pose.json").string(), pose);
    PoseSequence pr = load_pose_json((dir / "pose.json").string());
    CHECK(pr.frames == 3);
    for (int f = 0; f < 3; ++f)
        for (int j = 0; j < kPoseJoints; ++j) {
            CHECK(pr.at(f, j).x == pose.at(f, j).x);
            CHECK(pr.at(f, j).y == pose.at(f, j).y);
        }

    MaskImage m = MaskImage::zeros(10, 8);
    m.set(2, 3, 1);
    m.set(9, 7, 1);
    write_pgm((dir / "m.pgm").string(), m);
    MaskImage mr = read_pgm((dir / "m.pgm").string());
    CHECK(mr.data == m.data);

    fs::remove_all(dir);
}
