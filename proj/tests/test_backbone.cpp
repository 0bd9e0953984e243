// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "vanast/backbone.hpp"
#include "vanast/checkpoint.hpp"

using namespace vanast;

namespace {

LatentVolume random_latent(int f, int c, int h, int w, uint64_t seed) {
    Rng rng(seed);
    LatentVolume z = LatentVolume::zeros(f, c, h, w);
    for (size_t i = 0; i < z.data.size(); ++i) z.data.at(i) = rng.normal();
    return z;
}

void zero_param(ParamSet& ps, const std::string& name) {
    ps.set_value(name, Tensor(ps.get(name)->val.shape()));
}

}  // namespace

TEST_CASE("patchify grid arithmetic") {
    BackboneConfig cfg;
    ParamSet ps;
    init_backbone_params(ps, cfg, 1);

    LatentVolume z = random_latent(4, 8, 16, 16, 2);
    TokenGrid g = token_grid_for(z, cfg);
    CHECK(g.t == 4);
    CHECK(g.h == 4);
    CHECK(g.w == 4);
    CHECK(g.count() == 64);
    auto tok = patchify_tokens(z.data, ps, cfg);
    CHECK(tok->val.dim(0) == 64);
    CHECK(tok->val.dim(1) == cfg.model_dim);

    LatentVolume single = random_latent(1, 8, 4, 4, 3);
    CHECK(token_grid_for(single, cfg).count() == 1);

    LatentVolume bad = random_latent(1, 8, 5, 4, 4);
    CHECK_THROWS(token_grid_for(bad, cfg));

    // zero latent: every token equals the projection bias
    LatentVolume zero = LatentVolume::zeros(2, 8, 8, 8);
    auto ztok = patchify_tokens(zero.data, ps, cfg);
    const auto& bias = ps.get("backbone.patchify.b")->val;
    for (int r = 0; r < ztok->val.dim(0); ++r)
        for (int c = 0; c < cfg.model_dim; ++c)
            CHECK(ztok->val.at(static_cast<size_t>(r) * cfg.model_dim + c) == bias.at(c));
}

TEST_CASE("backbone_block is the identity with zero output projections") {
    BackboneConfig cfg;
    ParamSet ps;
    init_backbone_params(ps, cfg, 5);
    const std::string p = "backbone.blocks.0.";
    for (const char* layer : {"attn.o", "xattn.o", "mlp.fc2"}) {
        zero_param(ps, p + layer + std::string(".w"));
        zero_param(ps, p + layer + std::string(".b"));
    }
    Rng rng(9);
    auto h = constant(random_normal({12, cfg.model_dim}, 1.0f, rng));
    auto text = text_features(encode_text("a person walking", cfg), ps);
    auto tvec = timestep_embedding(0.3f, ps, cfg);
    auto out = backbone_block(h, text, tvec, ps, p, cfg);
    CHECK(out->val.bitwise_equal(h->val));
}

TEST_CASE("independent samples are independent") {
    BackboneConfig cfg;
    ParamSet ps;
    init_backbone_params(ps, cfg, 6);
    LatentVolume a = random_latent(2, 8, 8, 8, 100);
    LatentVolume b = random_latent(2, 8, 8, 8, 200);
    auto ids = encode_text("", cfg);
    LatentVolume oa1 = backbone_forward(a, 0.5f, ids, cfg, ps);
    LatentVolume ob1 = backbone_forward(b, 0.5f, ids, cfg, ps);
    LatentVolume ob2 = backbone_forward(b, 0.5f, ids, cfg, ps);
    LatentVolume oa2 = backbone_forward(a, 0.5f, ids, cfg, ps);
    CHECK(oa1.data.bitwise_equal(oa2.data));
    CHECK(ob1.data.bitwise_equal(ob2.data));
    CHECK_FALSE(oa1.data.bitwise_equal(ob1.data));
}

TEST_CASE("backbone_forward: zero head, shape contract, determinism") {
    BackboneConfig cfg;
    ParamSet ps;
    init_backbone_params(ps, cfg, 7);
    LatentVolume z = random_latent(4, 8, 16, 16, 300);
    auto ids = encode_text("a person dancing in the studio", cfg);

    ParamSet ps_zero;
    init_backbone_params(ps_zero, cfg, 7);
    zero_param(ps_zero, "backbone.head.out.w");
    zero_param(ps_zero, "backbone.head.out.b");
    LatentVolume out0 = backbone_forward(z, 0.25f, ids, cfg, ps_zero);
    CHECK(out0.data.all_zero());

    LatentVolume out = backbone_forward(z, 0.25f, ids, cfg, ps);
    CHECK(out.frames == z.frames);
    CHECK(out.channels == z.channels);
    CHECK(out.height == z.height);
    CHECK(out.width == z.width);

    LatentVolume again = backbone_forward(z, 0.25f, ids, cfg, ps);
    CHECK(out.data.bitwise_equal(again.data));

    CHECK_THROWS(backbone_forward(z, 1.5f, ids, cfg, ps));
}

TEST_CASE("shape contract holds over random small configs") {
    Rng rng(31337);
    for (int trial = 0; trial < 5; ++trial) {
        BackboneConfig cfg;
        cfg.num_blocks = 2 + 2 * static_cast<int>(rng.uniform_int(0, 2));
        cfg.num_heads = 2;
        cfg.model_dim = 16 + 16 * static_cast<int>(rng.uniform_int(0, 1));
        cfg.patch_t = 1;
        cfg.patch_h = static_cast<int>(rng.uniform_int(1, 2)) * 2;
        cfg.patch_w = 2;
        ParamSet ps;
        init_backbone_params(ps, cfg, 40 + static_cast<uint64_t>(trial));
        int f = static_cast<int>(rng.uniform_int(1, 3));
        int h = cfg.patch_h * static_cast<int>(rng.uniform_int(1, 3));
        int w = cfg.patch_w * static_cast<int>(rng.uniform_int(1, 3));
        LatentVolume z = random_latent(f, cfg.latent_channels, h, w,
                                       1000 + static_cast<uint64_t>(trial));
        LatentVolume out = backbone_forward(z, 0.7f, {0}, cfg, ps);
        CHECK(out.frames == f);
        CHECK(out.height == h);
        CHECK(out.width == w);
    }
}

TEST_CASE("text encoding maps unknown words and empty prompts to null") {
    BackboneConfig cfg;
    auto ids = encode_text("", cfg);
    REQUIRE(ids.size() == 1);
    CHECK(ids[0] == 0);
    auto ids2 = encode_text("zzzunknownzzz person", cfg);
    REQUIRE(ids2.size() == 2);
    CHECK(ids2[0] == 0);
    CHECK(ids2[1] != 0);
}

TEST_CASE("checkpoint round trip preserves bytes, flags and meta") {
    namespace fs = std::filesystem;
    BackboneConfig cfg;
    cfg.num_blocks = 4;
    ParamSet ps;
    init_backbone_params(ps, cfg, 123);
    ps.set_trainable("backbone.head.out.w", false);

    CheckpointMeta meta;
    meta.cfg = cfg;
    meta.sched = InjectionSchedule::even_sites(cfg.num_blocks);
    meta.variant = "dual-module";
    meta.step = 42;
    meta.train_rng = Rng(5).serialize();

    fs::path path = fs::temp_directory_path() / "vanast_ckpt_test.bin";
    save_checkpoint(path.string(), ps, meta);
    ParamSet loaded;
    CheckpointMeta m2 = load_checkpoint(path.string(), loaded);
    CHECK(m2.cfg == cfg);
    CHECK(m2.variant == "dual-module");
    CHECK(m2.step == 42);
    CHECK(m2.sched.sites == meta.sched.sites);
    CHECK(m2.train_rng == meta.train_rng);
    CHECK(loaded.content_hash() == ps.content_hash());
    for (const auto& name : ps.names()) CHECK(loaded.trainable(name) == ps.trainable(name));
    fs::remove(path);
}
