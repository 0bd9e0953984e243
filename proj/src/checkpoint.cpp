// SPDX-License-Identifier: Apache-2.0
#include "vanast/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace vanast {

namespace {

constexpr char kMagic[8] = {'V', 'A', 'N', 'A', 'S', 'T', 'C', 'K'};

nlohmann::json config_to_json(const BackboneConfig& c) {
    return {{"num_blocks", c.num_blocks},   {"model_dim", c.model_dim},
            {"num_heads", c.num_heads},     {"patch_t", c.patch_t},
            {"patch_h", c.patch_h},         {"patch_w", c.patch_w},
            {"text_vocab", c.text_vocab},   {"text_dim", c.text_dim},
            {"latent_channels", c.latent_channels}};
}

BackboneConfig config_from_json(const nlohmann::json& j) {
    BackboneConfig c;
    c.num_blocks = j.at("num_blocks").get<int>();
    c.model_dim = j.at("model_dim").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.patch_t = j.at("patch_t").get<int>();
    c.patch_h = j.at("patch_h").get<int>();
    c.patch_w = j.at("patch_w").get<int>();
    c.text_vocab = j.at("text_vocab").get<int>();
    c.text_dim = j.at("text_dim").get<int>();
    c.latent_channels = j.at("latent_channels").get<int>();
    return c;
}

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& ps, const CheckpointMeta& meta) {
    nlohmann::json header;
    header["format_version"] = meta.format_version;
    header["backbone"] = config_to_json(meta.cfg);
    header["schedule"] = {{"sites", meta.sched.sites},
                          {"alpha", meta.sched.alpha},
                          {"beta", meta.sched.beta}};
    header["variant"] = meta.variant;
    header["step"] = meta.step;
    header["train_rng"] = meta.train_rng;
    header["data_rng"] = meta.data_rng;
    const std::string hs = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("save_checkpoint: cannot open " + path);
    f.write(kMagic, sizeof(kMagic));
    write_pod(f, static_cast<uint32_t>(meta.format_version));
    write_pod(f, static_cast<uint32_t>(hs.size()));
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    write_pod(f, static_cast<uint64_t>(ps.size()));
    for (const auto& [name, v] : ps.items()) {
        write_pod(f, static_cast<uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(f, static_cast<uint8_t>(v->requires_grad ? 1 : 0));
        const auto& shape = v->val.shape();
        write_pod(f, static_cast<uint32_t>(shape.size()));
        for (int d : shape) write_pod(f, static_cast<uint32_t>(d));
        f.write(reinterpret_cast<const char*>(v->val.data()),
                static_cast<std::streamsize>(v->val.size() * sizeof(float)));
    }
    if (!f) throw ConfigError("save_checkpoint: write failed " + path);
}

CheckpointMeta load_checkpoint(const std::string& path, ParamSet& ps) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("load_checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw ConfigError("load_checkpoint: bad magic in " + path);
    CheckpointMeta meta;
    meta.format_version = static_cast<int>(read_pod<uint32_t>(f));
    if (meta.format_version != 1)
        throw ConfigError("load_checkpoint: unsupported format version");
    const auto hlen = read_pod<uint32_t>(f);
    std::string hs(hlen, '\0');
    f.read(hs.data(), hlen);
    nlohmann::json header = nlohmann::json::parse(hs);
    meta.cfg = config_from_json(header.at("backbone"));
    meta.sched.sites = header.at("schedule").at("sites").get<std::vector<int>>();
    meta.sched.alpha = header.at("schedule").at("alpha").get<float>();
    meta.sched.beta = header.at("schedule").at("beta").get<float>();
    meta.variant = header.at("variant").get<std::string>();
    meta.step = header.at("step").get<int64_t>();
    meta.train_rng = header.at("train_rng").get<std::string>();
    meta.data_rng = header.at("data_rng").get<std::string>();

    const auto count = read_pod<uint64_t>(f);
    for (uint64_t i = 0; i < count; ++i) {
        const auto nlen = read_pod<uint32_t>(f);
        std::string name(nlen, '\0');
        f.read(name.data(), nlen);
        const bool trainable = read_pod<uint8_t>(f) != 0;
        const auto ndim = read_pod<uint32_t>(f);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(read_pod<uint32_t>(f));
        Tensor t(shape);
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(float)));
        if (!f) throw ConfigError("load_checkpoint: truncated param data in " + path);
        ps.add(name, std::move(t), trainable);
    }
    return meta;
}

}  // namespace vanast
