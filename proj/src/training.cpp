// SPDX-License-Identifier: Apache-2.0
#include "vanast/training.hpp"

#include <algorithm>
#include <cmath>

namespace vanast {

Variant parse_variant(const std::string& s) {
    if (s == "dual-module") return Variant::DualModule;
    if (s == "single-module") return Variant::SingleModule;
    if (s == "backbone-lora") return Variant::BackboneLora;
    if (s == "no-synth-human") return Variant::NoSynthHuman;
    throw ConfigError("unknown variant: " + s);
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::DualModule: return "dual-module";
        case Variant::SingleModule: return "single-module";
        case Variant::BackboneLora: return "backbone-lora";
        case Variant::NoSynthHuman: return "no-synth-human";
    }
    throw ConfigError("unknown variant enum value");
}

EncodedSample encode_sample(const TripletSample& s_in, const BackboneConfig& cfg,
                            Variant variant) {
    TripletSample scratch;
    const TripletSample* s = &s_in;
    if (variant == Variant::NoSynthHuman) {
        scratch = substitute_human_with_truth_frame(s_in);
        s = &scratch;
    }
    s->validate();
    EncodedSample es;
    es.truth_latent = encode_latent(s->truth);
    LatentVolume z_h = encode_latent(s->human);
    VideoTensor pose_render = rasterize_pose(s->pose, s->truth.height, s->truth.width);
    LatentVolume z_p = encode_latent(pose_render);
    es.ham_ctx = build_ham_context(z_h, z_p);
    std::vector<LatentVolume> z_g;
    for (const auto& g : s->garments) z_g.push_back(encode_latent(g));
    // GTM padded to the HAM temporal length so both token streams align
    es.gtm_ctx = build_gtm_context(z_g, es.ham_ctx.frames);
    es.text_ids = encode_text(s->prompt, cfg);
    return es;
}

std::vector<std::string> apply_variant(Variant v, ParamSet& ps, const BackboneConfig& cfg,
                                       const InjectionSchedule& sched, int lora_rank,
                                       uint64_t seed) {
    std::vector<std::string> prefixes;
    switch (v) {
        case Variant::DualModule:
        case Variant::NoSynthHuman:
            if (!ps.has("ham.proj_in.w")) init_dual_module_params(ps, cfg, sched);
            prefixes = {"ham.", "gtm."};
            break;
        case Variant::SingleModule:
            if (!ps.has("single.proj_in.w")) init_adapter_params(ps, "single.", cfg, sched);
            prefixes = {"single."};
            break;
        case Variant::BackboneLora:
            if (ps.names_with_prefix("lora.").empty())
                init_lora_params(ps, cfg, lora_rank, seed);
            prefixes = {"lora."};
            break;
    }
    ps.set_trainable_by_prefix(prefixes);
    return prefixes;
}

Value predict_velocity_tokens(Variant v, const LatentVolume& x_t, float t,
                              const EncodedSample& es, const InjectionSchedule& sched,
                              const BackboneConfig& cfg, const ParamSet& ps, bool train) {
    switch (v) {
        case Variant::DualModule:
        case Variant::NoSynthHuman:
            return forward_injected_tokens(x_t, t, es.text_ids, es.ham_ctx, es.gtm_ctx, sched,
                                           cfg, ps, train);
        case Variant::SingleModule:
            return forward_single_module_tokens(x_t, t, es.text_ids, es.ham_ctx, es.gtm_ctx,
                                                sched, cfg, ps, train);
        case Variant::BackboneLora:
            return forward_backbone_lora_tokens(x_t, t, es.text_ids, es.ham_ctx, es.gtm_ctx, cfg,
                                                ps);
    }
    throw ConfigError("unknown variant enum value");
}

Value flow_matching_loss(const EncodedSample& es, float t, const Tensor& noise,
                         const InjectionSchedule& sched, const BackboneConfig& cfg,
                         const ParamSet& ps, Variant variant, bool train) {
    if (!(t > 0.0f && t < 1.0f))
        throw std::invalid_argument("flow_matching_loss: t must lie in (0,1)");
    const Tensor& z = es.truth_latent.data;
    if (!noise.same_shape(z))
        throw std::invalid_argument("flow_matching_loss: noise shape mismatch");
    Tensor x_t(z.shape());
    Tensor target(z.shape());
    for (size_t i = 0; i < z.size(); ++i) {
        x_t.at(i) = (1.0f - t) * noise.at(i) + t * z.at(i);
        target.at(i) = z.at(i) - noise.at(i);
    }
    LatentVolume noisy = es.truth_latent;
    noisy.data = x_t;
    auto pred = predict_velocity_tokens(variant, noisy, t, es, sched, cfg, ps, train);
    auto target_tokens =
        gather_patches(constant(target), cfg.patch_t, cfg.patch_h, cfg.patch_w);
    auto loss = mse(pred, target_tokens);
    if (!std::isfinite(loss->val.at(0))) throw NumericError("flow_matching_loss: non-finite loss");
    return loss;
}

void AdamW::step(ParamSet& ps, const std::map<std::string, Tensor>& grads) {
    ++t;
    const double bc1 = 1.0 - std::pow(static_cast<double>(beta1), static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(static_cast<double>(beta2), static_cast<double>(t));
    for (const auto& [name, g] : grads) {
        if (!ps.trainable(name)) continue;
        auto mi = m.find(name);
        if (mi == m.end()) mi = m.emplace(name, Tensor(g.shape())).first;
        auto vi = v.find(name);
        if (vi == v.end()) vi = v.emplace(name, Tensor(g.shape())).first;
        Tensor& mt = mi->second;
        Tensor& vt = vi->second;
        Tensor p = ps.get(name)->val.clone();
        for (size_t i = 0; i < g.size(); ++i) {
            const double gi = g.at(i);
            const double mn = beta1 * mt.at(i) + (1.0 - beta1) * gi;
            const double vn = beta2 * vt.at(i) + (1.0 - beta2) * gi * gi;
            mt.at(i) = static_cast<float>(mn);
            vt.at(i) = static_cast<float>(vn);
            const double mhat = mn / bc1;
            const double vhat = vn / bc2;
            const double upd = mhat / (std::sqrt(vhat) + eps) + weight_decay * p.at(i);
            p.at(i) = static_cast<float>(p.at(i) - lr * upd);
        }
        ps.set_value(name, std::move(p));
    }
}

std::map<std::string, double> grad_norms_by_module(const std::map<std::string, Tensor>& grads,
                                                   const ParamSet& ps) {
    std::map<std::string, double> acc;
    for (const char* mod : {"backbone", "ham", "gtm", "single", "lora"})
        if (!ps.names_with_prefix(std::string(mod) + ".").empty()) acc[mod] = 0.0;
    for (const auto& [name, g] : grads) {
        auto dot = name.find('.');
        std::string mod = name.substr(0, dot);
        double s = 0.0;
        for (size_t i = 0; i < g.size(); ++i) s += static_cast<double>(g.at(i)) * g.at(i);
        acc[mod] += s;
    }
    for (auto& [mod, s] : acc) s = std::sqrt(s);
    return acc;
}

Trainer::Trainer(const BackboneConfig& cfg, const InjectionSchedule& sched,
                 const TrainConfig& tc, uint64_t backbone_seed)
    : cfg_(cfg), sched_(sched), tc_(tc), data_rng_(derive_seed(tc.seed, "train-data")) {
    cfg_.validate();
    sched_.validate(cfg_.num_blocks);
    init_backbone_params(ps_, cfg_, backbone_seed);
    apply_variant(tc_.variant, ps_, cfg_, sched_, tc_.lora_rank, tc_.seed);
    opt_ = AdamW{tc_.lr, tc_.beta1, tc_.beta2, tc_.adam_eps, tc_.weight_decay, 0, {}, {}};
}

Trainer Trainer::resume_from(const std::string& checkpoint_path, const TrainConfig& tc) {
    Trainer tr;
    ParamSet full;
    CheckpointMeta meta = load_checkpoint(checkpoint_path, full);
    tr.cfg_ = meta.cfg;
    tr.sched_ = meta.sched;
    tr.tc_ = tc;
    if (!meta.variant.empty()) tr.tc_.variant = parse_variant(meta.variant);
    tr.opt_ = AdamW{tc.lr, tc.beta1, tc.beta2, tc.adam_eps, tc.weight_decay, 0, {}, {}};
    for (const auto& [name, v] : full.items()) {
        if (name.rfind("opt.m.", 0) == 0)
            tr.opt_.m.emplace(name.substr(6), v->val);
        else if (name.rfind("opt.v.", 0) == 0)
            tr.opt_.v.emplace(name.substr(6), v->val);
        else
            tr.ps_.add(name, v->val, v->requires_grad);
    }
    if (meta.step >= 0) tr.opt_.t = meta.step;
    if (!meta.data_rng.empty())
        tr.data_rng_.deserialize(meta.data_rng);
    else
        tr.data_rng_ = Rng(derive_seed(tc.seed, "train-data"));
    apply_variant(tr.tc_.variant, tr.ps_, tr.cfg_, tr.sched_, tr.tc_.lora_rank, tr.tc_.seed);
    return tr;
}

void Trainer::set_dataset(std::vector<TripletSample> samples) {
    if (samples.empty()) throw ConfigError("trainer: empty dataset");
    samples_ = std::move(samples);
    encoded_.clear();
    for (const auto& s : samples_) encoded_.push_back(encode_sample(s, cfg_, tc_.variant));
}

LossRecord Trainer::train_step() {
    if (encoded_.empty()) throw ConfigError("trainer: dataset not set");
    if (tc_.batch_size < 1) throw ConfigError("trainer: empty batch");
    Value total;
    for (int b = 0; b < tc_.batch_size; ++b) {
        const auto& es =
            encoded_[static_cast<size_t>(data_rng_.uniform_int(0, static_cast<int64_t>(encoded_.size()) - 1))];
        float t = static_cast<float>(
            std::clamp(data_rng_.uniform(), 1e-4, 1.0 - 1e-4));
        Tensor noise(es.truth_latent.data.shape());
        for (size_t i = 0; i < noise.size(); ++i) noise.at(i) = data_rng_.normal();
        auto li = flow_matching_loss(es, t, noise, sched_, cfg_, ps_, tc_.variant);
        total = total ? add(total, li) : li;
    }
    auto loss = scale(total, 1.0f / static_cast<float>(tc_.batch_size));
    const float loss_val = loss->val.at(0);
    if (!std::isfinite(loss_val) || loss_val > tc_.abort_loss)
        throw NumericError("train_step: loss exploded at step " + std::to_string(opt_.t + 1));
    auto grads = reverse_gradient(loss, ps_);
    LossRecord rec;
    rec.grad_norms = grad_norms_by_module(grads, ps_);
    opt_.step(ps_, grads);
    rec.step = opt_.t;
    rec.loss = loss_val;
    return rec;
}

void Trainer::run(const std::function<void(const LossRecord&)>& on_record) {
    while (opt_.t < tc_.steps) {
        LossRecord rec = train_step();
        if (on_record) on_record(rec);
    }
}

void Trainer::save(const std::string& path) const {
    ParamSet out;
    for (const auto& [name, v] : ps_.items()) out.add(name, v->val, v->requires_grad);
    for (const auto& [name, t] : opt_.m) out.add("opt.m." + name, t, false);
    for (const auto& [name, t] : opt_.v) out.add("opt.v." + name, t, false);
    CheckpointMeta meta;
    meta.cfg = cfg_;
    meta.sched = sched_;
    meta.variant = variant_name(tc_.variant);
    meta.step = opt_.t;
    meta.data_rng = data_rng_.serialize();
    save_checkpoint(path, out, meta);
}

}  // namespace vanast
