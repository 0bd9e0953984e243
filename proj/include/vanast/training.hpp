// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vanast/checkpoint.hpp"
#include "vanast/dual_module.hpp"
#include "vanast/sample.hpp"

namespace vanast {

enum class Variant { DualModule, SingleModule, BackboneLora, NoSynthHuman };

Variant parse_variant(const std::string& s);
std::string variant_name(Variant v);

struct TrainConfig {
    Variant variant = Variant::DualModule;
    int steps = 2000;
    int batch_size = 2;
    float lr = 1e-3f;
    float weight_decay = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float adam_eps = 1e-8f;
    uint64_t seed = 0;
    int lora_rank = 4;
    int checkpoint_every = 0;  // 0: only on request
    float abort_loss = 1e6f;
};

struct LossRecord {
    int64_t step = 0;
    float loss = 0.0f;
    std::map<std::string, double> grad_norms;  // module prefix -> L2 norm
};

// Deterministic per-sample conditioning; latent encodings are cached because
// the codec is training-free.
struct EncodedSample {
    LatentVolume truth_latent;
    LatentVolume ham_ctx;
    LatentVolume gtm_ctx;
    std::vector<int> text_ids;
};

EncodedSample encode_sample(const TripletSample& s, const BackboneConfig& cfg,
                            Variant variant);

// Makes the variant's parameters exist and marks exactly its partition
// trainable; returns the trainable prefixes.
std::vector<std::string> apply_variant(Variant v, ParamSet& ps, const BackboneConfig& cfg,
                                       const InjectionSchedule& sched, int lora_rank,
                                       uint64_t seed);

Value predict_velocity_tokens(Variant v, const LatentVolume& x_t, float t,
                              const EncodedSample& es, const InjectionSchedule& sched,
                              const BackboneConfig& cfg, const ParamSet& ps, bool train);

// Rectified-flow objective: x_t = (1-t) noise + t z, target velocity
// v* = z - noise, squared error over the truth-token region.
Value flow_matching_loss(const EncodedSample& es, float t, const Tensor& noise,
                         const InjectionSchedule& sched, const BackboneConfig& cfg,
                         const ParamSet& ps, Variant variant, bool train = true);

// decoupled-weight-decay adaptive-moment optimizer
struct AdamW {
    float lr, beta1, beta2, eps, weight_decay;
    int64_t t = 0;
    std::map<std::string, Tensor> m, v;

    void step(ParamSet& ps, const std::map<std::string, Tensor>& grads);
};

class Trainer {
public:
    Trainer(const BackboneConfig& cfg, const InjectionSchedule& sched, const TrainConfig& tc,
            uint64_t backbone_seed);
    // resumes step counter, optimizer moments and RNG streams exactly
    static Trainer resume_from(const std::string& checkpoint_path, const TrainConfig& tc);

    void set_dataset(std::vector<TripletSample> samples);

    LossRecord train_step();
    // runs remaining steps, invoking on_record after each one
    void run(const std::function<void(const LossRecord&)>& on_record = nullptr);

    void save(const std::string& path) const;

    const ParamSet& params() const { return ps_; }
    ParamSet& params() { return ps_; }
    const BackboneConfig& config() const { return cfg_; }
    const InjectionSchedule& schedule() const { return sched_; }
    const TrainConfig& train_config() const { return tc_; }
    int64_t step_count() const { return opt_.t; }
    const std::vector<EncodedSample>& encoded() const { return encoded_; }

private:
    Trainer() = default;

    BackboneConfig cfg_;
    InjectionSchedule sched_;
    TrainConfig tc_;
    ParamSet ps_;
    std::vector<TripletSample> samples_;
    std::vector<EncodedSample> encoded_;
    AdamW opt_{};
    Rng data_rng_;
};

// gradient norms bucketed by top-level module prefix ("backbone", "ham", ...)
std::map<std::string, double> grad_norms_by_module(
    const std::map<std::string, Tensor>& grads, const ParamSet& ps);

}  // namespace vanast
