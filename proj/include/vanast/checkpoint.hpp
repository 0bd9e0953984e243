// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "vanast/dual_module.hpp"
#include "vanast/params.hpp"

namespace vanast {

// Self-describing parameter container: versioned header with the model
// configuration, then (name, trainable, shape, raw little-endian f32) per
// parameter. Also carries what exact training resume needs.
struct CheckpointMeta {
    int format_version = 1;
    BackboneConfig cfg;
    InjectionSchedule sched;
    std::string variant;  // empty when not a training checkpoint
    int64_t step = -1;
    std::string train_rng;  // serialized engines, empty when not resuming
    std::string data_rng;
};

void save_checkpoint(const std::string& path, const ParamSet& ps, const CheckpointMeta& meta);
CheckpointMeta load_checkpoint(const std::string& path, ParamSet& ps);

}  // namespace vanast
