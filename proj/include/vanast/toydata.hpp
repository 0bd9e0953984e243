// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "vanast/sample.hpp"

namespace vanast {

// Synthetic-toy corpus: stick figures on a plain background wearing
// solid-color upper garments. Layout and motion are shared across the corpus
// so garment color is the only discriminative factor the model must route
// from the garment stream. The torso region is known by construction, which
// gives the transfer-signal checks an exact mask.
struct ToyCorpusConfig {
    int triplets = 8;
    int frames = 4;
    int size = 32;  // square frames; must be divisible by 16
    uint64_t seed = 0;
};

struct ToySample {
    TripletSample sample;
    MaskImage torso_mask;  // static across frames
    int garment_color = 0;
    int worn_color = 0;  // what the human image wears (differs from garment)
};

// palette entries are exact 8-bit levels so PPM round trips are lossless
const std::array<std::array<float, 3>, 8>& toy_palette();
const char* toy_color_name(int index);

std::vector<ToySample> make_toy_corpus(const ToyCorpusConfig& cfg);

// Writes media + a training manifest + a videos.jsonl list consumable by the
// dataset pipeline (truth video + catalog garment per entry).
void write_toy_corpus(const std::string& dir, const ToyCorpusConfig& cfg);

}  // namespace vanast
