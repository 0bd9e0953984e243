// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vanast/video.hpp"

namespace vanast {

// Pluggable feature extraction for the perceptual metrics. The built-in
// stubs keep the full suite runnable offline: a fixed random conv stack for
// images and a spatio-temporal average-pool pyramid for clips.
class ImageFeatureExtractor {
public:
    virtual ~ImageFeatureExtractor() = default;
    virtual int feature_dim() const = 0;
    // frame-level feature vector (used for FID)
    virtual std::vector<float> features(const VideoTensor& frame) const = 0;
    // per-layer feature maps as [channels, positions] pairs (used by the
    // perceptual distance proxy)
    virtual std::vector<std::vector<std::vector<float>>> layer_maps(
        const VideoTensor& frame) const = 0;
    virtual std::string name() const = 0;
};

class ClipFeatureExtractor {
public:
    virtual ~ClipFeatureExtractor() = default;
    virtual int feature_dim() const = 0;
    virtual std::vector<float> features(const VideoTensor& clip) const = 0;
    virtual std::string name() const = 0;
};

std::shared_ptr<ImageFeatureExtractor> make_stub_image_extractor(uint64_t seed = 0);
// two video backends mirroring the paper's pair of VFID networks
std::shared_ptr<ClipFeatureExtractor> make_stub_clip_extractor(const std::string& kind);

struct PixelMetrics {
    double l1 = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

// frame-wise L1 / PSNR / SSIM means; PSNR capped at 100 dB
PixelMetrics pixel_metrics(const VideoTensor& pred, const VideoTensor& truth);

double lpips_proxy(const VideoTensor& pred, const VideoTensor& truth,
                   const ImageFeatureExtractor& fx);

// squared mean distance plus covariance term with the matrix square root by
// eigendecomposition of the symmetrized product; sample covariance, with
// diagonal shrinkage when the set is smaller than dim+1
double frechet_distance(const std::vector<std::vector<float>>& feats_a,
                        const std::vector<std::vector<float>>& feats_b);

double vfid(const std::vector<VideoTensor>& preds, const std::vector<VideoTensor>& truths,
            const ClipFeatureExtractor& fx);

struct MetricReport {
    std::string label;        // row name, e.g. "Ours"
    std::string dataset_tag;  // e.g. "Internet", "ViViD"
    struct PairValues {
        double l1 = 0.0, psnr = 0.0, ssim = 0.0, lpips = 0.0, fid_contrib = 0.0;
    };
    std::vector<PairValues> per_pair;
    double l1 = 0.0, psnr = 0.0, ssim = 0.0, lpips = 0.0;
    double fid = 0.0, vfid_i3d = 0.0, vfid_resnext = 0.0;
};

// Evaluates the whole suite over (pred, truth) video pairs.
MetricReport evaluate_pairs(const std::vector<VideoTensor>& preds,
                            const std::vector<VideoTensor>& truths, const std::string& label,
                            const std::string& dataset_tag, const ImageFeatureExtractor& img_fx,
                            const ClipFeatureExtractor& clip_a, const ClipFeatureExtractor& clip_b,
                            int workers = 1);

enum class ReportLayout { Table1, Table2, Ablation };
ReportLayout parse_layout(const std::string& s);

// fixed-width rendering in the paper's column order with best-per-column
// markers, and a full-precision CSV that parses back exactly
std::string render_report_text(const std::vector<MetricReport>& reports, ReportLayout layout);
std::string render_report_csv(const std::vector<MetricReport>& reports);
std::vector<MetricReport> parse_report_csv(const std::string& csv);

}  // namespace vanast
