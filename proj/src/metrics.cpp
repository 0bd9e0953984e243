// SPDX-License-Identifier: Apache-2.0
#include "vanast/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <atomic>
#include <functional>
#include <map>
#include <thread>

#include "vanast/common.hpp"

namespace vanast {

// ---------------------------------------------------------------------------
// pixel metrics

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(static_cast<size_t>(size));
    const int c = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        double d = i - c;
        k[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[static_cast<size_t>(i)];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// separable valid-region filter over one channel plane
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& k) {
    const int ks = static_cast<int>(k.size());
    const int oh = h - ks + 1, ow = w - ks + 1;
    std::vector<double> tmp(static_cast<size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < ks; ++i) acc += k[static_cast<size_t>(i)] * img[static_cast<size_t>(y) * w + x + i];
            tmp[static_cast<size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < ks; ++i) acc += k[static_cast<size_t>(i)] * tmp[static_cast<size_t>(y + i) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = acc;
        }
    return out;
}

double ssim_channel(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
    int ks = 11;
    if (h < ks || w < ks) ks = std::max(1, std::min(h, w) - (std::min(h, w) + 1) % 2);
    const auto kern = gaussian_kernel(ks, 1.5);
    const size_t n = a.size();
    std::vector<double> aa(n), bb(n), ab(n);
    for (size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    auto mu_a = filter_valid(a, h, w, kern);
    auto mu_b = filter_valid(b, h, w, kern);
    auto m_aa = filter_valid(aa, h, w, kern);
    auto m_bb = filter_valid(bb, h, w, kern);
    auto m_ab = filter_valid(ab, h, w, kern);
    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;
    double total = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        const double va = m_aa[i] - mu_a[i] * mu_a[i];
        const double vb = m_bb[i] - mu_b[i] * mu_b[i];
        const double cov = m_ab[i] - mu_a[i] * mu_b[i];
        total += ((2.0 * mu_a[i] * mu_b[i] + C1) * (2.0 * cov + C2)) /
                 ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + C1) * (va + vb + C2));
    }
    return total / static_cast<double>(mu_a.size());
}

}  // namespace

PixelMetrics pixel_metrics(const VideoTensor& pred, const VideoTensor& truth) {
    if (pred.frames != truth.frames || pred.height != truth.height || pred.width != truth.width)
        throw std::invalid_argument("pixel_metrics: extent mismatch");
    PixelMetrics out;
    const size_t plane = static_cast<size_t>(pred.height) * pred.width;
    std::vector<double> pa(plane), pb(plane);
    for (int f = 0; f < pred.frames; ++f) {
        double l1 = 0.0, mse = 0.0, ssim = 0.0;
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < pred.height; ++y)
                for (int x = 0; x < pred.width; ++x) {
                    const double a = pred.at(f, c, y, x);
                    const double b = truth.at(f, c, y, x);
                    l1 += std::abs(a - b);
                    mse += (a - b) * (a - b);
                    pa[static_cast<size_t>(y) * pred.width + x] = a;
                    pb[static_cast<size_t>(y) * pred.width + x] = b;
                }
            ssim += ssim_channel(pa, pb, pred.height, pred.width);
        }
        const double denom = 3.0 * static_cast<double>(plane);
        l1 /= denom;
        mse /= denom;
        double psnr = mse < 1e-10 ? 100.0 : 10.0 * std::log10(1.0 / mse);
        psnr = std::min(psnr, 100.0);
        out.l1 += l1;
        out.psnr += psnr;
        out.ssim += ssim / 3.0;
    }
    out.l1 /= pred.frames;
    out.psnr /= pred.frames;
    out.ssim /= pred.frames;
    return out;
}

// ---------------------------------------------------------------------------
// stub extractors

namespace {

// fixed random conv stack: two stride-2 3x3 conv+relu stages, then global
// average pooling
class StubImageExtractor final : public ImageFeatureExtractor {
public:
    explicit StubImageExtractor(uint64_t seed) {
        Rng rng(derive_seed(seed, "stub-image-extractor"));
        auto fill = [&rng](std::vector<float>& v, size_t n, float stddev) {
            v.resize(n);
            for (auto& x : v) x = stddev * rng.normal();
        };
        fill(w1_, 8ull * 3 * 3 * 3, 0.35f);
        fill(w2_, 16ull * 8 * 3 * 3, 0.2f);
    }

    int feature_dim() const override { return 16; }
    std::string name() const override { return "stub-conv"; }

    std::vector<float> features(const VideoTensor& frame) const override {
        auto maps = layer_maps(frame);
        const auto& top = maps.back();
        std::vector<float> out(top.size());
        for (size_t c = 0; c < top.size(); ++c) {
            double acc = 0.0;
            for (float v : top[c]) acc += v;
            out[c] = static_cast<float>(acc / static_cast<double>(top[c].size()));
        }
        return out;
    }

    std::vector<std::vector<std::vector<float>>> layer_maps(
        const VideoTensor& frame) const override {
        if (frame.frames != 1) throw std::invalid_argument("image extractor: single frame expected");
        auto l1 = conv(plane_of(frame), 3, frame.height, frame.width, w1_, 8);
        const int h1 = (frame.height + 1) / 2, w1 = (frame.width + 1) / 2;
        auto l2 = conv(l1, 8, h1, w1, w2_, 16);
        return {l1, l2};
    }

private:
    static std::vector<std::vector<float>> plane_of(const VideoTensor& frame) {
        std::vector<std::vector<float>> out(3);
        for (int c = 0; c < 3; ++c) {
            out[static_cast<size_t>(c)].resize(static_cast<size_t>(frame.height) * frame.width);
            for (int y = 0; y < frame.height; ++y)
                for (int x = 0; x < frame.width; ++x)
                    out[static_cast<size_t>(c)][static_cast<size_t>(y) * frame.width + x] =
                        frame.at(0, c, y, x);
        }
        return out;
    }

    // zero-padded 3x3 stride-2 convolution + relu
    static std::vector<std::vector<float>> conv(const std::vector<std::vector<float>>& in,
                                                int cin, int h, int w,
                                                const std::vector<float>& weights, int cout) {
        const int oh = (h + 1) / 2, ow = (w + 1) / 2;
        std::vector<std::vector<float>> out(static_cast<size_t>(cout));
        for (int oc = 0; oc < cout; ++oc) {
            auto& plane = out[static_cast<size_t>(oc)];
            plane.assign(static_cast<size_t>(oh) * ow, 0.0f);
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    float acc = 0.0f;
                    for (int ic = 0; ic < cin; ++ic)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx) {
                                const int iy = oy * 2 + ky - 1;
                                const int ix = ox * 2 + kx - 1;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                acc += weights[((static_cast<size_t>(oc) * cin + ic) * 3 + ky) * 3 +
                                               kx] *
                                       in[static_cast<size_t>(ic)][static_cast<size_t>(iy) * w + ix];
                            }
                    plane[static_cast<size_t>(oy) * ow + ox] = acc > 0.0f ? acc : 0.0f;
                }
        }
        return out;
    }

    std::vector<float> w1_, w2_;
};

// spatio-temporal average-pool pyramid over the clip
class StubClipExtractor final : public ClipFeatureExtractor {
public:
    StubClipExtractor(std::string kind, std::vector<int> levels)
        : kind_(std::move(kind)), levels_(std::move(levels)) {
        dim_ = 0;
        for (int l : levels_) dim_ += 3 * l * l * l;
    }

    int feature_dim() const override { return dim_; }
    std::string name() const override { return kind_; }

    std::vector<float> features(const VideoTensor& clip) const override {
        if (!clip.valid()) throw std::invalid_argument("clip extractor: empty clip");
        std::vector<float> out;
        out.reserve(static_cast<size_t>(dim_));
        for (int level : levels_)
            for (int c = 0; c < 3; ++c)
                for (int tz = 0; tz < level; ++tz)
                    for (int zy = 0; zy < level; ++zy)
                        for (int zx = 0; zx < level; ++zx)
                            out.push_back(cell_mean(clip, c, tz, zy, zx, level));
        return out;
    }

private:
    static float cell_mean(const VideoTensor& v, int c, int tz, int zy, int zx, int level) {
        const int f0 = v.frames * tz / level, f1 = std::max(f0 + 1, v.frames * (tz + 1) / level);
        const int y0 = v.height * zy / level, y1 = std::max(y0 + 1, v.height * (zy + 1) / level);
        const int x0 = v.width * zx / level, x1 = std::max(x0 + 1, v.width * (zx + 1) / level);
        double acc = 0.0;
        size_t n = 0;
        for (int f = f0; f < std::min(f1, v.frames); ++f)
            for (int y = y0; y < std::min(y1, v.height); ++y)
                for (int x = x0; x < std::min(x1, v.width); ++x) {
                    acc += v.at(f, c, y, x);
                    ++n;
                }
        return n ? static_cast<float>(acc / static_cast<double>(n)) : 0.0f;
    }

    std::string kind_;
    std::vector<int> levels_;
    int dim_;
};

}  // namespace

std::shared_ptr<ImageFeatureExtractor> make_stub_image_extractor(uint64_t seed) {
    return std::make_shared<StubImageExtractor>(seed);
}

std::shared_ptr<ClipFeatureExtractor> make_stub_clip_extractor(const std::string& kind) {
    if (kind == "i3d-pyramid") return std::make_shared<StubClipExtractor>(kind, std::vector<int>{1, 2});
    if (kind == "resnext-pyramid")
        return std::make_shared<StubClipExtractor>(kind, std::vector<int>{1, 2, 3});
    throw ConfigError("unknown clip extractor kind: " + kind);
}

// ---------------------------------------------------------------------------
// perceptual distance proxy

double lpips_proxy(const VideoTensor& pred, const VideoTensor& truth,
                   const ImageFeatureExtractor& fx) {
    if (pred.frames != truth.frames || pred.height != truth.height || pred.width != truth.width)
        throw std::invalid_argument("lpips_proxy: extent mismatch");
    double total = 0.0;
    for (int f = 0; f < pred.frames; ++f) {
        auto ma = fx.layer_maps(pred.frame(f));
        auto mb = fx.layer_maps(truth.frame(f));
        double frame_acc = 0.0;
        for (size_t layer = 0; layer < ma.size(); ++layer) {
            const auto& la = ma[layer];
            const auto& lb = mb[layer];
            const size_t channels = la.size();
            const size_t positions = la[0].size();
            double layer_acc = 0.0;
            for (size_t p = 0; p < positions; ++p) {
                // unit-normalize across channels at each position
                double na = 0.0, nb = 0.0;
                for (size_t c = 0; c < channels; ++c) {
                    na += static_cast<double>(la[c][p]) * la[c][p];
                    nb += static_cast<double>(lb[c][p]) * lb[c][p];
                }
                na = std::sqrt(na) + 1e-10;
                nb = std::sqrt(nb) + 1e-10;
                double d2 = 0.0;
                for (size_t c = 0; c < channels; ++c) {
                    const double d = la[c][p] / na - lb[c][p] / nb;
                    d2 += d * d;
                }
                layer_acc += std::sqrt(d2);
            }
            frame_acc += layer_acc / static_cast<double>(positions);
        }
        total += frame_acc / static_cast<double>(ma.size());
    }
    return total / pred.frames;
}

// ---------------------------------------------------------------------------
// Frechet distance

double frechet_distance(const std::vector<std::vector<float>>& feats_a,
                        const std::vector<std::vector<float>>& feats_b) {
    if (feats_a.empty() || feats_b.empty())
        throw std::invalid_argument("frechet_distance: empty feature set");
    const int dim = static_cast<int>(feats_a.front().size());
    if (dim == 0 || static_cast<int>(feats_b.front().size()) != dim)
        throw std::invalid_argument("frechet_distance: feature dim mismatch");

    auto stats = [dim](const std::vector<std::vector<float>>& feats) {
        const int n = static_cast<int>(feats.size());
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim);
        for (const auto& f : feats) {
            if (static_cast<int>(f.size()) != dim)
                throw std::invalid_argument("frechet_distance: ragged feature set");
            for (int i = 0; i < dim; ++i) {
                if (!std::isfinite(f[static_cast<size_t>(i)]))
                    throw NumericError("frechet_distance: non-finite feature");
                mu[i] += f[static_cast<size_t>(i)];
            }
        }
        mu /= n;
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(dim, dim);
        if (n > 1) {
            for (const auto& f : feats) {
                Eigen::VectorXd d(dim);
                for (int i = 0; i < dim; ++i) d[i] = f[static_cast<size_t>(i)] - mu[i];
                sigma += d * d.transpose();
            }
            sigma /= (n - 1);
        }
        // desk-scale sets can be smaller than dim+1: shrink the diagonal
        if (n < dim + 1) sigma.diagonal().array() += 1e-3;
        return std::make_pair(mu, sigma);
    };

    auto [mu_a, sig_a] = stats(feats_a);
    auto [mu_b, sig_b] = stats(feats_b);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_a(sig_a);
    Eigen::VectorXd eva = es_a.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd sqrt_a = es_a.eigenvectors() * eva.asDiagonal() * es_a.eigenvectors().transpose();

    Eigen::MatrixXd prod = sqrt_a * sig_b * sqrt_a;
    prod = 0.5 * (prod + prod.transpose());  // symmetrize before decomposing
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_p(prod);
    double trace_sqrt = 0.0;
    for (int i = 0; i < dim; ++i) {
        double ev = es_p.eigenvalues()[i];
        if (ev < -1e-6)
            throw NumericError("frechet_distance: negative eigenvalue in product square root");
        trace_sqrt += std::sqrt(std::max(0.0, ev));
    }

    const double mean_term = (mu_a - mu_b).squaredNorm();
    return mean_term + sig_a.trace() + sig_b.trace() - 2.0 * trace_sqrt;
}

double vfid(const std::vector<VideoTensor>& preds, const std::vector<VideoTensor>& truths,
            const ClipFeatureExtractor& fx) {
    if (preds.empty() || truths.empty()) throw std::invalid_argument("vfid: empty clip list");
    std::vector<std::vector<float>> fa, fb;
    for (const auto& v : preds) fa.push_back(fx.features(v));
    for (const auto& v : truths) fb.push_back(fx.features(v));
    return frechet_distance(fa, fb);
}

// ---------------------------------------------------------------------------
// suite evaluation

MetricReport evaluate_pairs(const std::vector<VideoTensor>& preds,
                            const std::vector<VideoTensor>& truths, const std::string& label,
                            const std::string& dataset_tag, const ImageFeatureExtractor& img_fx,
                            const ClipFeatureExtractor& clip_a, const ClipFeatureExtractor& clip_b,
                            int workers) {
    if (preds.empty() || preds.size() != truths.size())
        throw std::invalid_argument("evaluate_pairs: need matching non-empty pred/truth lists");
    const size_t n = preds.size();

    struct PairWork {
        MetricReport::PairValues values;
        std::vector<std::vector<float>> pred_frame_feats;
        std::vector<std::vector<float>> truth_frame_feats;
    };
    std::vector<PairWork> work(n);

    auto process = [&](size_t i) {
        PairWork& w = work[i];
        PixelMetrics pm = pixel_metrics(preds[i], truths[i]);
        w.values.l1 = pm.l1;
        w.values.psnr = pm.psnr;
        w.values.ssim = pm.ssim;
        w.values.lpips = lpips_proxy(preds[i], truths[i], img_fx);
        std::vector<double> mean_a(static_cast<size_t>(img_fx.feature_dim()), 0.0);
        std::vector<double> mean_b(mean_a.size(), 0.0);
        for (int f = 0; f < preds[i].frames; ++f) {
            auto fa = img_fx.features(preds[i].frame(f));
            auto fb = img_fx.features(truths[i].frame(f));
            for (size_t d = 0; d < fa.size(); ++d) {
                mean_a[d] += fa[d];
                mean_b[d] += fb[d];
            }
            w.pred_frame_feats.push_back(std::move(fa));
            w.truth_frame_feats.push_back(std::move(fb));
        }
        double d2 = 0.0;
        for (size_t d = 0; d < mean_a.size(); ++d) {
            const double diff = (mean_a[d] - mean_b[d]) / preds[i].frames;
            d2 += diff * diff;
        }
        w.values.fid_contrib = std::sqrt(d2);
    };

    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) process(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) process(i);
            });
        for (auto& th : pool) th.join();
    }

    MetricReport rep;
    rep.label = label;
    rep.dataset_tag = dataset_tag;
    std::vector<std::vector<float>> all_pred_feats, all_truth_feats;
    for (const auto& w : work) {
        rep.per_pair.push_back(w.values);
        rep.l1 += w.values.l1;
        rep.psnr += w.values.psnr;
        rep.ssim += w.values.ssim;
        rep.lpips += w.values.lpips;
        for (const auto& f : w.pred_frame_feats) all_pred_feats.push_back(f);
        for (const auto& f : w.truth_frame_feats) all_truth_feats.push_back(f);
    }
    rep.l1 /= static_cast<double>(n);
    rep.psnr /= static_cast<double>(n);
    rep.ssim /= static_cast<double>(n);
    rep.lpips /= static_cast<double>(n);
    rep.fid = frechet_distance(all_pred_feats, all_truth_feats);
    rep.vfid_i3d = vfid(preds, truths, clip_a);
    rep.vfid_resnext = vfid(preds, truths, clip_b);
    return rep;
}

// ---------------------------------------------------------------------------
// report rendering

ReportLayout parse_layout(const std::string& s) {
    if (s == "table1") return ReportLayout::Table1;
    if (s == "table2") return ReportLayout::Table2;
    if (s == "ablation") return ReportLayout::Ablation;
    throw ConfigError("unknown report layout: " + s);
}

namespace {

struct Column {
    const char* header;
    const char* fmt;
    bool lower_better;
    double (*get)(const MetricReport&);
};

const Column kColumns[] = {
    {"L1", "%.4f", true, [](const MetricReport& r) { return r.l1; }},
    {"PSNR", "%.2f", false, [](const MetricReport& r) { return r.psnr; }},
    {"SSIM", "%.4f", false, [](const MetricReport& r) { return r.ssim; }},
    {"LPIPS", "%.4f", true, [](const MetricReport& r) { return r.lpips; }},
    {"FID", "%.2f", true, [](const MetricReport& r) { return r.fid; }},
    {"VFID_I3D", "%.2f", true, [](const MetricReport& r) { return r.vfid_i3d; }},
    {"VFID_ResNeXt", "%.2f", true, [](const MetricReport& r) { return r.vfid_resnext; }},
};
constexpr int kNumColumns = 7;

std::string fmt_value(const char* fmt, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

std::vector<std::string> ordered_unique(const std::vector<MetricReport>& reports,
                                        const std::function<std::string(const MetricReport&)>& key) {
    std::vector<std::string> out;
    for (const auto& r : reports) {
        const std::string k = key(r);
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    return out;
}

}  // namespace

std::string render_report_text(const std::vector<MetricReport>& reports, ReportLayout layout) {
    if (reports.empty()) throw ConfigError("render_report: empty input");
    auto datasets = ordered_unique(reports, [](const MetricReport& r) { return r.dataset_tag; });
    auto labels = ordered_unique(reports, [](const MetricReport& r) { return r.label; });
    if (layout == ReportLayout::Ablation && datasets.size() != 1)
        throw ConfigError("render_report: ablation layout expects a single dataset tag");

    // best value per (dataset, column) drives the bold markers
    auto find = [&](const std::string& label, const std::string& ds) -> const MetricReport* {
        for (const auto& r : reports)
            if (r.label == label && r.dataset_tag == ds) return &r;
        return nullptr;
    };
    std::map<std::pair<std::string, int>, double> best;
    for (const auto& ds : datasets)
        for (int c = 0; c < kNumColumns; ++c) {
            bool have = false;
            double b = 0.0;
            for (const auto& label : labels) {
                const MetricReport* r = find(label, ds);
                if (!r) continue;
                const double v = kColumns[c].get(*r);
                if (!have || (kColumns[c].lower_better ? v < b : v > b)) {
                    b = v;
                    have = true;
                }
            }
            best[{ds, c}] = b;
        }

    const int label_w = 22, col_w = 14;
    std::ostringstream os;
    os << std::string(label_w, ' ');
    for (const auto& ds : datasets)
        for (int c = 0; c < kNumColumns; ++c) {
            std::string h = (datasets.size() > 1 ? ds + ":" : std::string()) + kColumns[c].header;
            os << std::string(h.size() >= static_cast<size_t>(col_w)
                                  ? 1
                                  : col_w - static_cast<int>(h.size()), ' ')
               << h;
        }
    os << "\n";
    for (const auto& label : labels) {
        os << label << std::string(label.size() >= static_cast<size_t>(label_w)
                                       ? 1
                                       : label_w - static_cast<int>(label.size()), ' ');
        for (const auto& ds : datasets) {
            const MetricReport* r = find(label, ds);
            for (int c = 0; c < kNumColumns; ++c) {
                std::string cell = r ? fmt_value(kColumns[c].fmt, kColumns[c].get(*r)) : "-";
                if (r && fmt_value(kColumns[c].fmt, best[{ds, c}]) == cell)
                    cell = "*" + cell + "*";
                os << std::string(cell.size() >= static_cast<size_t>(col_w)
                                      ? 1
                                      : col_w - static_cast<int>(cell.size()), ' ')
                   << cell;
            }
        }
        os << "\n";
    }
    return os.str();
}

std::string render_report_csv(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw ConfigError("render_report: empty input");
    std::ostringstream os;
    os << "label,dataset,l1,psnr,ssim,lpips,fid,vfid_i3d,vfid_resnext\n";
    for (const auto& r : reports) {
        os << r.label << "," << r.dataset_tag;
        for (int c = 0; c < kNumColumns; ++c) os << "," << double_to_string(kColumns[c].get(r));
        os << "\n";
    }
    return os.str();
}

std::vector<MetricReport> parse_report_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("parse_report_csv: empty input");
    std::vector<MetricReport> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> parts;
        std::string cur;
        std::istringstream ls(line);
        while (std::getline(ls, cur, ',')) parts.push_back(cur);
        if (parts.size() != 9) throw ConfigError("parse_report_csv: bad row: " + line);
        MetricReport r;
        r.label = parts[0];
        r.dataset_tag = parts[1];
        double vals[7];
        for (int i = 0; i < 7; ++i) vals[i] = std::stod(parts[static_cast<size_t>(i + 2)]);
        r.l1 = vals[0];
        r.psnr = vals[1];
        r.ssim = vals[2];
        r.lpips = vals[3];
        r.fid = vals[4];
        r.vfid_i3d = vals[5];
        r.vfid_resnext = vals[6];
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace vanast
