#ifndef DSD_EVALKIT_HPP
#define DSD_EVALKIT_HPP

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dsd/common.hpp"
#include "dsd/cop.hpp"
#include "dsd/data.hpp"
#include "dsd/flow.hpp"
#include "dsd/image.hpp"
#include "dsd/mask.hpp"
#include "dsd/net.hpp"

namespace dsd {

constexpr double kPsnrCap = 99.0;  // reported for identical clips (MSE = 0)

inline double psnr(const std::vector<Image>& a, const std::vector<Image>& b) {
    if (a.size() != b.size() || a.empty()) throw ShapeError("psnr: clip length mismatch");
    double se = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i].h == b[i].h && a[i].w == b[i].w && a[i].c == b[i].c))
            throw ShapeError("psnr: frame shape mismatch");
        for (std::size_t k = 0; k < a[i].px.size(); ++k) {
            double d = static_cast<double>(a[i].px[k]) - static_cast<double>(b[i].px[k]);
            se += d * d;
        }
        n += a[i].px.size();
    }
    double mse = se / static_cast<double>(n);
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

// Uniform-window SSIM, C1=(0.01*255)^2, C2=(0.03*255)^2, mean over all valid
// windows, channels, and frames.
inline double ssim(const std::vector<Image>& a, const std::vector<Image>& b, int window = 8) {
    if (a.size() != b.size() || a.empty()) throw ShapeError("ssim: clip length mismatch");
    const double C1 = 0.01 * 255 * 0.01 * 255, C2 = 0.03 * 255 * 0.03 * 255;
    double total = 0.0;
    long count = 0;
    for (std::size_t fi = 0; fi < a.size(); ++fi) {
        const Image& x = a[fi];
        const Image& y = b[fi];
        if (!(x.h == y.h && x.w == y.w && x.c == y.c)) throw ShapeError("ssim: frame shape mismatch");
        if (x.h < window || x.w < window) throw ShapeError("ssim: frame smaller than window");
        const double n = static_cast<double>(window) * window;
        for (int c = 0; c < x.c; ++c)
            for (int wy = 0; wy + window <= x.h; ++wy)
                for (int wx = 0; wx + window <= x.w; ++wx) {
                    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
                    for (int i = 0; i < window; ++i)
                        for (int j = 0; j < window; ++j) {
                            double px = x.at(wy + i, wx + j, c);
                            double py = y.at(wy + i, wx + j, c);
                            sx += px; sy += py;
                            sxx += px * px; syy += py * py; sxy += px * py;
                        }
                    double mx = sx / n, my = sy / n;
                    double vx = sxx / n - mx * mx, vy = syy / n - my * my;
                    double cov = sxy / n - mx * my;
                    total += ((2 * mx * my + C1) * (2 * cov + C2)) /
                             ((mx * mx + my * my + C1) * (vx + vy + C2));
                    ++count;
                }
    }
    return total / static_cast<double>(count);
}

// Mean adjacent-frame normalized cross-correlation mapped to [0,1].
inline double temporal_consistency(const std::vector<Image>& clip) {
    if (clip.size() < 2) throw InvalidArgument("temporal_consistency: need at least 2 frames");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < clip.size(); ++i) {
        const Image& a = clip[i];
        const Image& b = clip[i + 1];
        double n = static_cast<double>(a.px.size());
        double ma = 0, mb = 0;
        for (std::size_t k = 0; k < a.px.size(); ++k) { ma += a.px[k]; mb += b.px[k]; }
        ma /= n; mb /= n;
        double saa = 0, sbb = 0, sab = 0;
        for (std::size_t k = 0; k < a.px.size(); ++k) {
            double da = a.px[k] - ma, db = b.px[k] - mb;
            saa += da * da; sbb += db * db; sab += da * db;
        }
        double corr;
        if (saa == 0.0 || sbb == 0.0)
            corr = (saa == sbb) ? 1.0 : 0.0;  // flat frames: identical up to offset
        else
            corr = sab / std::sqrt(saa * sbb);
        acc += (corr + 1.0) / 2.0;
    }
    return acc / static_cast<double>(clip.size() - 1);
}

struct MetricReport {
    double psnr_db = std::numeric_limits<double>::quiet_NaN();
    double ssim_val = std::numeric_limits<double>::quiet_NaN();
    double temporal = std::numeric_limits<double>::quiet_NaN();
    double mask_coverage = std::numeric_limits<double>::quiet_NaN();
};

enum class TransferTask { Foreground, Background, Motion, Reconstruction };

// Which asset supplied each condition component; checked by tests to assert
// the replaced component never reads source pixels.
struct ConditionProvenance {
    std::string fg = "source", bg = "source", flow = "source";
};

struct TransferResult {
    std::vector<Image> frames;
    MetricReport report;
    ConditionProvenance provenance;
};

struct TransferOptions {
    StageConfig stage;
    bool cop_enabled = false;
    NetToggles net;
    std::uint64_t seed = 0;
    Summarizer* summarizer = nullptr;  // defaults to the stub
    int reference_frame = 0;
};

namespace detail {
// finetune-mode split of one clip frame, patchified and repeated over time
inline std::pair<Mat, Mat> clip_frame_conditions(const VideoClip& clip, int frame, int patch, int f) {
    ImageF ref = ImageF::from(clip.frames[frame]);
    auto d = split_frame(ref, clip.masks[frame], SplitMode::Finetune);
    return {repeat_frame_tokens(patchify(imagef_to_latent(d.foreground), patch), f),
            repeat_frame_tokens(patchify(imagef_to_latent(d.background), patch), f)};
}
}  // namespace detail

// Assembles conditions per task, runs staged denoising, and scores the output
// against the source clip.
inline TransferResult run_transfer(TransferTask task, const VideoClip& source,
                                   const VideoClip& reference, const ModelParams& params,
                                   const NoiseSchedule& sched, const TransferOptions& opt = {}) {
    const int f = static_cast<int>(source.frames.size());
    const Image& f0 = source.frames[0];
    const int patch = params.dims.patch;

    auto [src_f, src_b] = detail::clip_frame_conditions(source, opt.reference_frame, patch, f);

    TransferResult res;
    CondInputs cond;
    FlowField flow = source.flow;
    std::string caption = source.caption;
    switch (task) {
        case TransferTask::Reconstruction:
            cond.z_f = src_f;
            cond.z_b = src_b;
            break;
        case TransferTask::Foreground: {
            auto [rf, rb] = detail::clip_frame_conditions(reference, opt.reference_frame, patch, f);
            cond.z_f = rf;
            cond.z_b = src_b;
            res.provenance.fg = "reference";
            break;
        }
        case TransferTask::Background: {
            auto [rf, rb] = detail::clip_frame_conditions(reference, opt.reference_frame, patch, f);
            cond.z_f = src_f;
            cond.z_b = rb;
            res.provenance.bg = "reference";
            break;
        }
        case TransferTask::Motion: {
            // motion from the driving (source) clip via block matching;
            // appearance entirely from the reference
            auto [rf, rb] = detail::clip_frame_conditions(reference, opt.reference_frame, patch, f);
            cond.z_f = rf;
            cond.z_b = rb;
            flow = estimate_flow(source.frames);
            res.provenance.fg = "reference";
            res.provenance.bg = "reference";
            res.provenance.flow = "driving";
            caption = reference.caption;
            break;
        }
    }
    cond.flow_px = flow_to_mat(flow, f);
    cond.frames = f;
    cond.flow_h = f0.h;
    cond.flow_w = f0.w;

    StubSummarizer stub;
    Summarizer* summ = opt.summarizer ? opt.summarizer : &stub;
    PromptHierarchy h = summarize(caption, *summ);

    Rng rng(opt.seed);
    Latent seed_noise(f, f0.h / patch, f0.w / patch, patch * patch * f0.c, LatentRole::Noisy);
    for (auto& x : seed_noise.v) x = rng.normal();

    DenoiseOptions dopt;
    dopt.cop_enabled = opt.cop_enabled;
    dopt.net = opt.net;
    Latent z0 = hierarchical_denoise(seed_noise, cond, h, opt.stage, params, sched, dopt);
    res.frames = latent_to_frames(unpatchify(z0, patch, f0.c));

    res.report.temporal = temporal_consistency(res.frames);
    res.report.mask_coverage = source.masks[opt.reference_frame].coverage();
    bool paired = res.frames.size() == source.frames.size() &&
                  res.frames[0].h == f0.h && res.frames[0].w == f0.w;
    if (paired && task != TransferTask::Motion) {
        res.report.psnr_db = psnr(res.frames, source.frames);
        res.report.ssim_val = ssim(res.frames, source.frames);
    }
    return res;
}

}  // namespace dsd

#endif
