#ifndef DSD_DATA_HPP
#define DSD_DATA_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsd/common.hpp"
#include "dsd/flow.hpp"
#include "dsd/image.hpp"
#include "dsd/mask.hpp"
#include "dsd/net.hpp"
#include "dsd/png_io.hpp"
#include "dsd/schedule.hpp"

namespace dsd {

enum class SpriteShape { Square, Disc };
enum class BgTexture { Flat, Gradient, Checker };

struct SyntheticScene {
    SpriteShape shape = SpriteShape::Square;
    int color[3] = {200, 60, 60};
    std::string color_name = "red";
    int size = 14;          // sprite side / diameter, px
    int x0 = 4, y0 = 4;     // start position (top-left of sprite box)
    int vx = 2, vy = 1;     // px/frame
    BgTexture texture = BgTexture::Checker;
    int frames = 8, h = 32, w = 32;

    void validate() const {
        int x_end = x0 + vx * (frames - 1), y_end = y0 + vy * (frames - 1);
        int xmin = std::min(x0, x_end), xmax = std::max(x0, x_end) + size;
        int ymin = std::min(y0, y_end), ymax = std::max(y0, y_end) + size;
        if (xmin < 0 || ymin < 0 || xmax > w || ymax > h)
            throw InvalidArgument("SyntheticScene: sprite leaves the frame");
    }
};

constexpr int kClipFormatVersion = 1;

struct ClipManifest {
    std::string id;
    int frames = 0, height = 0, width = 0;
    std::string caption;
    std::string provenance = "synthetic";
    int format_version = kClipFormatVersion;
    int fps = 8;
};

struct VideoClip {
    std::vector<Image> frames;
    std::vector<BinaryMask> masks;
    FlowField flow;
    std::string caption;
    ClipManifest manifest;
};

namespace detail {

inline void bg_pixel(BgTexture tex, int y, int x, std::uint8_t out[3]) {
    switch (tex) {
        case BgTexture::Flat:
            out[0] = 70; out[1] = 80; out[2] = 100;
            break;
        case BgTexture::Gradient:
            out[0] = static_cast<std::uint8_t>(40 + 5 * (x % 32));
            out[1] = static_cast<std::uint8_t>(40 + 5 * (y % 32));
            out[2] = 90;
            break;
        case BgTexture::Checker: {
            bool on = ((x / 4) + (y / 4)) % 2 == 0;
            std::uint8_t v = on ? 160 : 90;
            out[0] = v; out[1] = v; out[2] = v;
            break;
        }
    }
}

// sprite texture anchored to sprite-local coordinates so it translates rigidly;
// the per-pixel hash jitter keeps the pattern aperiodic so no two displacements
// produce identical sprite content
inline double sprite_shade(int u, int v) {
    double ramp = 0.55 + 0.45 * (static_cast<double>(u + v) / 64.0);
    bool cell = ((u / 2) + (v / 2)) % 2 == 0;
    double jitter = static_cast<double>(fnv1a64(std::to_string(u * 131 + v)) % 13) / 12.0;
    return ramp * (cell ? 1.0 : 0.75) * (0.94 + 0.12 * jitter);
}

inline bool sprite_hit(SpriteShape shape, int u, int v, int size) {
    if (shape == SpriteShape::Square) return true;
    double cx = (size - 1) / 2.0, r = size / 2.0;
    double du = u - cx, dv = v - cx;
    return du * du + dv * dv <= r * r;
}

}  // namespace detail

inline std::string scene_caption(const SyntheticScene& s) {
    auto dir = [](int vx, int vy) -> std::string {
        if (vx > 0 && vy == 0) return "right";
        if (vx < 0 && vy == 0) return "left";
        if (vx == 0 && vy > 0) return "down";
        if (vx == 0 && vy < 0) return "up";
        if (vx == 0 && vy == 0) return "nowhere";
        std::string d = vy > 0 ? "down" : "up";
        return d + " and to the " + (vx > 0 ? "right" : "left");
    };
    std::string shape = s.shape == SpriteShape::Square ? "square" : "disc";
    std::string tex = s.texture == BgTexture::Flat ? "flat"
                    : s.texture == BgTexture::Gradient ? "gradient" : "checkerboard";
    std::string size_word = s.size < 13 ? "small" : "large";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "A %s %s %s moves %s across a %s background, steady speed, crisp edges. "
                  "It shifts %d pixels across and %d pixels down every frame. "
                  "The lighting stays even and the texture of the sprite is finely patterned.",
                  size_word.c_str(), s.color_name.c_str(), shape.c_str(), dir(s.vx, s.vy).c_str(),
                  tex.c_str(), s.vx, s.vy);
    return buf;
}

inline VideoClip gen_clip(const SyntheticScene& scene, Rng& rng) {
    scene.validate();
    VideoClip clip;
    clip.caption = scene_caption(scene);
    clip.manifest.frames = scene.frames;
    clip.manifest.height = scene.h;
    clip.manifest.width = scene.w;
    clip.manifest.caption = clip.caption;
    clip.manifest.id = "clip-" + std::to_string(rng.raw() % 100000000ull);

    clip.flow = FlowField(scene.frames - 1, scene.h, scene.w);
    for (int fi = 0; fi < scene.frames; ++fi) {
        Image frame(scene.h, scene.w, 3);
        BinaryMask mask(scene.h, scene.w, 0);
        int sx = scene.x0 + scene.vx * fi, sy = scene.y0 + scene.vy * fi;
        for (int y = 0; y < scene.h; ++y)
            for (int x = 0; x < scene.w; ++x) {
                std::uint8_t px[3];
                detail::bg_pixel(scene.texture, y, x, px);
                int u = x - sx, v = y - sy;
                if (u >= 0 && u < scene.size && v >= 0 && v < scene.size &&
                    detail::sprite_hit(scene.shape, u, v, scene.size)) {
                    double sh = detail::sprite_shade(u, v);
                    for (int c = 0; c < 3; ++c)
                        px[c] = static_cast<std::uint8_t>(std::min(255.0, scene.color[c] * sh));
                    mask.at(y, x) = 1;
                    if (fi < scene.frames - 1) {
                        clip.flow.at(fi, y, x, 0) = static_cast<float>(scene.vx);
                        clip.flow.at(fi, y, x, 1) = static_cast<float>(scene.vy);
                    }
                }
                for (int c = 0; c < 3; ++c) frame.at(y, x, c) = px[c];
            }
        clip.frames.push_back(std::move(frame));
        clip.masks.push_back(std::move(mask));
    }
    return clip;
}

// uniformly random valid scene at desk dims
inline SyntheticScene random_scene(Rng& rng, int frames = 8, int h = 32, int w = 32) {
    static const struct { const char* name; int rgb[3]; } palette[] = {
        {"red", {210, 60, 50}},  {"green", {60, 190, 80}}, {"blue", {60, 90, 210}},
        {"yellow", {220, 200, 60}}, {"violet", {160, 70, 200}}, {"orange", {230, 140, 40}},
    };
    SyntheticScene s;
    s.frames = frames; s.h = h; s.w = w;
    s.shape = rng.uniform_int(0, 1) ? SpriteShape::Disc : SpriteShape::Square;
    int ci = static_cast<int>(rng.uniform_int(0, 5));
    s.color_name = palette[ci].name;
    for (int c = 0; c < 3; ++c) s.color[c] = palette[ci].rgb[c];
    s.size = static_cast<int>(rng.uniform_int(12, 16));
    s.texture = static_cast<BgTexture>(rng.uniform_int(0, 2));
    for (int attempt = 0; attempt < 100; ++attempt) {
        s.vx = static_cast<int>(rng.uniform_int(-2, 2));
        s.vy = static_cast<int>(rng.uniform_int(-2, 2));
        int span_x = std::abs(s.vx) * (frames - 1), span_y = std::abs(s.vy) * (frames - 1);
        if (s.size + span_x > w || s.size + span_y > h) continue;
        s.x0 = static_cast<int>(rng.uniform_int(std::max(0, -s.vx * (frames - 1)),
                                                w - s.size - std::max(0, s.vx * (frames - 1))));
        s.y0 = static_cast<int>(rng.uniform_int(std::max(0, -s.vy * (frames - 1)),
                                                h - s.size - std::max(0, s.vy * (frames - 1))));
        return s;
    }
    s.vx = 1; s.vy = 0; s.x0 = 2; s.y0 = 2;
    return s;
}

// ---------------------------------------------------------------------------
// clip persistence

namespace detail {
inline std::string frame_name(const char* stem, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%05d.png", stem, i);
    return buf;
}
}  // namespace detail

inline void save_clip(const VideoClip& clip, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < clip.frames.size(); ++i)
        write_png(dir + "/" + detail::frame_name("frame", static_cast<int>(i)), clip.frames[i]);
    for (std::size_t i = 0; i < clip.masks.size(); ++i) {
        Image m(clip.masks[i].h, clip.masks[i].w, 1);
        for (std::size_t k = 0; k < m.px.size(); ++k) m.px[k] = clip.masks[i].v[k] ? 255 : 0;
        write_png(dir + "/" + detail::frame_name("mask", static_cast<int>(i)), m);
    }
    save_flow(clip.flow, dir + "/flow.bin");
    nlohmann::json j = {{"id", clip.manifest.id},
                        {"frames", clip.manifest.frames},
                        {"height", clip.manifest.height},
                        {"width", clip.manifest.width},
                        {"caption", clip.manifest.caption},
                        {"provenance", clip.manifest.provenance},
                        {"format_version", clip.manifest.format_version},
                        {"fps", clip.manifest.fps}};
    std::ofstream os(dir + "/manifest.json");
    os << j.dump(2) << "\n";
}

inline VideoClip load_clip(const std::string& dir) {
    std::string mpath = dir + "/manifest.json";
    if (!std::filesystem::exists(mpath)) throw MissingFileError("load_clip: missing " + mpath);
    nlohmann::json j;
    {
        std::ifstream is(mpath);
        try {
            is >> j;
        } catch (const nlohmann::json::exception&) {
            throw CorruptFileError("load_clip: unparsable manifest " + mpath);
        }
    }
    VideoClip clip;
    clip.manifest.id = j.at("id").get<std::string>();
    clip.manifest.frames = j.at("frames").get<int>();
    clip.manifest.height = j.at("height").get<int>();
    clip.manifest.width = j.at("width").get<int>();
    clip.manifest.caption = j.at("caption").get<std::string>();
    clip.manifest.provenance = j.at("provenance").get<std::string>();
    clip.manifest.format_version = j.at("format_version").get<int>();
    clip.manifest.fps = j.value("fps", 8);
    if (clip.manifest.format_version != kClipFormatVersion)
        throw VersionMismatchError("load_clip: manifest format_version " +
                                   std::to_string(clip.manifest.format_version));
    clip.caption = clip.manifest.caption;
    for (int i = 0; i < clip.manifest.frames; ++i) {
        clip.frames.push_back(read_png(dir + "/" + detail::frame_name("frame", i)));
        Image m = read_png(dir + "/" + detail::frame_name("mask", i));
        BinaryMask bm(m.h, m.w);
        for (std::size_t k = 0; k < m.px.size(); ++k) bm.v[k] = m.px[k] >= 128 ? 1 : 0;
        clip.masks.push_back(std::move(bm));
    }
    clip.flow = load_flow(dir + "/flow.bin");
    return clip;
}

// corpus = directory of clip directories + corpus.json with ids and split tags
struct CorpusEntry {
    std::string id;
    std::string split = "train";
};

inline void save_corpus_index(const std::vector<CorpusEntry>& entries, const std::string& dir) {
    nlohmann::json j;
    j["clips"] = nlohmann::json::array();
    for (const auto& e : entries) j["clips"].push_back({{"id", e.id}, {"split", e.split}});
    std::ofstream os(dir + "/corpus.json");
    os << j.dump(2) << "\n";
}

inline std::vector<CorpusEntry> load_corpus_index(const std::string& dir) {
    std::string path = dir + "/corpus.json";
    if (!std::filesystem::exists(path)) throw MissingFileError("load_corpus_index: missing " + path);
    nlohmann::json j;
    std::ifstream is(path);
    is >> j;
    std::vector<CorpusEntry> out;
    for (const auto& e : j.at("clips"))
        out.push_back({e.at("id").get<std::string>(), e.at("split").get<std::string>()});
    return out;
}

// ---------------------------------------------------------------------------
// batch assembly

inline Latent frames_to_latent(const std::vector<Image>& frames) {
    const Image& f0 = frames[0];
    Latent l(static_cast<int>(frames.size()), f0.h, f0.w, f0.c);
    std::size_t k = 0;
    for (const auto& fr : frames)
        for (std::uint8_t p : fr.px) l.v[k++] = normalize_px(p);
    return l;
}

inline Latent imagef_to_latent(const ImageF& im) {
    Latent l(1, im.h, im.w, im.c);
    for (std::size_t i = 0; i < im.v.size(); ++i) l.v[i] = normalize_px(im.v[i]);
    return l;
}

inline Latent latent_to_frames_latent(const Latent& tokens, int patch, int channels) {
    return unpatchify(tokens, patch, channels);
}

inline std::vector<Image> latent_to_frames(const Latent& pixels) {
    std::vector<Image> out;
    for (int fi = 0; fi < pixels.f; ++fi) {
        Image im(pixels.h, pixels.w, pixels.c);
        std::size_t base = static_cast<std::size_t>(fi) * pixels.h * pixels.w * pixels.c;
        for (std::size_t k = 0; k < im.px.size(); ++k) {
            double v = denormalize_px(pixels.v[base + k]);
            if (v < 0.0) v = 0.0;
            if (v > 255.0) v = 255.0;
            im.px[k] = static_cast<std::uint8_t>(v + 0.5);
        }
        out.push_back(std::move(im));
    }
    return out;
}

// single-image tokens repeated over f temporal slots
inline Mat repeat_frame_tokens(const Latent& one_frame_tokens, int f) {
    Mat m = latent_to_mat(one_frame_tokens);
    Mat out(m.rows() * f, m.cols());
    for (int i = 0; i < f; ++i) out.middleRows(i * m.rows(), m.rows()) = m;
    return out;
}

struct BatchOptions {
    double flow_sigma = 0.1;   // 0 disables flow-noise injection
    int dilation_radius = 2;   // pretrain background complement
    int boundary_margin = 1;
    double coverage = 0.5;
    int max_iter = 500;
};

struct Batch {
    Latent z0, zt, eps;
    CondInputs cond;
    std::string prompt;   // fine caption; CoP routing happens in the trainer
    int t = 0;
    int ref_frame = 0;
};

// Assembles everything forward() needs from one clip. Never mutates the clip.
inline Batch make_batch(const VideoClip& clip, SplitMode mode, int t, Rng& rng,
                        const NoiseSchedule& sched, const DimsConfig& dims,
                        const BatchOptions& opt = {}) {
    if (t < 1 || t > sched.T) throw TimestepError("make_batch: t out of [1,T]");
    const int f = static_cast<int>(clip.frames.size());
    const Image& f0 = clip.frames[0];

    Batch b;
    b.t = t;
    b.prompt = clip.caption;
    b.ref_frame = static_cast<int>(rng.uniform_int(0, f - 1));
    ImageF ref = ImageF::from(clip.frames[b.ref_frame]);

    ImageF fg, bg;
    if (mode == SplitMode::Pretrain) {
        int min_block = std::max(2, f0.h / 8), max_block = std::max(min_block, f0.h / 4);
        auto r = random_block_mask(ref, opt.coverage, min_block, max_block, opt.boundary_margin,
                                   opt.max_iter, rng);
        fg = std::move(r.foreground);
        bg = std::move(r.background);
    } else {
        auto d = split_frame(ref, clip.masks[b.ref_frame], SplitMode::Finetune);
        fg = std::move(d.foreground);
        bg = std::move(d.background);
    }

    b.cond.z_f = repeat_frame_tokens(patchify(imagef_to_latent(fg), dims.patch), f);
    b.cond.z_b = repeat_frame_tokens(patchify(imagef_to_latent(bg), dims.patch), f);
    b.cond.text = text_query(clip.caption, dims);
    FlowField flow = (opt.flow_sigma > 0.0) ? perturb_flow(clip.flow, opt.flow_sigma, rng) : clip.flow;
    b.cond.flow_px = flow_to_mat(flow, f);
    b.cond.frames = f;
    b.cond.flow_h = f0.h;
    b.cond.flow_w = f0.w;

    b.z0 = patchify(frames_to_latent(clip.frames), dims.patch);
    b.eps = Latent(b.z0.f, b.z0.h, b.z0.w, b.z0.c, LatentRole::Noise);
    for (auto& x : b.eps.v) x = rng.normal();
    b.zt = q_sample(b.z0, t, b.eps, sched);
    return b;
}

}  // namespace dsd

#endif
