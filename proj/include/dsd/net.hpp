#ifndef DSD_NET_HPP
#define DSD_NET_HPP

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsd/autodiff.hpp"
#include "dsd/common.hpp"
#include "dsd/flow.hpp"
#include "dsd/image.hpp"
#include "dsd/schedule.hpp"

namespace dsd {

struct DimsConfig {
    int patch = 4;
    int width = 64;       // token embedding width d
    int heads = 4;
    int depth = 2;        // DiT blocks per stack
    int mlp_hidden = 128;
    int vocab = 1024;     // hashed text-embedding buckets
    int channels = 3;     // pixel channels

    int latent_channels() const { return patch * patch * channels; }

    bool operator==(const DimsConfig& o) const {
        return patch == o.patch && width == o.width && heads == o.heads && depth == o.depth &&
               mlp_hidden == o.mlp_hidden && vocab == o.vocab && channels == o.channels;
    }
};

inline void to_json(nlohmann::json& j, const DimsConfig& d) {
    j = {{"patch", d.patch}, {"width", d.width}, {"heads", d.heads}, {"depth", d.depth},
         {"mlp_hidden", d.mlp_hidden}, {"vocab", d.vocab}, {"channels", d.channels}};
}
inline void from_json(const nlohmann::json& j, DimsConfig& d) {
    j.at("patch").get_to(d.patch);
    j.at("width").get_to(d.width);
    j.at("heads").get_to(d.heads);
    j.at("depth").get_to(d.depth);
    j.at("mlp_hidden").get_to(d.mlp_hidden);
    j.at("vocab").get_to(d.vocab);
    j.at("channels").get_to(d.channels);
}

// ---------------------------------------------------------------------------
// patch embedding (invertible rearrangement, pixel-space latents)

// (f, h, w, c) pixels -> (f, h/p, w/p, p*p*c) tokens
inline Latent patchify(const Latent& pixels, int patch) {
    if (pixels.h % patch != 0 || pixels.w % patch != 0)
        throw ShapeError("patchify: dims not divisible by patch");
    int gh = pixels.h / patch, gw = pixels.w / patch;
    Latent out(pixels.f, gh, gw, patch * patch * pixels.c);
    for (int fi = 0; fi < pixels.f; ++fi)
        for (int y = 0; y < pixels.h; ++y)
            for (int x = 0; x < pixels.w; ++x)
                for (int c = 0; c < pixels.c; ++c) {
                    int gy = y / patch, gx = x / patch;
                    int py = y % patch, px = x % patch;
                    int d = (py * patch + px) * pixels.c + c;
                    out.v[(((static_cast<std::size_t>(fi) * gh + gy) * gw + gx) * out.c) + d] =
                        pixels.v[(((static_cast<std::size_t>(fi) * pixels.h + y) * pixels.w + x) * pixels.c) + c];
                }
    return out;
}

inline Latent unpatchify(const Latent& tokens, int patch, int channels) {
    if (tokens.c != patch * patch * channels)
        throw ShapeError("unpatchify: channel count does not match patch/channels");
    Latent out(tokens.f, tokens.h * patch, tokens.w * patch, channels);
    for (int fi = 0; fi < tokens.f; ++fi)
        for (int gy = 0; gy < tokens.h; ++gy)
            for (int gx = 0; gx < tokens.w; ++gx)
                for (int d = 0; d < tokens.c; ++d) {
                    int c = d % channels;
                    int p = d / channels;
                    int py = p / patch, px = p % patch;
                    int y = gy * patch + py, x = gx * patch + px;
                    out.v[(((static_cast<std::size_t>(fi) * out.h + y) * out.w + x) * channels) + c] =
                        tokens.v[(((static_cast<std::size_t>(fi) * tokens.h + gy) * tokens.w + gx) * tokens.c) + d];
                }
    return out;
}

inline Mat latent_to_mat(const Latent& l) {
    Mat m(static_cast<Eigen::Index>(l.f) * l.h * l.w, l.c);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (int j = 0; j < l.c; ++j) m(i, j) = l.v[static_cast<std::size_t>(i) * l.c + j];
    return m;
}

inline Latent mat_to_latent(const Mat& m, int f, int h, int w, LatentRole role = LatentRole::Prediction) {
    Latent l(f, h, w, static_cast<int>(m.cols()), role);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) l.v[static_cast<std::size_t>(i) * m.cols() + j] = m(i, j);
    return l;
}

// ---------------------------------------------------------------------------
// parameters

struct ModelParams {
    DimsConfig dims;
    std::map<std::string, Mat> w;

    const Mat& at(const std::string& n) const {
        auto it = w.find(n);
        if (it == w.end()) throw InvalidArgument("ModelParams: unknown parameter " + n);
        return it->second;
    }

    std::map<std::string, std::size_t> count_per_group() const {
        std::map<std::string, std::size_t> out;
        for (const auto& [name, m] : w)
            out[name.substr(0, name.find('.'))] += static_cast<std::size_t>(m.size());
        return out;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& [k, m] : w) n += static_cast<std::size_t>(m.size());
        return n;
    }
};

inline ModelParams init_params(const DimsConfig& dims, Rng& rng) {
    ModelParams p;
    p.dims = dims;
    const int d = dims.width, cl = dims.latent_channels(), mh = dims.mlp_hidden;
    auto randm = [&](int r, int c) {
        Mat m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = 0.02 * rng.normal();
        return m;
    };
    auto zero = [](int r, int c) { return Mat::Zero(r, c); };

    p.w["embed.text.table"] = randm(dims.vocab, d);
    p.w["embed.text.null"] = randm(1, d);
    p.w["embed.time.w1"] = randm(d, d);
    p.w["embed.time.b1"] = zero(1, d);
    p.w["embed.time.w2"] = randm(d, d);
    p.w["embed.time.b2"] = zero(1, d);

    p.w["fg.in.w"] = randm(cl, d);
    p.w["fg.in.b"] = zero(1, d);
    p.w["bg.in.w"] = randm(2 * cl, d);
    p.w["bg.in.b"] = zero(1, d);
    p.w["single.in.w"] = randm(3 * cl, d);
    p.w["single.in.b"] = zero(1, d);

    for (const std::string& stack : {"fg", "bg", "fuse"})
        for (int i = 0; i < dims.depth; ++i) {
            std::string P = stack + ".blk" + std::to_string(i) + ".";
            p.w[P + "mod.w"] = zero(d, 4 * d);  // identity scale/shift at init
            p.w[P + "mod.b"] = zero(1, 4 * d);
            p.w[P + "attn.qkv.w"] = randm(d, 3 * d);
            p.w[P + "attn.qkv.b"] = zero(1, 3 * d);
            p.w[P + "attn.out.w"] = randm(d, d);
            p.w[P + "attn.out.b"] = zero(1, d);
            p.w[P + "mlp.w1"] = randm(d, mh);
            p.w[P + "mlp.b1"] = zero(1, mh);
            p.w[P + "mlp.w2"] = randm(mh, d);
            p.w[P + "mlp.b2"] = zero(1, d);
        }

    for (int i = 0; i < dims.depth; ++i) {
        p.w["zconv." + std::to_string(i) + ".w"] = zero(d, d);
        p.w["zconv." + std::to_string(i) + ".b"] = zero(1, d);
        p.w["zgate." + std::to_string(i) + ".w"] = zero(d, d);
        p.w["zgate." + std::to_string(i) + ".b"] = zero(1, d);
    }

    // four flow-encoder stages; strides (2,2,1,1) match the patch-grid factor
    p.w["flow.stage1.w"] = randm(8, 16);
    p.w["flow.stage1.b"] = zero(1, 16);
    p.w["flow.stage2.w"] = randm(64, 32);
    p.w["flow.stage2.b"] = zero(1, 32);
    p.w["flow.stage3.w"] = randm(32, 48);
    p.w["flow.stage3.b"] = zero(1, 48);
    p.w["flow.stage4.w"] = randm(48, d);
    p.w["flow.stage4.b"] = zero(1, d);
    p.w["flow.mod.w"] = zero(d, 2 * d);
    p.w["flow.mod.b"] = zero(1, 2 * d);

    p.w["out.w"] = randm(d, cl);
    p.w["out.b"] = zero(1, cl);
    return p;
}

// ---------------------------------------------------------------------------
// text embedding: hashed buckets with a per-token sign pattern

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
}  // namespace detail

struct TextQuery {
    bool null_text = true;
    Mat gather;  // k x vocab 0/1 row-selection
    Mat signs;   // k x width, +-1 per dimension from the token hash
};

inline TextQuery text_query(const std::string& prompt, const DimsConfig& dims) {
    std::istringstream is(prompt);
    std::vector<std::string> toks;
    std::string t;
    while (is >> t) toks.push_back(t);
    TextQuery q;
    if (toks.empty()) return q;  // null embedding
    q.null_text = false;
    q.gather = Mat::Zero(static_cast<Eigen::Index>(toks.size()), dims.vocab);
    q.signs = Mat(static_cast<Eigen::Index>(toks.size()), dims.width);
    for (std::size_t i = 0; i < toks.size(); ++i) {
        std::uint64_t h = fnv1a64(toks[i]);
        q.gather(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h % dims.vocab)) = 1.0;
        std::uint64_t bits = detail::splitmix64(h);
        for (int j = 0; j < dims.width; ++j) {
            q.signs(static_cast<Eigen::Index>(i), j) = (bits & 1ull) ? 1.0 : -1.0;
            bits = (j % 64 == 63) ? detail::splitmix64(bits + j) : (bits >> 1);
        }
    }
    return q;
}

// Deterministic embedding without a graph (inspection / collision checks).
inline Mat text_embed(const std::string& prompt, const ModelParams& p) {
    TextQuery q = text_query(prompt, p.dims);
    if (q.null_text) return p.at("embed.text.null");
    Mat rows = q.gather * p.at("embed.text.table");
    Mat signed_rows = rows.cwiseProduct(q.signs);
    return signed_rows.colwise().mean();
}

// ---------------------------------------------------------------------------
// forward pass

struct NetToggles {
    bool early_motion_injection = false;
    bool no_dual_stream = false;
};

struct CondInputs {
    Mat z_f;          // tokens x latent_channels, no noise
    Mat z_b;          // tokens x latent_channels
    TextQuery text;
    Mat flow_px;      // (f*h*w) x 2 flow components, final slot repeated to f frames
    int frames = 0, flow_h = 0, flow_w = 0;
};

// (f*h*w) x 2 matrix from a flow field, last pair repeated to reach `frames`
// temporal slots, components scaled into roughly unit range.
inline Mat flow_to_mat(const FlowField& flow, int frames, double scale = 1.0 / 8.0) {
    if (flow.pairs < 1) throw ShapeError("flow_to_mat: empty flow");
    Mat m(static_cast<Eigen::Index>(frames) * flow.h * flow.w, 2);
    for (int fi = 0; fi < frames; ++fi) {
        int p = std::min(fi, flow.pairs - 1);
        for (int y = 0; y < flow.h; ++y)
            for (int x = 0; x < flow.w; ++x) {
                Eigen::Index r = (static_cast<Eigen::Index>(fi) * flow.h + y) * flow.w + x;
                m(r, 0) = flow.at(p, y, x, 0) * scale;
                m(r, 1) = flow.at(p, y, x, 1) * scale;
            }
    }
    return m;
}

namespace detail {

// stride-s space-to-depth index map for frame-major (f, h, w, c) rows
inline std::vector<long> s2d_index(int f, int h, int w, int c, int s) {
    int oh = h / s, ow = w / s, oc = c * s * s;
    std::vector<long> idx(static_cast<std::size_t>(f) * oh * ow * oc);
    for (int fi = 0; fi < f; ++fi)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
                for (int dy = 0; dy < s; ++dy)
                    for (int dx = 0; dx < s; ++dx)
                        for (int ch = 0; ch < c; ++ch) {
                            long src_row = (static_cast<long>(fi) * h + (y * s + dy)) * w + (x * s + dx);
                            long dst_row = (static_cast<long>(fi) * oh + y) * ow + x;
                            int dst_col = (dy * s + dx) * c + ch;
                            idx[static_cast<std::size_t>(dst_row) * oc + dst_col] = src_row * c + ch;
                        }
    return idx;
}

// fixed sinusoidal positional table over flat token index
inline Mat pos_enc(Eigen::Index n, int dim) {
    Mat pe(n, dim);
    int half = dim / 2;
    for (Eigen::Index i = 0; i < n; ++i)
        for (int k = 0; k < half; ++k) {
            double freq = std::exp(-std::log(10000.0) * k / half);
            pe(i, k) = std::sin(static_cast<double>(i) * freq);
            pe(i, half + k) = std::cos(static_cast<double>(i) * freq);
        }
    return pe;
}

inline int sinusoidal_node(Graph& g, int t, int dim) {
    Mat e(1, dim);
    int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * i / half);
        e(0, i) = std::sin(t * freq);
        e(0, half + i) = std::cos(t * freq);
    }
    return g.input(e);
}

inline int linear(Graph& g, int x, const ModelParams& p, const std::string& w, const std::string& b) {
    return g.add_row(g.matmul(x, g.param(w, p.at(w))), g.param(b, p.at(b)));
}

// LN(x) * (1+scale) + shift with 1xC scale/shift rows
inline int mod_layernorm(Graph& g, int x, int scale_row, int shift_row, int width) {
    int a = g.layernorm(x);
    int s1p = g.add(scale_row, g.input(Mat::Ones(1, width)));
    return g.add_row(g.mul_row(a, s1p), shift_row);
}

inline int dit_block(Graph& g, int x, int t_emb, const ModelParams& p, const std::string& prefix) {
    const int d = p.dims.width, H = p.dims.heads, hd = d / H;
    int mod = linear(g, t_emb, p, prefix + "mod.w", prefix + "mod.b");
    int s1 = g.slice_cols(mod, 0, d), b1 = g.slice_cols(mod, d, d);
    int s2 = g.slice_cols(mod, 2 * d, d), b2 = g.slice_cols(mod, 3 * d, d);

    int a = mod_layernorm(g, x, s1, b1, d);
    int qkv = linear(g, a, p, prefix + "attn.qkv.w", prefix + "attn.qkv.b");
    int heads_out = -1;
    for (int h = 0; h < H; ++h) {
        int q = g.slice_cols(qkv, h * hd, hd);
        int k = g.slice_cols(qkv, d + h * hd, hd);
        int v = g.slice_cols(qkv, 2 * d + h * hd, hd);
        int att = g.softmax_rows(g.scale(g.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(hd))));
        int o = g.matmul(att, v);
        heads_out = (h == 0) ? o : g.concat_cols(heads_out, o);
    }
    x = g.add(x, linear(g, heads_out, p, prefix + "attn.out.w", prefix + "attn.out.b"));

    int m = mod_layernorm(g, x, s2, b2, d);
    m = g.gelu(linear(g, m, p, prefix + "mlp.w1", prefix + "mlp.b1"));
    m = linear(g, m, p, prefix + "mlp.w2", prefix + "mlp.b2");
    return g.add(x, m);
}

}  // namespace detail

inline int time_embed_node(Graph& g, int t, const ModelParams& p) {
    int e = detail::sinusoidal_node(g, t, p.dims.width);
    e = g.gelu(detail::linear(g, e, p, "embed.time.w1", "embed.time.b1"));
    return detail::linear(g, e, p, "embed.time.w2", "embed.time.b2");
}

inline int text_embed_node(Graph& g, const TextQuery& q, const ModelParams& p) {
    if (q.null_text) return g.param("embed.text.null", p.at("embed.text.null"));
    int rows = g.matmul(g.input(q.gather), g.param("embed.text.table", p.at("embed.text.table")));
    int sr = g.mul(rows, g.input(q.signs));
    Mat pool = Mat::Constant(1, q.gather.rows(), 1.0 / static_cast<double>(q.gather.rows()));
    return g.matmul(g.input(pool), sr);
}

// four stages, strides (2,2,1,1); output grid equals the fusion token grid
inline int flow_encode_node(Graph& g, const CondInputs& cond, const ModelParams& p) {
    int x = g.input(cond.flow_px);
    int f = cond.frames, h = cond.flow_h, w = cond.flow_w;
    x = g.reindex(x, f * (h / 2) * (w / 2), 8, detail::s2d_index(f, h, w, 2, 2));
    x = g.gelu(detail::linear(g, x, p, "flow.stage1.w", "flow.stage1.b"));
    h /= 2; w /= 2;
    x = g.reindex(x, f * (h / 2) * (w / 2), 64, detail::s2d_index(f, h, w, 16, 2));
    x = g.gelu(detail::linear(g, x, p, "flow.stage2.w", "flow.stage2.b"));
    x = g.gelu(detail::linear(g, x, p, "flow.stage3.w", "flow.stage3.b"));
    return detail::linear(g, x, p, "flow.stage4.w", "flow.stage4.b");
}

// Dual-to-single-stream denoiser. Returns the node holding predicted noise
// (tokens x latent_channels).
inline int forward(Graph& g, const Mat& z_t, const CondInputs& cond, int t,
                   const ModelParams& p, const NetToggles& tg = {}) {
    const int d = p.dims.width, N = p.dims.depth;
    const Eigen::Index n_tok = z_t.rows();
    if (cond.z_f.rows() != n_tok || cond.z_b.rows() != n_tok)
        throw ShapeError("forward: condition token grids must match z_t");
    if (static_cast<Eigen::Index>(cond.frames) * (cond.flow_h / 4) * (cond.flow_w / 4) != n_tok)
        throw ShapeError("forward: flow grid does not downsample to the token grid");

    int t_emb = time_embed_node(g, t, p);
    int z_tau = text_embed_node(g, cond.text, p);

    Mat pe_seq = Mat::Zero(n_tok + 1, d);  // zero row at the text-token slot
    pe_seq.bottomRows(n_tok) = detail::pos_enc(n_tok, d);
    int pe_node = g.input(pe_seq);

    int x;  // noised stream, text token prepended (row 0)
    std::vector<int> fg_outs;
    if (!tg.no_dual_stream) {
        int fg = detail::linear(g, g.input(cond.z_f), p, "fg.in.w", "fg.in.b");
        fg = g.add(g.concat_rows(z_tau, fg), pe_node);
        for (int i = 0; i < N; ++i) {
            fg = detail::dit_block(g, fg, t_emb, p, "fg.blk" + std::to_string(i) + ".");
            fg_outs.push_back(fg);
        }
        int bg = g.concat_cols(g.input(z_t), g.input(cond.z_b));
        x = g.add(g.concat_rows(z_tau, detail::linear(g, bg, p, "bg.in.w", "bg.in.b")), pe_node);
        for (int i = 0; i < N; ++i) {
            x = detail::dit_block(g, x, t_emb, p, "bg.blk" + std::to_string(i) + ".");
            std::string zi = "zconv." + std::to_string(i) + ".";
            x = g.add(x, detail::linear(g, fg_outs[i], p, zi + "w", zi + "b"));
        }
    } else {
        int all = g.concat_cols(g.concat_cols(g.input(z_t), g.input(cond.z_f)), g.input(cond.z_b));
        x = g.add(g.concat_rows(z_tau, detail::linear(g, all, p, "single.in.w", "single.in.b")), pe_node);
        for (int i = 0; i < N; ++i)
            x = detail::dit_block(g, x, t_emb, p, "bg.blk" + std::to_string(i) + ".");
    }

    // fusion stack with per-block flow injection through zero-init gates
    int z_o = flow_encode_node(g, cond, p);
    int fmod = detail::linear(g, t_emb, p, "flow.mod.w", "flow.mod.b");
    int zo_mod = detail::mod_layernorm(g, z_o, g.slice_cols(fmod, 0, d), g.slice_cols(fmod, d, d), d);
    std::vector<long> pad_idx(static_cast<std::size_t>(n_tok + 1) * d);
    for (int j = 0; j < d; ++j) pad_idx[j] = -1;  // zero row at the text-token slot
    for (Eigen::Index i = 0; i < n_tok; ++i)
        for (int j = 0; j < d; ++j) pad_idx[static_cast<std::size_t>(i + 1) * d + j] = i * d + j;

    for (int i = 0; i < N; ++i) {
        bool inject = tg.early_motion_injection ? (i == 0) : true;
        if (inject) {
            std::string zi = "zgate." + std::to_string(i) + ".";
            int inj = detail::linear(g, zo_mod, p, zi + "w", zi + "b");
            x = g.add(x, g.reindex(inj, static_cast<int>(n_tok) + 1, d, pad_idx));
        }
        x = detail::dit_block(g, x, t_emb, p, "fuse.blk" + std::to_string(i) + ".");
    }

    x = g.layernorm(x);
    x = detail::linear(g, x, p, "out.w", "out.b");
    return g.slice_rows(x, 1, static_cast<int>(n_tok));  // drop the text token
}

// ---------------------------------------------------------------------------
// checkpoint container: magic, format version, JSON metadata, named arrays

constexpr char kContainerMagic[8] = {'D', 'S', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kContainerVersion = 1;

inline void write_container(const std::string& path, const nlohmann::json& meta,
                            const std::map<std::string, Mat>& arrays) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingFileError("write_container: cannot open " + path);
    os.write(kContainerMagic, 8);
    std::uint32_t ver = kContainerVersion;
    os.write(reinterpret_cast<const char*>(&ver), 4);
    std::string m = meta.dump();
    std::uint32_t mlen = static_cast<std::uint32_t>(m.size());
    os.write(reinterpret_cast<const char*>(&mlen), 4);
    os.write(m.data(), mlen);
    std::uint32_t n = static_cast<std::uint32_t>(arrays.size());
    os.write(reinterpret_cast<const char*>(&n), 4);
    for (const auto& [name, mat] : arrays) {
        std::uint32_t nl = static_cast<std::uint32_t>(name.size());
        std::uint32_t r = static_cast<std::uint32_t>(mat.rows());
        std::uint32_t c = static_cast<std::uint32_t>(mat.cols());
        os.write(reinterpret_cast<const char*>(&nl), 4);
        os.write(name.data(), nl);
        os.write(reinterpret_cast<const char*>(&r), 4);
        os.write(reinterpret_cast<const char*>(&c), 4);
        for (std::uint32_t i = 0; i < r; ++i)
            for (std::uint32_t j = 0; j < c; ++j) {
                double v = mat(i, j);
                os.write(reinterpret_cast<const char*>(&v), 8);
            }
    }
    if (!os) throw CorruptFileError("write_container: write failure for " + path);
}

inline std::pair<nlohmann::json, std::map<std::string, Mat>> read_container(const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("read_container: missing file " + path);
    std::ifstream is(path, std::ios::binary);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kContainerMagic, 8) != 0)
        throw CorruptFileError("read_container: bad magic in " + path);
    std::uint32_t ver = 0, mlen = 0, n = 0;
    is.read(reinterpret_cast<char*>(&ver), 4);
    if (ver != kContainerVersion)
        throw VersionMismatchError("read_container: format version " + std::to_string(ver));
    is.read(reinterpret_cast<char*>(&mlen), 4);
    std::string m(mlen, '\0');
    is.read(m.data(), mlen);
    is.read(reinterpret_cast<char*>(&n), 4);
    if (!is) throw CorruptFileError("read_container: truncated header in " + path);
    std::map<std::string, Mat> arrays;
    for (std::uint32_t k = 0; k < n; ++k) {
        std::uint32_t nl = 0, r = 0, c = 0;
        is.read(reinterpret_cast<char*>(&nl), 4);
        std::string name(nl, '\0');
        is.read(name.data(), nl);
        is.read(reinterpret_cast<char*>(&r), 4);
        is.read(reinterpret_cast<char*>(&c), 4);
        if (!is) throw CorruptFileError("read_container: truncated array header in " + path);
        Mat mat(r, c);
        for (std::uint32_t i = 0; i < r; ++i)
            for (std::uint32_t j = 0; j < c; ++j) {
                double v;
                is.read(reinterpret_cast<char*>(&v), 8);
                mat(i, j) = v;
            }
        if (!is) throw CorruptFileError("read_container: truncated array data in " + path);
        arrays[name] = std::move(mat);
    }
    return {nlohmann::json::parse(m), arrays};
}

inline void save_params(const ModelParams& p, const std::string& path) {
    nlohmann::json meta;
    meta["kind"] = "model";
    meta["dims"] = p.dims;
    write_container(path, meta, p.w);
}

inline ModelParams load_params(const std::string& path) {
    auto [meta, arrays] = read_container(path);
    ModelParams p;
    p.dims = meta.at("dims").get<DimsConfig>();
    p.w = std::move(arrays);
    return p;
}

}  // namespace dsd

#endif
