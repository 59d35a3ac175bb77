#ifndef DSD_FLOW_HPP
#define DSD_FLOW_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dsd/common.hpp"
#include "dsd/image.hpp"

namespace dsd {

// Forward flow, one slot per adjacent-frame pair, (dx, dy) in pixels/frame.
struct FlowField {
    int pairs = 0, h = 0, w = 0;
    std::vector<float> v;  // [pair][y][x][2]

    FlowField() = default;
    FlowField(int pairs_, int h_, int w_)
        : pairs(pairs_), h(h_), w(w_), v(static_cast<std::size_t>(pairs_) * h_ * w_ * 2, 0.0f) {}

    float& at(int p, int y, int x, int k) {
        return v[((static_cast<std::size_t>(p) * h + y) * w + x) * 2 + k];
    }
    float at(int p, int y, int x, int k) const {
        return v[((static_cast<std::size_t>(p) * h + y) * w + x) * 2 + k];
    }

    double std_dev() const {
        if (v.empty()) return 0.0;
        double mean = 0.0;
        for (float x : v) mean += x;
        mean /= v.size();
        double acc = 0.0;
        for (float x : v) acc += (x - mean) * (x - mean);
        return std::sqrt(acc / v.size());
    }
};

namespace detail {
// periodic (wrap) pixel fetch; matches the wrap-around synthetic textures
inline std::uint8_t wrap_px(const Image& im, int y, int x, int c) {
    y = ((y % im.h) + im.h) % im.h;
    x = ((x % im.w) + im.w) % im.w;
    return im.at(y, x, c);
}
}  // namespace detail

// Block matching: for every pixel, exhaustively search displacements within
// search_radius minimizing sum-of-absolute-differences over a block-sized
// window centered at the pixel. Zero displacement wins ties.
inline FlowField estimate_flow(const std::vector<Image>& frames, int block = 4,
                               int search_radius = 4) {
    if (frames.size() < 2) throw InvalidArgument("estimate_flow: need at least 2 frames");
    const Image& f0 = frames[0];
    if (block > std::min(f0.h, f0.w)) throw InvalidArgument("estimate_flow: block too large");
    const int r0 = -(block - 1) / 2;  // window [r0, r0+block) around the pixel
    FlowField flow(static_cast<int>(frames.size()) - 1, f0.h, f0.w);

    for (int p = 0; p < flow.pairs; ++p) {
        const Image& a = frames[p];
        const Image& b = frames[p + 1];
        for (int y = 0; y < a.h; ++y)
            for (int x = 0; x < a.w; ++x) {
                auto sad = [&](int dy, int dx) {
                    long s = 0;
                    for (int wy = r0; wy < r0 + block; ++wy)
                        for (int wx = r0; wx < r0 + block; ++wx)
                            for (int c = 0; c < a.c; ++c) {
                                int d = static_cast<int>(detail::wrap_px(a, y + wy, x + wx, c)) -
                                        static_cast<int>(detail::wrap_px(b, y + wy + dy, x + wx + dx, c));
                                s += d < 0 ? -d : d;
                            }
                    return s;
                };
                long best = sad(0, 0);
                int bdy = 0, bdx = 0;
                for (int dy = -search_radius; dy <= search_radius; ++dy)
                    for (int dx = -search_radius; dx <= search_radius; ++dx) {
                        if (dy == 0 && dx == 0) continue;
                        long s = sad(dy, dx);
                        if (s < best) { best = s; bdy = dy; bdx = dx; }
                    }
                flow.at(p, y, x, 0) = static_cast<float>(bdx);
                flow.at(p, y, x, 1) = static_cast<float>(bdy);
            }
    }
    return flow;
}

// Adds i.i.d. zero-mean Gaussian noise of std sigma * std(flow) per component.
inline FlowField perturb_flow(const FlowField& flow, double sigma, Rng& rng) {
    if (sigma < 0.0) throw InvalidArgument("perturb_flow: sigma must be >= 0");
    if (sigma == 0.0) return flow;
    double s = sigma * flow.std_dev();
    FlowField out = flow;
    for (auto& x : out.v) x = static_cast<float>(x + s * rng.normal());
    return out;
}

// Raw little-endian float32 file: magic "FLOW", then pairs, h, w as u32 LE,
// then [pair][y][x][2] data.
inline void save_flow(const FlowField& flow, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingFileError("save_flow: cannot open " + path);
    os.write("FLOW", 4);
    std::uint32_t dims[3] = {static_cast<std::uint32_t>(flow.pairs),
                             static_cast<std::uint32_t>(flow.h),
                             static_cast<std::uint32_t>(flow.w)};
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    os.write(reinterpret_cast<const char*>(flow.v.data()),
             static_cast<std::streamsize>(flow.v.size() * sizeof(float)));
    if (!os) throw CorruptFileError("save_flow: write failure for " + path);
}

inline FlowField load_flow(const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("load_flow: missing file " + path);
    std::ifstream is(path, std::ios::binary);
    char magic[4];
    std::uint32_t dims[3];
    is.read(magic, 4);
    is.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!is || std::memcmp(magic, "FLOW", 4) != 0)
        throw CorruptFileError("load_flow: bad header in " + path);
    FlowField flow(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    is.read(reinterpret_cast<char*>(flow.v.data()),
            static_cast<std::streamsize>(flow.v.size() * sizeof(float)));
    if (!is) throw CorruptFileError("load_flow: truncated data in " + path);
    return flow;
}

}  // namespace dsd

#endif
