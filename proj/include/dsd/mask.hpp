#ifndef DSD_MASK_HPP
#define DSD_MASK_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "dsd/common.hpp"
#include "dsd/image.hpp"

namespace dsd {

struct BinaryMask {
    int h = 0, w = 0;
    std::vector<std::uint8_t> v;  // 0 or 1

    BinaryMask() = default;
    BinaryMask(int h_, int w_, std::uint8_t fill = 0)
        : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, fill) {}

    std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }

    double coverage() const {
        if (v.empty()) return 0.0;
        std::size_t ones = 0;
        for (auto b : v) ones += b;
        return static_cast<double>(ones) / static_cast<double>(v.size());
    }

    bool operator==(const BinaryMask& o) const { return h == o.h && w == o.w && v == o.v; }
};

// Tight axis-aligned bounding box of the 1-pixels, filled. Empty in, empty out.
inline BinaryMask bbox_mask(const BinaryMask& m) {
    int y0 = m.h, y1 = -1, x0 = m.w, x1 = -1;
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            if (m.at(y, x)) {
                y0 = std::min(y0, y); y1 = std::max(y1, y);
                x0 = std::min(x0, x); x1 = std::max(x1, x);
            }
    BinaryMask out(m.h, m.w, 0);
    if (y1 < 0) return out;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) out.at(y, x) = 1;
    return out;
}

// Square structuring element of side 2*radius+1 (Chebyshev ball).
inline BinaryMask dilate(const BinaryMask& m, int radius) {
    if (radius < 0) throw InvalidArgument("dilate: radius must be >= 0");
    if (radius == 0) return m;
    BinaryMask out(m.h, m.w, 0);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) {
            if (!m.at(y, x)) continue;
            int ya = std::max(0, y - radius), yb = std::min(m.h - 1, y + radius);
            int xa = std::max(0, x - radius), xb = std::min(m.w - 1, x + radius);
            for (int yy = ya; yy <= yb; ++yy)
                for (int xx = xa; xx <= xb; ++xx) out.at(yy, xx) = 1;
        }
    return out;
}

enum class SplitMode { Pretrain, Finetune };

struct Decomposition {
    ImageF foreground;  // masked-out region filled mid-gray
    ImageF background;
    BinaryMask mask;
    SplitMode mode = SplitMode::Finetune;
};

// F = I inside M, gray elsewhere. B uses the complement of BBox(M) (finetune)
// or of Dilate(M, radius) (pretrain).
inline Decomposition split_frame(const ImageF& img, const BinaryMask& m, SplitMode mode,
                                 int dilation_radius = 2) {
    if (img.h != m.h || img.w != m.w) throw ShapeError("split_frame: image/mask dims mismatch");
    BinaryMask hole = (mode == SplitMode::Finetune) ? bbox_mask(m) : dilate(m, dilation_radius);
    Decomposition d;
    d.mode = mode;
    d.mask = m;
    d.foreground = ImageF(img.h, img.w, img.c, kMidGray);
    d.background = ImageF(img.h, img.w, img.c, kMidGray);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < img.c; ++c) {
                if (m.at(y, x)) d.foreground.at(y, x, c) = img.at(y, x, c);
                if (!hole.at(y, x)) d.background.at(y, x, c) = img.at(y, x, c);
            }
    return d;
}

struct MaskBlock {
    int x = 0, y = 0, size = 0;
};

struct BlockMaskResult {
    ImageF foreground;
    ImageF background;
    BinaryMask mask;
    std::vector<MaskBlock> blocks;  // accepted placements, in order
    int iterations = 0;             // loop iterations consumed
    bool cap_hit = false;           // iteration cap exhausted before reaching coverage
};

// Iterative random square-block masking. Blocks are placed uniformly at random,
// rejected on any overlap with the existing mask, until covered area reaches
// coverage*h*w (early break past 1.1x target) or max_iter runs out. The
// foreground canvas receives block content inset by boundary_margin; the
// background gets the block outset by boundary_margin filled mid-gray.
inline BlockMaskResult random_block_mask(const ImageF& img, double coverage, int min_block,
                                         int max_block, int boundary_margin, int max_iter,
                                         Rng& rng) {
    const int h = img.h, w = img.w;
    if (coverage < 0.0 || coverage > 1.0) throw InvalidArgument("random_block_mask: coverage in [0,1]");
    if (min_block <= 0 || min_block > max_block || max_block > std::min(h, w))
        throw InvalidArgument("random_block_mask: need 0 < min_block <= max_block <= min(h,w)");
    if (boundary_margin < 0) throw InvalidArgument("random_block_mask: margin must be >= 0");

    BlockMaskResult r;
    r.mask = BinaryMask(h, w, 0);
    r.foreground = ImageF(h, w, img.c, kMidGray);
    r.background = img;

    const double target_area = coverage * h * w;
    double covered = 0.0;
    int iter = max_iter;
    while (covered < target_area && iter > 0) {
        --iter;
        ++r.iterations;
        int bs = static_cast<int>(rng.uniform_int(min_block, max_block));
        int x = static_cast<int>(rng.uniform_int(0, w - bs));
        int y = static_cast<int>(rng.uniform_int(0, h - bs));

        bool overlap = false;
        for (int yy = y; yy < y + bs && !overlap; ++yy)
            for (int xx = x; xx < x + bs; ++xx)
                if (r.mask.at(yy, xx)) { overlap = true; break; }
        if (overlap) continue;

        // foreground: content strictly inside the block (inset by the margin)
        for (int yy = y + boundary_margin; yy < y + bs - boundary_margin; ++yy)
            for (int xx = x + boundary_margin; xx < x + bs - boundary_margin; ++xx)
                for (int c = 0; c < img.c; ++c)
                    r.foreground.at(yy, xx, c) = img.at(yy, xx, c);
        // background: hole grown by the margin, clamped at the frame
        int ya = std::max(0, y - boundary_margin), yb = std::min(h, y + bs + boundary_margin);
        int xa = std::max(0, x - boundary_margin), xb = std::min(w, x + bs + boundary_margin);
        for (int yy = ya; yy < yb; ++yy)
            for (int xx = xa; xx < xb; ++xx)
                for (int c = 0; c < img.c; ++c) r.background.at(yy, xx, c) = kMidGray;

        for (int yy = y; yy < y + bs; ++yy)
            for (int xx = x; xx < x + bs; ++xx) r.mask.at(yy, xx) = 1;
        r.blocks.push_back({x, y, bs});
        covered += static_cast<double>(bs) * bs;

        if (covered > 1.1 * target_area) break;
    }
    r.cap_hit = (covered < target_area) && (iter == 0);
    return r;
}

}  // namespace dsd

#endif
