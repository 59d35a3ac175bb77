#ifndef DSD_IMAGE_HPP
#define DSD_IMAGE_HPP

#include <cstdint>
#include <vector>

#include "dsd/common.hpp"

namespace dsd {

// 8-bit image, row-major [y][x][c]. Storage format for clips on disk.
struct Image {
    int h = 0, w = 0, c = 0;
    std::vector<std::uint8_t> px;

    Image() = default;
    Image(int h_, int w_, int c_, std::uint8_t fill = 0)
        : h(h_), w(w_), c(c_), px(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

    std::uint8_t& at(int y, int x, int ch) { return px[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
    std::uint8_t at(int y, int x, int ch) const { return px[(static_cast<std::size_t>(y) * w + x) * c + ch]; }

    bool operator==(const Image& o) const { return h == o.h && w == o.w && c == o.c && px == o.px; }
};

// Floating-point image on the 0..255 scale; holds mid-gray (127.5) fills
// that 8-bit storage cannot represent.
struct ImageF {
    int h = 0, w = 0, c = 0;
    std::vector<double> v;

    ImageF() = default;
    ImageF(int h_, int w_, int c_, double fill = 0.0)
        : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

    static ImageF from(const Image& im) {
        ImageF r(im.h, im.w, im.c);
        for (std::size_t i = 0; i < im.px.size(); ++i) r.v[i] = im.px[i];
        return r;
    }

    double& at(int y, int x, int ch) { return v[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
    double at(int y, int x, int ch) const { return v[(static_cast<std::size_t>(y) * w + x) * c + ch]; }

    Image to_u8() const {
        Image r(h, w, c);
        for (std::size_t i = 0; i < v.size(); ++i) {
            double x = v[i];
            if (x < 0.0) x = 0.0;
            if (x > 255.0) x = 255.0;
            r.px[i] = static_cast<std::uint8_t>(x + 0.5);
        }
        return r;
    }
};

constexpr double kMidGray = 127.5;

// [0,255] -> [-1,1]; mid-gray maps to exactly 0.
inline double normalize_px(double v) { return v / kMidGray - 1.0; }
inline double denormalize_px(double v) { return (v + 1.0) * kMidGray; }

}  // namespace dsd

#endif
