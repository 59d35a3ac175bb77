#ifndef DSD_PNG_IO_HPP
#define DSD_PNG_IO_HPP

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dsd/common.hpp"
#include "dsd/image.hpp"

namespace dsd {

// 8-bit gray (c=1) or RGB (c=3) PNG read/write via libpng.

inline void write_png(const std::string& path, const Image& im) {
    if (im.c != 1 && im.c != 3) throw InvalidArgument("write_png: channels must be 1 or 3");
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw MissingFileError("write_png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw CorruptFileError("write_png: libpng failure for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, im.w, im.h, 8,
                 im.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(im.h);
    for (int y = 0; y < im.h; ++y)
        rows[y] = const_cast<png_bytep>(im.px.data() + static_cast<std::size_t>(y) * im.w * im.c);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

inline Image read_png(const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError("read_png: missing file " + path);
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw MissingFileError("read_png: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw CorruptFileError("read_png: corrupt PNG " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    int w = png_get_image_width(png, info);
    int h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    int c = png_get_channels(png, info);
    Image im(h, w, c);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = im.px.data() + static_cast<std::size_t>(y) * w * c;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return im;
}

}  // namespace dsd

#endif
