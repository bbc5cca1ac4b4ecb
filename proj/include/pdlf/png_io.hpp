#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "pdlf/tensor.hpp"

namespace pdlf {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// 8-bit rows, gray (stride w) or rgb (stride 3w)
inline void write_png_bytes(const std::string& path, int h, int w, int channels,
                            const std::vector<unsigned char>& bytes) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw error("png: cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw error("png: create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw error("png: create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw error("png: write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    for (int y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(bytes.data() + y * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline std::vector<unsigned char> read_png_bytes(const std::string& path, int& h, int& w,
                                                 int& channels) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw error("png: cannot open: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw error("png: create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw error("png: create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw error("png: malformed file: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    // normalize everything to 8-bit gray or rgb
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    color = png_get_color_type(png, info);
    channels = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    h = static_cast<int>(height);
    w = static_cast<int>(width);

    const std::size_t stride = png_get_rowbytes(png, info);
    std::vector<unsigned char> bytes(stride * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = bytes.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return bytes;
}

}  // namespace detail

inline void write_png(const std::string& path, const Image& img) {
    std::vector<unsigned char> bytes(img.pix.size());
    for (std::size_t i = 0; i < img.pix.size(); ++i) {
        float v = std::clamp(img.pix[i], 0.f, 1.f);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    detail::write_png_bytes(path, img.height, img.width, img.channels, bytes);
}

inline Image read_png_image(const std::string& path) {
    int h = 0, w = 0, c = 0;
    auto bytes = detail::read_png_bytes(path, h, w, c);
    Image img(h, w, c);
    for (std::size_t i = 0; i < img.pix.size(); ++i)
        img.pix[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

/// Masks are stored as 0/255 grayscale PNG; on read, any value >= 128 is foreground.
inline void write_png(const std::string& path, const Mask& m) {
    std::vector<unsigned char> bytes(m.v.size());
    for (std::size_t i = 0; i < m.v.size(); ++i) bytes[i] = m.v[i] ? 255 : 0;
    detail::write_png_bytes(path, m.height, m.width, 1, bytes);
}

inline Mask read_png_mask(const std::string& path) {
    int h = 0, w = 0, c = 0;
    auto bytes = detail::read_png_bytes(path, h, w, c);
    Mask m(h, w);
    const std::size_t n = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < n; ++i) {
        unsigned v = bytes[i * c];  // first channel decides for rgb-encoded masks
        m.v[i] = v >= 128 ? 1 : 0;
    }
    return m;
}

}  // namespace pdlf
