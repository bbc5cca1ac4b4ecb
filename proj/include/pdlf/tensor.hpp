#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdlf {

/// Library-wide error type; subsystems derive more specific ones from it.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw error("tensor: non-positive dimension " + std::to_string(d));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

/// N-dimensional row-major float array. Carrier for images, feature maps and
/// activations; value-semantic and freely shareable once built.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, float fill = 0.f)
        : shape(std::move(s)), data(shape_numel(shape), fill) {}

    static Tensor from_data(std::vector<int> s, std::vector<float> d) {
        if (shape_numel(s) != d.size()) throw error("tensor: data length does not match shape");
        Tensor t;
        t.shape = std::move(s);
        t.data = std::move(d);
        return t;
    }

    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data.size(); }

    float& operator[](std::size_t i) { return data[i]; }
    float operator[](std::size_t i) const { return data[i]; }

    // rank-2 accessors (row, col)
    float& at2(int r, int c) { return data[static_cast<std::size_t>(r) * dim(1) + c]; }
    float at2(int r, int c) const { return data[static_cast<std::size_t>(r) * dim(1) + c]; }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

/// H x W x C pixel raster, values in [0,1], channels 1 (gray) or 3 (RGB).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> pix;  // row-major, interleaved channels

    Image() = default;
    Image(int h, int w, int c, float fill = 0.f)
        : height(h), width(w), channels(c),
          pix(static_cast<std::size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || (c != 1 && c != 3))
            throw error("image: bad dimensions");
    }

    float& at(int y, int x, int c = 0) {
        return pix[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c = 0) const {
        return pix[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t size() const { return pix.size(); }
};

/// Binary segmentation mask, every value exactly 0 or 1.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> v;

    Mask() = default;
    Mask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), v(static_cast<std::size_t>(h) * w, fill) {
        if (h <= 0 || w <= 0) throw error("mask: bad dimensions");
    }

    std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return v.size(); }

    std::size_t foreground_count() const {
        return static_cast<std::size_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
    }
};

/// Bilinear resize of a rank-2 tensor with corner-aligned sampling:
/// src = dst * (S-1)/(D-1); a single-row/column target samples the center.
/// Exactly interpolates endpoints and preserves constants.
inline Tensor resize_bilinear(const Tensor& t, int out_h, int out_w) {
    if (t.rank() != 2) throw error("resize_bilinear: rank-2 tensor expected");
    if (out_h < 1 || out_w < 1) throw error("resize_bilinear: zero-size target");
    const int h = t.dim(0), w = t.dim(1);
    if (out_h == h && out_w == w) return t;

    Tensor out({out_h, out_w});
    auto src_coord = [](int dst, int dst_len, int src_len) -> double {
        if (dst_len == 1) return (src_len - 1) / 2.0;
        return static_cast<double>(dst) * (src_len - 1) / (dst_len - 1);
    };

    for (int oy = 0; oy < out_h; ++oy) {
        double sy = src_coord(oy, out_h, h);
        int y0 = static_cast<int>(sy);
        int y1 = std::min(y0 + 1, h - 1);
        double fy = sy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
            double sx = src_coord(ox, out_w, w);
            int x0 = static_cast<int>(sx);
            int x1 = std::min(x0 + 1, w - 1);
            double fx = sx - x0;
            double top = t.at2(y0, x0) * (1.0 - fx) + t.at2(y0, x1) * fx;
            double bot = t.at2(y1, x0) * (1.0 - fx) + t.at2(y1, x1) * fx;
            out.at2(oy, ox) = static_cast<float>(top * (1.0 - fy) + bot * fy);
        }
    }
    return out;
}

/// Luma conversion, 0.299 R + 0.587 G + 0.114 B. Gray input passes through.
inline Image rgb_to_gray(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float g = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
            out.at(y, x) = std::clamp(g, 0.f, 1.f);
        }
    return out;
}

inline Tensor image_to_tensor(const Image& img) {
    // C x H x W layout, the network's native one
    Tensor t({img.channels, img.height, img.width});
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                t.data[(static_cast<std::size_t>(c) * img.height + y) * img.width + x] = img.at(y, x, c);
    return t;
}

inline Tensor mask_to_tensor(const Mask& m) {
    Tensor t({m.height, m.width});
    for (std::size_t i = 0; i < m.v.size(); ++i) t.data[i] = static_cast<float>(m.v[i]);
    return t;
}

}  // namespace pdlf
