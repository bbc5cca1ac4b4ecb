#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "pdlf/tensor.hpp"

namespace pdlf {

/// Detected interest point; score is the minimum eigenvalue of the local
/// structure matrix at (x, y).
struct CornerPoint {
    int x = 0;
    int y = 0;
    float score = 0.f;
};

/// Per-pixel window-summed gradient products: the entries of the 2x2
/// structure matrix [[sum_ix2, sum_ixiy], [sum_ixiy, sum_iy2]].
struct StructureField {
    Tensor sum_ix2;
    Tensor sum_iy2;
    Tensor sum_ixiy;
};

struct DetectorConfig {
    int max_points = 15;
    int min_points_warn = 10;
    float quality = 0.01f;  // fraction of the maximum score
    int min_distance = 10;  // pixels, pairwise
    int window = 5;         // odd box window for the structure sums

    void validate() const {
        if (max_points < 1) throw error("detector: max_points must be >= 1");
        if (!(quality > 0.f && quality < 1.f)) throw error("detector: quality must be in (0,1)");
        if (window < 3 || window % 2 == 0) throw error("detector: window must be odd and >= 3");
        if (min_distance < 0) throw error("detector: min_distance must be >= 0");
    }
};

/// Sobel 3x3 derivatives in x and y, replicate-padded at the borders.
inline std::pair<Tensor, Tensor> image_gradients(const Image& gray) {
    if (gray.channels != 1) throw error("image_gradients: single-channel image expected");
    const int h = gray.height, w = gray.width;
    if (h < 3 || w < 3) throw error("image_gradients: image smaller than 3x3");

    Tensor ix({h, w}), iy({h, w});
    auto px = [&](int y, int x) {
        y = std::clamp(y, 0, h - 1);
        x = std::clamp(x, 0, w - 1);
        return gray.at(y, x);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float tl = px(y - 1, x - 1), tc = px(y - 1, x), tr = px(y - 1, x + 1);
            float ml = px(y, x - 1), mr = px(y, x + 1);
            float bl = px(y + 1, x - 1), bc = px(y + 1, x), br = px(y + 1, x + 1);
            ix.at2(y, x) = (tr + 2.f * mr + br) - (tl + 2.f * ml + bl);
            iy.at2(y, x) = (bl + 2.f * bc + br) - (tl + 2.f * tc + tr);
        }
    }
    return {std::move(ix), std::move(iy)};
}

namespace detail {

// Box-window sum over the image-clipped window, via a summed-area table.
inline Tensor window_sum(const Tensor& t, int window) {
    const int h = t.dim(0), w = t.dim(1), r = window / 2;
    std::vector<double> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
    auto s = [&](int y, int x) -> double& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 1; y <= h; ++y)
        for (int x = 1; x <= w; ++x)
            s(y, x) = t.at2(y - 1, x - 1) + s(y - 1, x) + s(y, x - 1) - s(y - 1, x - 1);

    Tensor out({h, w});
    for (int y = 0; y < h; ++y) {
        int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
            out.at2(y, x) = static_cast<float>(s(y1 + 1, x1 + 1) - s(y0, x1 + 1) -
                                               s(y1 + 1, x0) + s(y0, x0));
        }
    }
    return out;
}

}  // namespace detail

/// Structure matrix entries, box-window (uniform weight) sums of the gradient
/// products. Windows are clipped at the image boundary.
inline StructureField structure_field(const Tensor& ix, const Tensor& iy, int window) {
    if (!ix.same_shape(iy)) throw error("structure_field: gradient shape mismatch");
    const int h = ix.dim(0), w = ix.dim(1);
    Tensor ix2({h, w}), iy2({h, w}), ixiy({h, w});
    for (std::size_t i = 0; i < ix.size(); ++i) {
        ix2.data[i] = ix.data[i] * ix.data[i];
        iy2.data[i] = iy.data[i] * iy.data[i];
        ixiy.data[i] = ix.data[i] * iy.data[i];
    }
    return {detail::window_sum(ix2, window), detail::window_sum(iy2, window),
            detail::window_sum(ixiy, window)};
}

/// Per-pixel score S = min eigenvalue of [[a, c], [c, b]]:
/// (a+b)/2 - sqrt(((a-b)/2)^2 + c^2), clamped at 0 only against float error.
inline Tensor shi_tomasi_score(const StructureField& f) {
    const int h = f.sum_ix2.dim(0), w = f.sum_ix2.dim(1);
    Tensor s({h, w});
    for (std::size_t i = 0; i < s.size(); ++i) {
        double a = f.sum_ix2.data[i], b = f.sum_iy2.data[i], c = f.sum_ixiy.data[i];
        double half_diff = (a - b) / 2.0;
        double lam_min = (a + b) / 2.0 - std::sqrt(half_diff * half_diff + c * c);
        s.data[i] = static_cast<float>(std::max(0.0, lam_min));
    }
    return s;
}

/// Greedy corner selection: candidates with S >= quality * max(S), taken in
/// descending score (ties in row-major pixel order) while every kept pair is
/// at least min_distance apart; at most max_points returned. A flat image
/// (max score 0) yields an empty list.
inline std::vector<CornerPoint> detect_corners(const Image& img, const DetectorConfig& cfg = {}) {
    cfg.validate();
    Image gray = rgb_to_gray(img);
    if (gray.height < cfg.window || gray.width < cfg.window)
        throw error("detect_corners: image smaller than detector window");

    auto [ix, iy] = image_gradients(gray);
    StructureField field = structure_field(ix, iy, cfg.window);
    Tensor score = shi_tomasi_score(field);

    float max_score = *std::max_element(score.data.begin(), score.data.end());
    if (max_score <= 0.f) return {};
    const float threshold = cfg.quality * max_score;

    struct Cand {
        float s;
        int y, x;
    };
    std::vector<Cand> cands;
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x) {
            float s = score.at2(y, x);
            if (s >= threshold) cands.push_back({s, y, x});
        }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.s != b.s) return a.s > b.s;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });

    const double min_d2 = static_cast<double>(cfg.min_distance) * cfg.min_distance;
    std::vector<CornerPoint> out;
    for (const Cand& c : cands) {
        if (static_cast<int>(out.size()) >= cfg.max_points) break;
        bool clear = true;
        for (const CornerPoint& p : out) {
            double dx = p.x - c.x, dy = p.y - c.y;
            if (dx * dx + dy * dy < min_d2) {
                clear = false;
                break;
            }
        }
        if (clear) out.push_back({c.x, c.y, c.s});
    }
    return out;
}

}  // namespace pdlf
