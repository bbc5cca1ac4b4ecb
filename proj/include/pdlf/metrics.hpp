#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pdlf/tensor.hpp"

namespace pdlf {

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::uint64_t total() const { return tp + fp + tn + fn; }
};

/// Pixelwise counts with foreground = 1.
inline ConfusionCounts confusion(const Mask& pred, const Mask& gt) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw error("confusion: mask dimension mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        if (pred.v[i]) {
            gt.v[i] ? ++c.tp : ++c.fp;
        } else {
            gt.v[i] ? ++c.fn : ++c.tn;
        }
    }
    return c;
}

struct MetricsReport {
    double acc = 0, iou = 0, dice = 0, voe = 0, sens = 0, prec = 0, spec = 0;
};

/// Confusion-matrix metrics. A 0/0 ratio means the reference set of that
/// metric is empty and scores as vacuously perfect: 1.0 (and voe 0), so an
/// empty prediction of an empty ground truth is a perfect match.
inline MetricsReport compute_metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw error("compute_metrics: zero total count");
    const auto ratio = [](std::uint64_t num, std::uint64_t den) {
        return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 1.0;
    };
    MetricsReport r;
    r.acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    r.iou = ratio(c.tp, c.tp + c.fp + c.fn);
    r.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    r.voe = (c.tp + c.fp + c.fn) > 0
                ? static_cast<double>(c.fp + c.fn) / static_cast<double>(c.tp + c.fp + c.fn)
                : 0.0;
    r.sens = ratio(c.tp, c.tp + c.fn);
    r.prec = ratio(c.tp, c.tp + c.fp);
    r.spec = ratio(c.tn, c.tn + c.fp);
    return r;
}

/// Arithmetic (macro) mean of per-image reports. Note the dice/voe identities
/// hold per image, not after averaging.
inline MetricsReport average_reports(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw error("average_reports: empty input");
    MetricsReport m;
    for (const auto& r : reports) {
        m.acc += r.acc;
        m.iou += r.iou;
        m.dice += r.dice;
        m.voe += r.voe;
        m.sens += r.sens;
        m.prec += r.prec;
        m.spec += r.spec;
    }
    const double inv = 1.0 / static_cast<double>(reports.size());
    m.acc *= inv;
    m.iou *= inv;
    m.dice *= inv;
    m.voe *= inv;
    m.sens *= inv;
    m.prec *= inv;
    m.spec *= inv;
    return m;
}

/// Otsu binarization: the threshold maximizes between-class variance over a
/// 256-bin histogram; the smaller-count side becomes foreground (the object
/// of interest is assumed small against the background). A constant image
/// yields an all-background mask.
inline Mask otsu_threshold(const Image& img) {
    const Image gray = rgb_to_gray(img);
    const std::size_t n = static_cast<std::size_t>(gray.height) * gray.width;

    std::array<std::uint64_t, 256> hist{};
    auto bin_of = [](float v) {
        int b = static_cast<int>(v * 256.f);
        return static_cast<std::size_t>(std::clamp(b, 0, 255));
    };
    for (std::size_t i = 0; i < n; ++i) ++hist[bin_of(gray.pix[i])];

    double best_var = 0.0;
    int best_t = -1;
    std::uint64_t n0 = 0;
    double sum0 = 0.0, sum_all = 0.0;
    for (int b = 0; b < 256; ++b) sum_all += static_cast<double>(hist[static_cast<std::size_t>(b)]) * b;
    for (int t = 0; t < 255; ++t) {
        n0 += hist[static_cast<std::size_t>(t)];
        sum0 += static_cast<double>(hist[static_cast<std::size_t>(t)]) * t;
        const std::uint64_t n1 = n - n0;
        if (n0 == 0 || n1 == 0) continue;
        const double mu0 = sum0 / static_cast<double>(n0);
        const double mu1 = (sum_all - sum0) / static_cast<double>(n1);
        const double var = static_cast<double>(n0) * static_cast<double>(n1) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }

    Mask out(gray.height, gray.width);
    if (best_t < 0) return out;  // constant image

    std::uint64_t above = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (bin_of(gray.pix[i]) > static_cast<std::size_t>(best_t)) ++above;
    const bool fg_above = above <= n - above;
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_above = bin_of(gray.pix[i]) > static_cast<std::size_t>(best_t);
        out.v[i] = (is_above == fg_above) ? 1 : 0;
    }
    return out;
}

}  // namespace pdlf
