#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "pdlf/corners.hpp"
#include "pdlf/delaunay.hpp"
#include "pdlf/tensor.hpp"

namespace pdlf {

/// Deterministic inspection rendering: translucent green mask fill, yellow
/// triangulation edges, red corner markers (filled circles). Inputs other
/// than the image are optional.
inline Image overlay(const Image& img, const std::vector<CornerPoint>& points,
                     const Triangulation* tri = nullptr, const Mask* mask = nullptr) {
    Image out(img.height, img.width, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = img.channels == 1 ? img.at(y, x) : img.at(y, x, c);

    if (mask) {
        if (mask->height != img.height || mask->width != img.width)
            throw error("overlay: mask dimension mismatch");
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                if (mask->at(y, x)) {
                    out.at(y, x, 0) *= 0.5f;
                    out.at(y, x, 1) = 0.5f * out.at(y, x, 1) + 0.5f;
                    out.at(y, x, 2) *= 0.5f;
                }
    }

    auto put = [&](int x, int y, float r, float g, float b) {
        if (x < 0 || y < 0 || x >= out.width || y >= out.height) return;
        out.at(y, x, 0) = r;
        out.at(y, x, 1) = g;
        out.at(y, x, 2) = b;
    };
    auto line = [&](double x0, double y0, double x1, double y1) {
        const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
        for (int i = 0; i <= steps; ++i) {
            const double t = static_cast<double>(i) / steps;
            put(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
                static_cast<int>(std::lround(y0 + t * (y1 - y0))), 1.f, 1.f, 0.f);
        }
    };

    if (tri) {
        for (const auto& [i, j] : tri->edges) {
            const Point2& a = tri->points[static_cast<std::size_t>(i)];
            const Point2& b = tri->points[static_cast<std::size_t>(j)];
            line(a.x, a.y, b.x, b.y);
        }
    }

    for (const CornerPoint& p : points)
        for (int dy = -2; dy <= 2; ++dy)
            for (int dx = -2; dx <= 2; ++dx)
                if (dx * dx + dy * dy <= 4) put(p.x + dx, p.y + dy, 1.f, 0.f, 0.f);

    return out;
}

/// Same content as SVG markup (image referenced by size only).
inline std::string overlay_svg(int width, int height, const std::vector<CornerPoint>& points,
                               const Triangulation* tri = nullptr) {
    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\">\n",
                  width, height, width, height);
    svg += buf;
    if (tri) {
        for (const auto& [i, j] : tri->edges) {
            const Point2& a = tri->points[static_cast<std::size_t>(i)];
            const Point2& b = tri->points[static_cast<std::size_t>(j)];
            std::snprintf(buf, sizeof(buf),
                          "  <line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" "
                          "stroke=\"#ffcc00\" stroke-width=\"1\"/>\n",
                          a.x, a.y, b.x, b.y);
            svg += buf;
        }
    }
    for (const CornerPoint& p : points) {
        std::snprintf(buf, sizeof(buf),
                      "  <circle cx=\"%d\" cy=\"%d\" r=\"3\" fill=\"#e03030\"/>\n", p.x, p.y);
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace pdlf
