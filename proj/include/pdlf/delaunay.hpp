#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "pdlf/tensor.hpp"

namespace pdlf {

/// Raised for point sets that admit no triangulation (fewer than three
/// points, collinear input, duplicates). Callers fall back to direct pairing.
class degenerate_input : public error {
public:
    explicit degenerate_input(const std::string& msg) : error(msg) {}
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Circumcircle {
    Point2 center;
    double radius_sq = 0.0;
};

struct Triangulation {
    std::vector<Point2> points;                      // input order
    std::vector<std::array<int, 3>> triangles;       // CCW index triples
    std::vector<std::pair<int, int>> edges;          // unique, i < j, sorted
};

inline double cross2(const Point2& a, const Point2& b, const Point2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline double triangle_area(const Point2& a, const Point2& b, const Point2& c) {
    return std::abs(cross2(a, b, c)) / 2.0;
}

/// Circumcircle through three non-collinear points (perpendicular-bisector
/// intersection in closed form).
inline Circumcircle circumcircle(const Point2& a, const Point2& b, const Point2& c) {
    const double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    const double scale = std::max({std::abs(a.x), std::abs(a.y), std::abs(b.x), std::abs(b.y),
                                   std::abs(c.x), std::abs(c.y), 1.0});
    if (std::abs(d) <= 1e-12 * scale * scale)
        throw degenerate_input("circumcircle: collinear points");
    const double a2 = a.x * a.x + a.y * a.y;
    const double b2 = b.x * b.x + b.y * b.y;
    const double c2 = c.x * c.x + c.y * c.y;
    Circumcircle cc;
    cc.center.x = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    cc.center.y = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    const double dx = a.x - cc.center.x, dy = a.y - cc.center.y;
    cc.radius_sq = dx * dx + dy * dy;
    return cc;
}

/// Strict containment test with relative tolerance: true iff p lies inside
/// the circumcircle by more than rel_eps of the squared radius.
inline bool in_circumcircle(const Circumcircle& cc, const Point2& p, double rel_eps = 1e-9) {
    const double dx = p.x - cc.center.x, dy = p.y - cc.center.y;
    return dx * dx + dy * dy < cc.radius_sq * (1.0 - rel_eps);
}

namespace detail {

// Signed in-circle determinant; > 0 means d inside circumcircle of CCW (a,b,c).
// Returns the determinant together with a magnitude for relative thresholding.
inline std::pair<double, double> incircle_det(const Point2& a, const Point2& b, const Point2& c,
                                              const Point2& d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double ad2 = adx * adx + ady * ady;
    const double bd2 = bdx * bdx + bdy * bdy;
    const double cd2 = cdx * cdx + cdy * cdy;
    const double t1 = ad2 * (bdx * cdy - cdx * bdy);
    const double t2 = bd2 * (adx * cdy - cdx * ady);
    const double t3 = cd2 * (adx * bdy - bdx * ady);
    const double det = t1 - t2 + t3;
    const double mag = std::abs(t1) + std::abs(t2) + std::abs(t3);
    return {det, mag};
}

}  // namespace detail

/// Bowyer-Watson incremental triangulation. Points are pre-sorted
/// lexicographically internally, so the result depends only on the point
/// multiset; emitted indices refer to the caller's original ordering.
/// Cocircular degeneracies resolve to one of the valid triangulations.
inline Triangulation triangulate(const std::vector<Point2>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 3) throw degenerate_input("triangulate: need at least 3 points");

    std::vector<int> order(points.size());
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        const Point2 &p = points[static_cast<std::size_t>(i)], &q = points[static_cast<std::size_t>(j)];
        if (p.x != q.x) return p.x < q.x;
        return p.y < q.y;
    });
    for (int i = 1; i < n; ++i) {
        const Point2 &p = points[static_cast<std::size_t>(order[i - 1])];
        const Point2 &q = points[static_cast<std::size_t>(order[i])];
        if (p.x == q.x && p.y == q.y) throw degenerate_input("triangulate: duplicate points");
    }

    // collinearity check up front, for the declared error
    bool any_area = false;
    for (int i = 2; i < n && !any_area; ++i) {
        const Point2& a = points[static_cast<std::size_t>(order[0])];
        const Point2& b = points[static_cast<std::size_t>(order[1])];
        const Point2& c = points[static_cast<std::size_t>(order[i])];
        if (triangle_area(a, b, c) > 1e-12) any_area = true;
    }
    if (!any_area) throw degenerate_input("triangulate: all points collinear");

    // working vertex list: sorted points + 3 super-triangle vertices
    std::vector<Point2> verts;
    verts.reserve(points.size() + 3);
    for (int i : order) verts.push_back(points[static_cast<std::size_t>(i)]);

    double min_x = verts[0].x, max_x = verts[0].x, min_y = verts[0].y, max_y = verts[0].y;
    for (const Point2& p : verts) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double span = std::max({max_x - min_x, max_y - min_y, 1.0});
    const double cx = (min_x + max_x) / 2.0, cy = (min_y + max_y) / 2.0;
    verts.push_back({cx - 30.0 * span, cy - 15.0 * span});
    verts.push_back({cx + 30.0 * span, cy - 15.0 * span});
    verts.push_back({cx, cy + 30.0 * span});
    const int s0 = n, s1 = n + 1, s2 = n + 2;

    auto ccw = [&](std::array<int, 3> t) {
        if (cross2(verts[static_cast<std::size_t>(t[0])], verts[static_cast<std::size_t>(t[1])],
                   verts[static_cast<std::size_t>(t[2])]) < 0.0)
            std::swap(t[1], t[2]);
        return t;
    };

    std::vector<std::array<int, 3>> tris{ccw({s0, s1, s2})};

    for (int i = 0; i < n; ++i) {
        const Point2& p = verts[static_cast<std::size_t>(i)];

        // triangles whose circumcircle contains p (boundary counts as inside,
        // which keeps the cavity star-shaped for cocircular inputs)
        std::vector<std::size_t> bad;
        for (std::size_t t = 0; t < tris.size(); ++t) {
            auto [det, mag] = detail::incircle_det(
                verts[static_cast<std::size_t>(tris[t][0])], verts[static_cast<std::size_t>(tris[t][1])],
                verts[static_cast<std::size_t>(tris[t][2])], p);
            if (det > -1e-12 * mag) bad.push_back(t);
        }

        // boundary of the cavity = edges used by exactly one bad triangle
        std::vector<std::pair<int, int>> boundary;
        for (std::size_t bi : bad) {
            for (int e = 0; e < 3; ++e) {
                int u = tris[bi][static_cast<std::size_t>(e)];
                int v = tris[bi][static_cast<std::size_t>((e + 1) % 3)];
                bool shared = false;
                for (std::size_t bj : bad) {
                    if (bj == bi) continue;
                    const auto& o = tris[bj];
                    for (int f = 0; f < 3 && !shared; ++f) {
                        int a = o[static_cast<std::size_t>(f)], b = o[static_cast<std::size_t>((f + 1) % 3)];
                        if ((a == u && b == v) || (a == v && b == u)) shared = true;
                    }
                    if (shared) break;
                }
                if (!shared) boundary.emplace_back(u, v);
            }
        }

        for (auto it = bad.rbegin(); it != bad.rend(); ++it)
            tris.erase(tris.begin() + static_cast<std::ptrdiff_t>(*it));
        for (const auto& [u, v] : boundary) tris.push_back(ccw({u, v, i}));
    }

    Triangulation out;
    out.points = points;
    for (const auto& t : tris) {
        if (t[0] >= n || t[1] >= n || t[2] >= n) continue;  // touches super-triangle
        std::array<int, 3> mapped = {order[static_cast<std::size_t>(t[0])],
                                     order[static_cast<std::size_t>(t[1])],
                                     order[static_cast<std::size_t>(t[2])]};
        out.triangles.push_back(mapped);
    }
    if (out.triangles.empty()) throw degenerate_input("triangulate: no valid triangles");

    std::sort(out.triangles.begin(), out.triangles.end(),
              [](const std::array<int, 3>& a, const std::array<int, 3>& b) {
                  auto key = [](const std::array<int, 3>& t) {
                      std::array<int, 3> k = t;
                      std::sort(k.begin(), k.end());
                      return k;
                  };
                  return key(a) < key(b);
              });

    for (const auto& t : out.triangles)
        for (int e = 0; e < 3; ++e) {
            int u = t[static_cast<std::size_t>(e)], v = t[static_cast<std::size_t>((e + 1) % 3)];
            out.edges.emplace_back(std::min(u, v), std::max(u, v));
        }
    std::sort(out.edges.begin(), out.edges.end());
    out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
    return out;
}

/// Sorted unique undirected edges of a triangulation; edges shared by two
/// triangles appear once.
inline std::vector<std::pair<int, int>> unique_edges(const Triangulation& t) {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(t.triangles.size() * 3);
    for (const auto& tri : t.triangles)
        for (int e = 0; e < 3; ++e) {
            int u = tri[static_cast<std::size_t>(e)], v = tri[static_cast<std::size_t>((e + 1) % 3)];
            edges.emplace_back(std::min(u, v), std::max(u, v));
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

}  // namespace pdlf
