#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pdlf/delaunay.hpp"
#include "pdlf/patches.hpp"
#include "pdlf/tensor.hpp"

namespace pdlf {

/// Midpoint feature of one Delaunay edge: elementwise average of the two
/// endpoint feature vectors, attributed to the edge's middle point.
struct PairwiseFeature {
    Point2 midpoint;
    std::vector<float> vector;
    std::pair<int, int> parent_edge;
};

struct RowMeta {
    enum class Kind { original, pairwise };
    Kind kind = Kind::original;
    int point_index = -1;                 // valid when kind == original
    std::pair<int, int> edge = {-1, -1};  // valid when kind == pairwise
    double x = 0.0, y = 0.0;
};

/// Vertically stacked (n + e) x D matrix: the n original per-point features
/// in point order, then the e pairwise features in sorted edge order.
struct JointFeatureMap {
    Tensor rows;
    std::vector<RowMeta> row_meta;
    std::string source_image_id;

    int row_count() const { return rows.rank() == 2 ? rows.dim(0) : 0; }
    int dim() const { return rows.rank() == 2 ? rows.dim(1) : 0; }
};

inline Point2 edge_midpoint(const Point2& p1, const Point2& p2) {
    return {(p1.x + p2.x) / 2.0, (p1.y + p2.y) / 2.0};
}

/// Edge set to use when triangulation is impossible: all C(n,2) pairs for
/// n >= 2, none for n <= 1.
inline std::vector<std::pair<int, int>> degenerate_pairing_edges(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    return edges;
}

inline std::vector<PairwiseFeature> pair_features(const std::vector<FeatureRecord>& records,
                                                  std::vector<std::pair<int, int>> edges) {
    const int n = static_cast<int>(records.size());
    const std::size_t dim = records.empty() ? 0 : records.front().vector.size();
    for (const auto& r : records)
        if (r.vector.size() != dim) throw error("pair_features: inconsistent feature dimensions");

    for (auto& e : edges)
        if (e.first > e.second) std::swap(e.first, e.second);
    std::sort(edges.begin(), edges.end());
    std::vector<PairwiseFeature> out;
    out.reserve(edges.size());
    for (const auto& [i, j] : edges) {
        if (i < 0 || j < 0 || i >= n || j >= n)
            throw error("pair_features: edge index out of range");
        const FeatureRecord& a = records[static_cast<std::size_t>(i)];
        const FeatureRecord& b = records[static_cast<std::size_t>(j)];
        PairwiseFeature f;
        f.parent_edge = {i, j};
        f.midpoint = edge_midpoint({a.x, a.y}, {b.x, b.y});
        f.vector.resize(dim);
        for (std::size_t k = 0; k < dim; ++k) f.vector[k] = (a.vector[k] + b.vector[k]) / 2.f;
        out.push_back(std::move(f));
    }
    return out;
}

inline JointFeatureMap build_joint_map(const std::vector<FeatureRecord>& records,
                                       std::vector<PairwiseFeature> pairwise,
                                       std::string source_image_id = {}) {
    if (records.empty()) throw error("build_joint_map: no feature records");
    const int dim = static_cast<int>(records.front().vector.size());
    for (const auto& p : pairwise)
        if (static_cast<int>(p.vector.size()) != dim)
            throw error("build_joint_map: inconsistent dimensions");

    std::sort(pairwise.begin(), pairwise.end(),
              [](const PairwiseFeature& a, const PairwiseFeature& b) {
                  return a.parent_edge < b.parent_edge;
              });

    const int n = static_cast<int>(records.size());
    const int e = static_cast<int>(pairwise.size());
    JointFeatureMap map;
    map.source_image_id = std::move(source_image_id);
    map.rows = Tensor({n + e, dim});
    map.row_meta.resize(static_cast<std::size_t>(n + e));
    for (int i = 0; i < n; ++i) {
        const FeatureRecord& r = records[static_cast<std::size_t>(i)];
        std::copy(r.vector.begin(), r.vector.end(), map.rows.data.begin() + static_cast<std::ptrdiff_t>(i) * dim);
        map.row_meta[static_cast<std::size_t>(i)] = {RowMeta::Kind::original, i, {-1, -1}, r.x, r.y};
    }
    for (int k = 0; k < e; ++k) {
        const PairwiseFeature& p = pairwise[static_cast<std::size_t>(k)];
        std::copy(p.vector.begin(), p.vector.end(),
                  map.rows.data.begin() + static_cast<std::ptrdiff_t>(n + k) * dim);
        map.row_meta[static_cast<std::size_t>(n + k)] = {RowMeta::Kind::pairwise, -1, p.parent_edge,
                                                         p.midpoint.x, p.midpoint.y};
    }
    return map;
}

/// The joint map as a single-channel plane for the network: min-max
/// normalized to [0,1] over the whole map; a constant map becomes all 0.5.
inline Tensor joint_map_to_plane(const JointFeatureMap& m) {
    Tensor plane = m.rows;
    float lo = plane.data[0], hi = plane.data[0];
    for (float v : plane.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo <= 0.f) {
        std::fill(plane.data.begin(), plane.data.end(), 0.5f);
        return plane;
    }
    const float inv = 1.f / (hi - lo);
    for (float& v : plane.data) v = (v - lo) * inv;
    return plane;
}

// ---------------------------------------------------------------------------
// Serialization: PDLF feature binary (row order) + row_meta JSON sidecar.
// ---------------------------------------------------------------------------

inline std::string joint_map_sidecar_path(const std::string& path) { return path + ".meta.json"; }

inline void save_joint_map(const JointFeatureMap& m, const std::string& path) {
    const int rows = m.row_count(), dim = m.dim();
    std::vector<FeatureRecord> recs(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
        recs[static_cast<std::size_t>(r)].x = m.row_meta[static_cast<std::size_t>(r)].x;
        recs[static_cast<std::size_t>(r)].y = m.row_meta[static_cast<std::size_t>(r)].y;
        recs[static_cast<std::size_t>(r)].vector.assign(
            m.rows.data.begin() + static_cast<std::ptrdiff_t>(r) * dim,
            m.rows.data.begin() + static_cast<std::ptrdiff_t>(r + 1) * dim);
    }
    export_features(recs, path);

    nlohmann::json meta;
    meta["source_image_id"] = m.source_image_id;
    nlohmann::json rows_json = nlohmann::json::array();
    for (const RowMeta& rm : m.row_meta) {
        nlohmann::json j;
        if (rm.kind == RowMeta::Kind::original) {
            j["kind"] = "original";
            j["point"] = rm.point_index;
        } else {
            j["kind"] = "pairwise";
            j["edge"] = {rm.edge.first, rm.edge.second};
        }
        rows_json.push_back(j);
    }
    meta["rows"] = rows_json;
    std::ofstream out(joint_map_sidecar_path(path), std::ios::trunc);
    if (!out) throw error("save_joint_map: cannot open sidecar for " + path);
    out << meta.dump(2) << "\n";
}

inline JointFeatureMap load_joint_map(const std::string& path) {
    std::vector<FeatureRecord> recs = import_features(path);
    std::ifstream in(joint_map_sidecar_path(path));
    if (!in) throw error("load_joint_map: missing sidecar " + joint_map_sidecar_path(path));
    nlohmann::json meta = nlohmann::json::parse(in);

    const auto& rows_json = meta.at("rows");
    if (rows_json.size() != recs.size())
        throw error("load_joint_map: sidecar row count differs from feature file");

    const int rows = static_cast<int>(recs.size());
    const int dim = static_cast<int>(recs.front().vector.size());
    JointFeatureMap m;
    m.source_image_id = meta.value("source_image_id", std::string{});
    m.rows = Tensor({rows, dim});
    m.row_meta.resize(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
        const auto& rec = recs[static_cast<std::size_t>(r)];
        std::copy(rec.vector.begin(), rec.vector.end(),
                  m.rows.data.begin() + static_cast<std::ptrdiff_t>(r) * dim);
        RowMeta rm;
        rm.x = rec.x;
        rm.y = rec.y;
        const auto& j = rows_json[static_cast<std::size_t>(r)];
        if (j.at("kind") == "original") {
            rm.kind = RowMeta::Kind::original;
            rm.point_index = j.at("point").get<int>();
        } else {
            rm.kind = RowMeta::Kind::pairwise;
            rm.edge = {j.at("edge")[0].get<int>(), j.at("edge")[1].get<int>()};
        }
        m.row_meta[static_cast<std::size_t>(r)] = rm;
    }
    return m;
}

/// Full per-image pairing path: features -> Delaunay edges (with the
/// documented degenerate fallbacks) -> joint map.
inline JointFeatureMap make_joint_map(const std::vector<FeatureRecord>& records,
                                      std::string source_image_id = {}) {
    if (records.empty()) throw error("make_joint_map: no feature records");
    std::vector<Point2> pts;
    pts.reserve(records.size());
    for (const auto& r : records) pts.push_back({r.x, r.y});

    std::vector<std::pair<int, int>> edges;
    if (records.size() >= 3) {
        try {
            edges = triangulate(pts).edges;
        } catch (const degenerate_input&) {
            edges = degenerate_pairing_edges(static_cast<int>(records.size()));
        }
    } else {
        edges = degenerate_pairing_edges(static_cast<int>(records.size()));
    }
    return build_joint_map(records, pair_features(records, std::move(edges)),
                           std::move(source_image_id));
}

}  // namespace pdlf
