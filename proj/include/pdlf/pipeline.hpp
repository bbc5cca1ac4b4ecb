#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdlf/corners.hpp"
#include "pdlf/dataset.hpp"
#include "pdlf/net.hpp"
#include "pdlf/pairing.hpp"
#include "pdlf/patches.hpp"

namespace pdlf {

struct ExtractorConfig {
    std::string kind = "builtin";  // "builtin" | "import"
    int dim = 1000;
    int patch_size = 40;

    void validate() const {
        if (kind != "builtin" && kind != "import")
            throw error("extractor: kind must be builtin or import");
        if (dim < 1) throw error("extractor: dim must be >= 1");
        if (patch_size < 2 || patch_size % 2 != 0)
            throw error("extractor: patch_size must be even and >= 2");
    }
};

/// All stage configurations in one structure; loaded from one JSON file with
/// CLI flags overriding individual fields. Validated before any stage runs.
struct PipelineConfig {
    DetectorConfig detector;
    ExtractorConfig extractor;
    NetworkConfig net;
    TrainConfig train;
    SplitSpec split;
    float threshold = 0.5f;

    void validate() const {
        detector.validate();
        extractor.validate();
        net.validate();
        train.validate();
        split.validate();
        if (!(threshold >= 0.f && threshold <= 1.f))
            throw error("pipeline: threshold must be in [0,1]");
    }
};

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    if (j.contains("detector")) {
        const auto& d = j.at("detector");
        cfg.detector.max_points = d.value("max_points", cfg.detector.max_points);
        cfg.detector.min_points_warn = d.value("min_points_warn", cfg.detector.min_points_warn);
        cfg.detector.quality = d.value("quality", cfg.detector.quality);
        cfg.detector.min_distance = d.value("min_distance", cfg.detector.min_distance);
        cfg.detector.window = d.value("window", cfg.detector.window);
    }
    if (j.contains("extractor")) {
        const auto& e = j.at("extractor");
        cfg.extractor.kind = e.value("kind", cfg.extractor.kind);
        cfg.extractor.dim = e.value("dim", cfg.extractor.dim);
        cfg.extractor.patch_size = e.value("patch_size", cfg.extractor.patch_size);
    }
    if (j.contains("net")) {
        const auto& n = j.at("net");
        cfg.net.input_h = n.value("input_h", cfg.net.input_h);
        cfg.net.input_w = n.value("input_w", cfg.net.input_w);
        cfg.net.in_channels = n.value("in_channels", cfg.net.in_channels);
        cfg.net.blocks = n.value("blocks", cfg.net.blocks);
        cfg.net.channels = n.value("channels", cfg.net.channels);
        cfg.net.kernel = n.value("kernel", cfg.net.kernel);
        cfg.net.concat_block = n.value("concat_block", cfg.net.concat_block);
        cfg.net.seed = n.value("seed", cfg.net.seed);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfg.train.lr = t.value("lr", cfg.train.lr);
        cfg.train.momentum = t.value("momentum", cfg.train.momentum);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.seed = t.value("seed", cfg.train.seed);
    }
    if (j.contains("split")) {
        const auto& s = j.at("split");
        cfg.split.train_ratio = s.value("train", cfg.split.train_ratio);
        cfg.split.val_ratio = s.value("val", cfg.split.val_ratio);
        cfg.split.test_ratio = s.value("test", cfg.split.test_ratio);
        cfg.split.seed = s.value("seed", cfg.split.seed);
        cfg.split.group_variants = s.value("group_variants", cfg.split.group_variants);
    }
    cfg.threshold = j.value("threshold", cfg.threshold);
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("config: cannot open " + path);
    return pipeline_config_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------
// points JSON: [{"x":..,"y":..,"score":..}, ...]
// ---------------------------------------------------------------------------

inline void save_points_json(const std::vector<CornerPoint>& points, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const CornerPoint& p : points) j.push_back({{"x", p.x}, {"y", p.y}, {"score", p.score}});
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw error("points: cannot open " + path);
    out << j.dump(2) << "\n";
}

inline std::vector<CornerPoint> load_points_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("points: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    std::vector<CornerPoint> points;
    for (const auto& e : j)
        points.push_back({e.at("x").get<int>(), e.at("y").get<int>(),
                          e.value("score", 0.f)});
    return points;
}

// ---------------------------------------------------------------------------
// triangulation JSON: {"points": [[x,y],..], "triangles": [[i,j,k],..],
//                      "edges": [[i,j],..]}
// ---------------------------------------------------------------------------

inline void save_triangulation_json(const Triangulation& t, const std::string& path) {
    nlohmann::json j;
    j["points"] = nlohmann::json::array();
    for (const Point2& p : t.points) j["points"].push_back({p.x, p.y});
    j["triangles"] = nlohmann::json::array();
    for (const auto& tri : t.triangles) j["triangles"].push_back({tri[0], tri[1], tri[2]});
    j["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : t.edges) j["edges"].push_back({a, b});
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw error("triangulation: cannot open " + path);
    out << j.dump(2) << "\n";
}

inline Triangulation load_triangulation_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("triangulation: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    Triangulation t;
    for (const auto& p : j.at("points")) t.points.push_back({p[0].get<double>(), p[1].get<double>()});
    for (const auto& tr : j.at("triangles"))
        t.triangles.push_back({tr[0].get<int>(), tr[1].get<int>(), tr[2].get<int>()});
    for (const auto& e : j.at("edges")) t.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    return t;
}

// ---------------------------------------------------------------------------
// per-image feature path (detect -> patches -> descriptors -> joint map)
// ---------------------------------------------------------------------------

inline std::vector<FeatureRecord> image_features(const Image& img, const PipelineConfig& cfg) {
    auto points = detect_corners(img, cfg.detector);
    auto patches = mesh_patches(img, points, cfg.extractor.patch_size);
    std::vector<FeatureRecord> records;
    records.reserve(patches.size());
    for (const Patch& p : patches) records.push_back(extract_builtin(p, cfg.extractor.dim));
    return records;
}

/// Joint plane for one image, with the degenerate fallbacks applied: fewer
/// than two corners yields an unset plane (the network then runs with a zero
/// channel).
inline Tensor image_plane(const Image& img, const PipelineConfig& cfg,
                          const std::string& id = {}) {
    auto records = image_features(img, cfg);
    if (records.size() < 2) return Tensor{};  // rank-0: zero plane downstream
    return joint_map_to_plane(make_joint_map(records, id));
}

}  // namespace pdlf
