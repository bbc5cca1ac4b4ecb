// pdlf: corner-driven pairwise-feature segmentation pipeline, one subcommand
// per stage. Stages communicate only through files (points JSON, PDLF feature
// binaries, PDLN checkpoints, PNG masks), so any stage can be re-run or fed
// externally produced inputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pdlf/dataset.hpp"
#include "pdlf/metrics.hpp"
#include "pdlf/net.hpp"
#include "pdlf/overlay.hpp"
#include "pdlf/pairing.hpp"
#include "pdlf/parallel.hpp"
#include "pdlf/pipeline.hpp"
#include "pdlf/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
};

pdlf::PipelineConfig make_config(const GlobalOpts& g) {
    pdlf::PipelineConfig cfg;
    if (!g.config_path.empty()) cfg = pdlf::load_pipeline_config(g.config_path);
    if (g.seed) {
        cfg.net.seed = *g.seed;
        cfg.train.seed = *g.seed;
        cfg.split.seed = *g.seed;
    }
    return cfg;
}

std::string stem_of(const std::string& path) {
    std::string s = fs::path(path).filename().string();
    // strip the full extension chain (.points.json, .features.pdlf, ...)
    auto dot = s.find('.');
    return dot == std::string::npos ? s : s.substr(0, dot);
}

std::vector<std::string> png_files(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    return files;
}

void ensure_out(const std::string& dir) {
    if (dir.empty()) throw pdlf::error("missing --out directory");
    fs::create_directories(dir);
}

pdlf::Tensor image_as_input(const pdlf::Image& img, const pdlf::NetworkConfig& net) {
    pdlf::Image fitted = img;
    if (img.height != net.input_h || img.width != net.input_w)
        fitted = pdlf::resize_image(img, net.input_h, net.input_w);
    if (net.in_channels == 1 && fitted.channels == 3) fitted = pdlf::rgb_to_gray(fitted);
    if (net.in_channels == 3 && fitted.channels == 1) {
        pdlf::Image rgb(fitted.height, fitted.width, 3);
        for (int y = 0; y < fitted.height; ++y)
            for (int x = 0; x < fitted.width; ++x)
                for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = fitted.at(y, x);
        fitted = std::move(rgb);
    }
    return pdlf::image_to_tensor(fitted);
}

pdlf::Tensor load_plane(const std::string& joint_path) {
    return pdlf::joint_map_to_plane(pdlf::load_joint_map(joint_path));
}

// --------------------------------------------------------------------------
// stages
// --------------------------------------------------------------------------

void run_detect(const GlobalOpts& g, const pdlf::PipelineConfig& cfg,
                const std::vector<std::string>& inputs) {
    ensure_out(g.out_dir);
    for (const std::string& path : inputs) {
        pdlf::Image img = pdlf::read_png_image(path);
        auto points = pdlf::detect_corners(img, cfg.detector);
        if (static_cast<int>(points.size()) < cfg.detector.min_points_warn)
            std::cerr << "warning: " << path << ": only " << points.size()
                      << " corner points (min_points_warn=" << cfg.detector.min_points_warn
                      << ")\n";
        pdlf::save_points_json(points, (fs::path(g.out_dir) / (stem_of(path) + ".points.json")).string());
    }
}

void run_features(const GlobalOpts& g, const pdlf::PipelineConfig& cfg, const std::string& image,
                  const std::string& points_path, const std::string& import_file) {
    ensure_out(g.out_dir);
    std::vector<pdlf::FeatureRecord> records;
    std::string stem;
    if (cfg.extractor.kind == "import") {
        if (import_file.empty()) throw pdlf::error("features: --extractor import needs --import-file");
        records = pdlf::import_features(import_file);
        stem = image.empty() ? stem_of(import_file) : stem_of(image);
    } else {
        if (image.empty() || points_path.empty())
            throw pdlf::error("features: builtin extraction needs --image and --points");
        pdlf::Image img = pdlf::read_png_image(image);
        auto points = pdlf::load_points_json(points_path);
        if (points.empty()) throw pdlf::error("features: empty point list in " + points_path);
        auto patches = pdlf::mesh_patches(img, points, cfg.extractor.patch_size);
        for (const auto& p : patches) records.push_back(pdlf::extract_builtin(p, cfg.extractor.dim));
        stem = stem_of(image);
    }
    pdlf::export_features(records, (fs::path(g.out_dir) / (stem + ".features.pdlf")).string());
}

void run_triangulate(const GlobalOpts& g, const std::string& points_path, bool svg) {
    ensure_out(g.out_dir);
    auto points = pdlf::load_points_json(points_path);
    std::vector<pdlf::Point2> pts;
    for (const auto& p : points) pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
    pdlf::Triangulation tri = pdlf::triangulate(pts);
    const std::string stem = stem_of(points_path);
    pdlf::save_triangulation_json(tri, (fs::path(g.out_dir) / (stem + ".tri.json")).string());
    if (svg) {
        double max_x = 0, max_y = 0;
        for (const auto& p : tri.points) {
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
        std::ofstream out((fs::path(g.out_dir) / (stem + ".tri.svg")).string(), std::ios::trunc);
        out << pdlf::overlay_svg(static_cast<int>(max_x) + 8, static_cast<int>(max_y) + 8, points, &tri);
    }
}

void run_pair(const GlobalOpts& g, const std::string& features_path, const std::string& tri_path) {
    ensure_out(g.out_dir);
    auto records = pdlf::import_features(features_path);
    const std::string stem = stem_of(features_path);
    pdlf::JointFeatureMap map;
    if (!tri_path.empty()) {
        auto tri = pdlf::load_triangulation_json(tri_path);
        map = pdlf::build_joint_map(records, pdlf::pair_features(records, tri.edges), stem);
    } else {
        map = pdlf::make_joint_map(records, stem);
    }
    pdlf::save_joint_map(map, (fs::path(g.out_dir) / (stem + ".joint.pdlf")).string());
}

struct LoadedSplit {
    std::vector<pdlf::TrainSample> train, val;
    std::vector<std::pair<std::string, pdlf::TrainSample>> test;  // id + sample
};

LoadedSplit load_split_samples(const pdlf::PipelineConfig& cfg, const std::string& data_root,
                               const std::string& joint_dir) {
    std::vector<pdlf::ManifestEntry> manifest;
    std::vector<pdlf::SamplePair> samples = pdlf::load_dataset(data_root, &manifest);

    std::vector<pdlf::TrainSample> prepared(samples.size());
    pdlf::parallel_for(static_cast<int>(samples.size()), [&](int i) {
        const pdlf::SamplePair& s = samples[static_cast<std::size_t>(i)];
        pdlf::TrainSample t;
        t.image = image_as_input(s.image, cfg.net);
        if (s.gt.height == cfg.net.input_h && s.gt.width == cfg.net.input_w)
            t.gt = s.gt;
        else
            t.gt = pdlf::resize_mask(s.gt, cfg.net.input_h, cfg.net.input_w);
        if (cfg.net.concat_block > 0) {
            const std::string joint_path =
                (fs::path(joint_dir) / (s.id + ".joint.pdlf")).string();
            if (!fs::exists(joint_path))
                throw pdlf::error("train: missing joint map " + joint_path);
            t.plane = load_plane(joint_path);
        }
        prepared[static_cast<std::size_t>(i)] = std::move(t);
    });

    LoadedSplit out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string& part = manifest[i].split;
        if (part == "train")
            out.train.push_back(std::move(prepared[i]));
        else if (part == "val")
            out.val.push_back(std::move(prepared[i]));
        else if (part == "test")
            out.test.emplace_back(manifest[i].id, std::move(prepared[i]));
    }
    return out;
}

void run_train(const GlobalOpts& g, const pdlf::PipelineConfig& cfg, const std::string& data_root,
               const std::string& joint_dir) {
    ensure_out(g.out_dir);
    LoadedSplit data = load_split_samples(cfg, data_root, joint_dir);
    if (data.train.empty()) throw pdlf::error("train: manifest assigns no training samples");

    pdlf::SegnetLite net = pdlf::SegnetLite::init(cfg.net);
    pdlf::TrainHistory history = pdlf::train(net, data.train, data.val, cfg.train);
    if (history.diverged) std::cerr << "warning: training diverged; last finite checkpoint kept\n";

    pdlf::save_checkpoint(net, (fs::path(g.out_dir) / "checkpoint.pdln").string());
    pdlf::write_history_csv(history, (fs::path(g.out_dir) / "history.csv").string());
}

void run_segment(const GlobalOpts& g, const pdlf::PipelineConfig& cfg,
                 const std::string& checkpoint, const std::string& image,
                 const std::string& joint_path, const std::string& data_root,
                 const std::string& joint_dir, const std::string& split_part) {
    ensure_out(g.out_dir);
    pdlf::SegnetLite net = pdlf::load_checkpoint(checkpoint);

    auto segment_one = [&](const pdlf::Image& img, const pdlf::Tensor& plane,
                           const std::string& id) {
        pdlf::Image fitted = img;
        if (img.height != net.cfg.input_h || img.width != net.cfg.input_w ||
            img.channels != net.cfg.in_channels) {
            pdlf::Tensor t = image_as_input(img, net.cfg);
            fitted = pdlf::Image(net.cfg.input_h, net.cfg.input_w, net.cfg.in_channels);
            fitted.pix = t.data;
        }
        pdlf::Mask m = pdlf::segment(net, fitted, plane, cfg.threshold);
        pdlf::write_png((fs::path(g.out_dir) / (id + ".mask.png")).string(), m);
    };

    if (!image.empty()) {
        pdlf::Tensor plane;
        if (net.cfg.concat_block > 0) {
            if (joint_path.empty()) throw pdlf::error("segment: checkpoint expects a joint map; pass --joint");
            plane = load_plane(joint_path);
        }
        segment_one(pdlf::read_png_image(image), plane, stem_of(image));
        return;
    }
    if (data_root.empty()) throw pdlf::error("segment: need --image or --data");

    std::vector<pdlf::ManifestEntry> manifest;
    std::vector<pdlf::SamplePair> samples = pdlf::load_dataset(data_root, &manifest);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!split_part.empty() && manifest[i].split != split_part) continue;
        pdlf::Tensor plane;
        if (net.cfg.concat_block > 0) {
            const std::string jp = (fs::path(joint_dir) / (samples[i].id + ".joint.pdlf")).string();
            if (!fs::exists(jp)) throw pdlf::error("segment: missing joint map " + jp);
            plane = load_plane(jp);
        }
        segment_one(samples[i].image, plane, samples[i].id);
    }
}

void run_eval(const GlobalOpts& g, const std::string& pred_dir, const std::string& gt_dir) {
    ensure_out(g.out_dir);
    std::vector<std::string> preds = png_files(pred_dir);
    if (preds.empty()) throw pdlf::error("eval: no prediction masks in " + pred_dir);

    std::ofstream csv((fs::path(g.out_dir) / "per_image.csv").string(), std::ios::trunc);
    csv << "id,acc,iou,dice,voe,sens,prec,spec\n";
    std::vector<pdlf::MetricsReport> reports;
    for (const std::string& pred_path : preds) {
        std::string id = stem_of(pred_path);
        fs::path gt_path = fs::path(gt_dir) / (id + ".png");
        if (!fs::exists(gt_path)) throw pdlf::error("eval: missing ground truth " + gt_path.string());
        pdlf::Mask pred = pdlf::read_png_mask(pred_path);
        pdlf::Mask gt = pdlf::read_png_mask(gt_path.string());
        pdlf::MetricsReport r = pdlf::compute_metrics(pdlf::confusion(pred, gt));
        reports.push_back(r);
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", id.c_str(),
                      r.acc, r.iou, r.dice, r.voe, r.sens, r.prec, r.spec);
        csv << line;
    }
    pdlf::MetricsReport avg = pdlf::average_reports(reports);
    json report = {{"count", reports.size()}, {"acc", avg.acc},   {"iou", avg.iou},
                   {"dice", avg.dice},        {"voe", avg.voe},   {"sens", avg.sens},
                   {"prec", avg.prec},        {"spec", avg.spec}};
    std::ofstream out((fs::path(g.out_dir) / "report.json").string(), std::ios::trunc);
    out << report.dump(2) << "\n";
}

void run_augment(const GlobalOpts& g, const pdlf::PipelineConfig& cfg, const std::string& data_root,
                 bool paper_split) {
    ensure_out(g.out_dir);
    std::vector<pdlf::SamplePair> samples = pdlf::load_dataset(data_root);
    std::vector<pdlf::SamplePair> augmented = pdlf::augment_all(samples);

    pdlf::SplitSpec spec = cfg.split;
    spec.group_variants = !paper_split;
    pdlf::SplitResult parts = pdlf::split(augmented, spec);

    std::vector<pdlf::SamplePair> ordered;
    std::vector<std::string> splits;
    for (const auto& s : parts.train) { ordered.push_back(s); splits.push_back("train"); }
    for (const auto& s : parts.val) { ordered.push_back(s); splits.push_back("val"); }
    for (const auto& s : parts.test) { ordered.push_back(s); splits.push_back("test"); }
    pdlf::save_dataset(ordered, splits, g.out_dir);
}

void run_synth(const GlobalOpts& g, const pdlf::PipelineConfig& cfg, std::uint64_t seed, int count,
               int h, int w, float contrast, float noise) {
    ensure_out(g.out_dir);
    std::vector<pdlf::SamplePair> samples = pdlf::synth_weak(seed, count, h, w, contrast, noise);
    pdlf::SplitResult parts = pdlf::split(samples, cfg.split);
    std::vector<pdlf::SamplePair> ordered;
    std::vector<std::string> splits;
    for (const auto& s : parts.train) { ordered.push_back(s); splits.push_back("train"); }
    for (const auto& s : parts.val) { ordered.push_back(s); splits.push_back("val"); }
    for (const auto& s : parts.test) { ordered.push_back(s); splits.push_back("test"); }
    pdlf::save_dataset(ordered, splits, g.out_dir);
}

void run_perturb(const GlobalOpts& g, const std::string& image, const std::string& kind,
                 double percent, std::uint64_t seed) {
    ensure_out(g.out_dir);
    pdlf::Image img = pdlf::read_png_image(image);
    pdlf::Image out = pdlf::perturb(img, pdlf::perturb_kind_from_string(kind), percent, seed);
    pdlf::write_png((fs::path(g.out_dir) / (stem_of(image) + "." + kind + ".png")).string(), out);
}

void run_overlay(const GlobalOpts& g, const std::string& image, const std::string& points_path,
                 const std::string& tri_path, const std::string& mask_path, bool svg) {
    ensure_out(g.out_dir);
    pdlf::Image img = pdlf::read_png_image(image);
    std::vector<pdlf::CornerPoint> points;
    if (!points_path.empty()) points = pdlf::load_points_json(points_path);
    std::optional<pdlf::Triangulation> tri;
    if (!tri_path.empty()) tri = pdlf::load_triangulation_json(tri_path);
    std::optional<pdlf::Mask> mask;
    if (!mask_path.empty()) mask = pdlf::read_png_mask(mask_path);

    const std::string stem = stem_of(image);
    if (svg) {
        std::ofstream out((fs::path(g.out_dir) / (stem + ".overlay.svg")).string(), std::ios::trunc);
        out << pdlf::overlay_svg(img.width, img.height, points, tri ? &*tri : nullptr);
    } else {
        pdlf::Image rendered =
            pdlf::overlay(img, points, tri ? &*tri : nullptr, mask ? &*mask : nullptr);
        pdlf::write_png((fs::path(g.out_dir) / (stem + ".overlay.png")).string(), rendered);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pairwise deep-learning feature segmentation pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "pipeline config JSON")->check(CLI::ExistingFile);
    app.add_option("--out", g.out_dir, "output directory");
    std::uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override all stage seeds");
    app.add_flag("--dry-run", g.dry_run, "validate config and exit");

    // detect
    auto* detect = app.add_subcommand("detect", "corner detection to points JSON");
    std::string d_image, d_images;
    int d_max_points = -1;
    detect->add_option("--image", d_image, "input PNG");
    detect->add_option("--images", d_images, "directory of input PNGs");
    detect->add_option("--max-points", d_max_points, "override detector.max_points");

    // features
    auto* features = app.add_subcommand("features", "patch feature extraction / import");
    std::string f_image, f_points, f_extractor, f_import;
    int f_dim = -1;
    features->add_option("--image", f_image, "input PNG");
    features->add_option("--points", f_points, "points JSON from detect");
    features->add_option("--extractor", f_extractor, "builtin|import");
    features->add_option("--import-file", f_import, "externally produced PDLF feature file");
    features->add_option("--dim", f_dim, "descriptor dimension");

    // triangulate
    auto* triangulate = app.add_subcommand("triangulate", "Delaunay triangulation of points");
    std::string t_points;
    bool t_svg = false;
    triangulate->add_option("--points", t_points, "points JSON")->required();
    triangulate->add_flag("--svg", t_svg, "also write an SVG overlay");

    // pair
    auto* pair = app.add_subcommand("pair", "pairwise features and joint map");
    std::string p_features, p_tri;
    pair->add_option("--features", p_features, "PDLF feature file")->required();
    pair->add_option("--tri", p_tri, "triangulation JSON (computed internally if omitted)");

    // train
    auto* train = app.add_subcommand("train", "train the segmentation network");
    std::string tr_data, tr_joint;
    int tr_epochs = -1, tr_concat = -1;
    train->add_option("--data", tr_data, "dataset root with manifest.json")->required();
    train->add_option("--joint", tr_joint, "directory of <id>.joint.pdlf maps");
    train->add_option("--epochs", tr_epochs, "override train.epochs");
    train->add_option("--concat-block", tr_concat, "override net.concat_block");

    // segment
    auto* seg = app.add_subcommand("segment", "run a checkpoint on images");
    std::string s_ckpt, s_image, s_joint, s_data, s_joint_dir, s_split = "test";
    double s_threshold = -1.0;
    seg->add_option("--checkpoint", s_ckpt, "PDLN checkpoint")->required();
    seg->add_option("--image", s_image, "single input PNG");
    seg->add_option("--joint", s_joint, "joint map for --image");
    seg->add_option("--data", s_data, "dataset root (batch mode)");
    seg->add_option("--joint-dir", s_joint_dir, "joint map directory (batch mode)");
    seg->add_option("--split", s_split, "manifest split to segment (batch mode)");
    seg->add_option("--threshold", s_threshold, "probability threshold");

    // eval
    auto* eval = app.add_subcommand("eval", "compare predicted masks against ground truth");
    std::string e_pred, e_gt;
    eval->add_option("--pred", e_pred, "directory of predicted masks")->required();
    eval->add_option("--gt", e_gt, "directory of ground-truth masks")->required();

    // augment
    auto* aug = app.add_subcommand("augment", "six-fold augmentation + split");
    std::string a_data;
    bool a_paper_split = false;
    aug->add_option("--data", a_data, "dataset root")->required();
    aug->add_flag("--paper-split", a_paper_split, "split after augmentation without grouping");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic weakly visible dataset");
    int sy_count = 16, sy_h = 96, sy_w = 128;
    double sy_contrast = 0.1, sy_noise = 0.05;
    std::uint64_t sy_seed = 0;
    synth->add_option("--count", sy_count, "number of samples");
    synth->add_option("--height", sy_h, "image height");
    synth->add_option("--width", sy_w, "image width");
    synth->add_option("--contrast", sy_contrast, "foreground contrast (0,0.5]");
    synth->add_option("--noise", sy_noise, "gaussian noise sigma");
    synth->add_option("--gen-seed", sy_seed, "generator seed");

    // perturb
    auto* pert = app.add_subcommand("perturb", "noise / brightness perturbations");
    std::string pe_image, pe_kind;
    double pe_percent = 0.0;
    std::uint64_t pe_seed = 0;
    pert->add_option("--image", pe_image, "input PNG")->required();
    pert->add_option("--kind", pe_kind, "gauss|salt_pepper|brightness")->required();
    pert->add_option("--percent", pe_percent, "strength in percent")->required();
    pert->add_option("--perturb-seed", pe_seed, "noise seed");

    // overlay
    auto* ovl = app.add_subcommand("overlay", "render points/triangulation/mask over an image");
    std::string o_image, o_points, o_tri, o_mask;
    bool o_svg = false;
    ovl->add_option("--image", o_image, "input PNG")->required();
    ovl->add_option("--points", o_points, "points JSON");
    ovl->add_option("--tri", o_tri, "triangulation JSON");
    ovl->add_option("--mask", o_mask, "mask PNG");
    ovl->add_flag("--svg", o_svg, "emit SVG instead of PNG");

    for (CLI::App* sub : {detect, features, triangulate, pair, train, seg, eval, aug, synth, pert, ovl})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (seed_opt->count()) g.seed = seed_val;
        pdlf::PipelineConfig cfg = make_config(g);

        // stage-specific overrides
        if (d_max_points > 0) cfg.detector.max_points = d_max_points;
        if (f_dim > 0) cfg.extractor.dim = f_dim;
        if (!f_extractor.empty()) cfg.extractor.kind = f_extractor;
        if (tr_epochs >= 0) cfg.train.epochs = tr_epochs;
        if (tr_concat >= 0) cfg.net.concat_block = tr_concat;
        if (s_threshold >= 0.0) cfg.threshold = static_cast<float>(s_threshold);
        cfg.validate();

        if (g.dry_run) {
            std::cout << "config ok\n";
            return 0;
        }

        if (detect->parsed()) {
            std::vector<std::string> inputs;
            if (!d_image.empty()) inputs.push_back(d_image);
            if (!d_images.empty())
                for (auto& f : png_files(d_images)) inputs.push_back(f);
            if (inputs.empty()) throw pdlf::error("detect: need --image or --images");
            run_detect(g, cfg, inputs);
        } else if (features->parsed()) {
            run_features(g, cfg, f_image, f_points, f_import);
        } else if (triangulate->parsed()) {
            run_triangulate(g, t_points, t_svg);
        } else if (pair->parsed()) {
            run_pair(g, p_features, p_tri);
        } else if (train->parsed()) {
            run_train(g, cfg, tr_data, tr_joint);
        } else if (seg->parsed()) {
            run_segment(g, cfg, s_ckpt, s_image, s_joint, s_data, s_joint_dir, s_split);
        } else if (eval->parsed()) {
            run_eval(g, e_pred, e_gt);
        } else if (aug->parsed()) {
            run_augment(g, cfg, a_data, a_paper_split);
        } else if (synth->parsed()) {
            std::uint64_t gen_seed = g.seed ? *g.seed : sy_seed;
            run_synth(g, cfg, gen_seed, sy_count, sy_h, sy_w, static_cast<float>(sy_contrast),
                      static_cast<float>(sy_noise));
        } else if (pert->parsed()) {
            run_perturb(g, pe_image, pe_kind, pe_percent, pe_seed);
        } else if (ovl->parsed()) {
            run_overlay(g, o_image, o_points, o_tri, o_mask, o_svg);
        }
    } catch (const std::exception& e) {
        json err = {{"error", e.what()}, {"stage", stage}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
