#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pdlf/overlay.hpp"
#include "pdlf/pairing.hpp"
#include "pdlf/pipeline.hpp"
#include "pdlf/png_io.hpp"
#include "pdlf/rng.hpp"

namespace fs = std::filesystem;
using namespace pdlf;

namespace {

const std::string kCli = PDLF_CLI_PATH;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& sub = {}) const {
        return sub.empty() ? path.string() : (path / sub).string();
    }
};

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Image blob_image(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Image img(h, w, 1, 0.3f);
    for (int y = h / 4; y < 3 * h / 4; ++y)
        for (int x = w / 4; x < 3 * w / 4; ++x) img.at(y, x) = 0.8f;
    for (float& v : img.pix) v = std::clamp(v + static_cast<float>(rng.uniform(-0.02, 0.02)), 0.f, 1.f);
    return img;
}

}  // namespace

TEST(Config, DryRunValidation) {
    TempDir dir("pdlf_cfg_test");
    {
        std::ofstream out(dir.str("bad.json"));
        out << R"({"net": {"blocks": 3, "concat_block": 5, "input_h": 96, "input_w": 128}})";
    }
    EXPECT_NE(run_cli("--config " + dir.str("bad.json") + " --dry-run synth --out " + dir.str("o")), 0);
    {
        std::ofstream out(dir.str("good.json"));
        out << R"({"net": {"blocks": 3, "concat_block": 2, "input_h": 96, "input_w": 128}})";
    }
    EXPECT_EQ(run_cli("--config " + dir.str("good.json") + " --dry-run synth --out " + dir.str("o")), 0);
}

TEST(Stages, PairOnTriangleGivesSixRows) {
    TempDir dir("pdlf_pair_test");
    std::vector<FeatureRecord> records(3);
    records[0] = {10, 10, {1.f, 0.f}};
    records[1] = {50, 12, {0.f, 1.f}};
    records[2] = {30, 40, {0.5f, 0.5f}};
    export_features(records, dir.str("tri.features.pdlf"));

    ASSERT_EQ(run_cli("pair --features " + dir.str("tri.features.pdlf") + " --out " + dir.str()), 0);
    JointFeatureMap map = load_joint_map(dir.str("tri.joint.pdlf"));
    EXPECT_EQ(map.row_count(), 6);
}

TEST(Stages, DetectEmitsPointSchema) {
    TempDir dir("pdlf_detect_test");
    write_png(dir.str("img.png"), blob_image(64, 64, 3));
    ASSERT_EQ(run_cli("detect --image " + dir.str("img.png") + " --out " + dir.str()), 0);
    nlohmann::json j = nlohmann::json::parse(read_file(dir.str("img.points.json")));
    ASSERT_TRUE(j.is_array());
    ASSERT_FALSE(j.empty());
    for (const auto& p : j) {
        EXPECT_TRUE(p.contains("x"));
        EXPECT_TRUE(p.contains("y"));
        EXPECT_TRUE(p.contains("score"));
    }
}

TEST(Stages, EvalMaskAgainstItselfIsPerfect) {
    TempDir dir("pdlf_eval_test");
    fs::create_directories(dir.str("pred"));
    fs::create_directories(dir.str("gt"));
    Mask m(16, 16);
    for (int y = 4; y < 10; ++y)
        for (int x = 4; x < 10; ++x) m.at(y, x) = 1;
    write_png(dir.str("pred/a.png"), m);
    write_png(dir.str("gt/a.png"), m);
    ASSERT_EQ(run_cli("eval --pred " + dir.str("pred") + " --gt " + dir.str("gt") + " --out " +
                      dir.str("report")),
              0);
    nlohmann::json report = nlohmann::json::parse(read_file(dir.str("report/report.json")));
    EXPECT_DOUBLE_EQ(report.at("dice").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(report.at("voe").get<double>(), 0.0);
}

TEST(Stages, TriangulateCollinearFailsStructured) {
    TempDir dir("pdlf_collinear_test");
    save_points_json({{0, 0, 1.f}, {5, 5, 1.f}, {10, 10, 1.f}}, dir.str("line.points.json"));
    const std::string cmd = kCli + " triangulate --points " + dir.str("line.points.json") +
                            " --out " + dir.str() + " 2> " + dir.str("err.txt");
    int status = std::system(cmd.c_str());
    EXPECT_NE(WEXITSTATUS(status), 0);
    nlohmann::json err = nlohmann::json::parse(read_file(dir.str("err.txt")));
    EXPECT_TRUE(err.contains("error"));
    EXPECT_EQ(err.at("stage"), "triangulate");
}

TEST(Stages, DetectFeaturesPairAreIdempotent) {
    TempDir dir("pdlf_idem_test");
    write_png(dir.str("img.png"), blob_image(64, 96, 9));
    const std::string common = " --image " + dir.str("img.png");
    for (const char* out : {"run1", "run2"}) {
        const std::string o = dir.str(out);
        ASSERT_EQ(run_cli("detect" + common + " --out " + o), 0);
        ASSERT_EQ(run_cli("features --dim 48" + common + " --points " + o + "/img.points.json --out " + o), 0);
        ASSERT_EQ(run_cli("pair --features " + o + "/img.features.pdlf --out " + o), 0);
    }
    for (const char* name :
         {"img.points.json", "img.features.pdlf", "img.joint.pdlf", "img.joint.pdlf.meta.json"})
        EXPECT_EQ(read_file(dir.str("run1/") + name), read_file(dir.str("run2/") + name)) << name;
}

TEST(Stages, FeatureImportPath) {
    TempDir dir("pdlf_import_test");
    std::vector<FeatureRecord> external(4);
    Rng rng(5);
    for (std::size_t i = 0; i < external.size(); ++i) {
        external[i].x = 10.0 * static_cast<double>(i) + 3;
        external[i].y = 7.0 * static_cast<double>(i) + 2;
        external[i].vector.resize(32);
        for (float& v : external[i].vector) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
    export_features(external, dir.str("deep.pdlf"));
    ASSERT_EQ(run_cli("features --extractor import --import-file " + dir.str("deep.pdlf") +
                      " --out " + dir.str()),
              0);
    auto loaded = import_features(dir.str("deep.features.pdlf"));
    ASSERT_EQ(loaded.size(), external.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) EXPECT_TRUE(loaded[i] == external[i]);
}

TEST(Stages, PerturbWritesImage) {
    TempDir dir("pdlf_perturb_test");
    write_png(dir.str("img.png"), blob_image(32, 32, 13));
    ASSERT_EQ(run_cli("perturb --image " + dir.str("img.png") +
                      " --kind salt_pepper --percent 10 --out " + dir.str()),
              0);
    Image out = read_png_image(dir.str("img.salt_pepper.png"));
    EXPECT_EQ(out.height, 32);
}

TEST(Overlay, MarkerCountAndMaskOnly) {
    Image img(32, 32, 1, 0.5f);
    std::vector<CornerPoint> points{{8, 8, 1.f}, {20, 16, 1.f}, {28, 28, 1.f}};
    Image rendered = overlay(img, points);
    int red_regions = 0;
    for (const auto& p : points) {
        if (rendered.at(p.y, p.x, 0) == 1.f && rendered.at(p.y, p.x, 1) == 0.f) ++red_regions;
    }
    EXPECT_EQ(red_regions, 3);

    // empty point list: image unchanged except the mask overlay
    Mask m(32, 32);
    for (int x = 0; x < 10; ++x) m.at(4, x) = 1;
    Image mask_only = overlay(img, {}, nullptr, &m);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            if (m.at(y, x)) {
                EXPECT_GT(mask_only.at(y, x, 1), img.at(y, x));  // tinted green
            } else {
                for (int c = 0; c < 3; ++c) EXPECT_FLOAT_EQ(mask_only.at(y, x, c), img.at(y, x));
            }
        }
}

TEST(Overlay, DeterministicSvg) {
    TempDir dir("pdlf_overlay_test");
    write_png(dir.str("img.png"), blob_image(48, 48, 21));
    save_points_json({{10, 10, 1.f}, {30, 12, 2.f}, {24, 36, 3.f}}, dir.str("img.points.json"));
    ASSERT_EQ(run_cli("triangulate --points " + dir.str("img.points.json") + " --out " + dir.str()), 0);
    for (const char* out : {"o1", "o2"}) {
        ASSERT_EQ(run_cli("overlay --image " + dir.str("img.png") + " --points " +
                          dir.str("img.points.json") + " --tri " + dir.str("img.tri.json") +
                          " --svg --out " + dir.str(out)),
                  0);
    }
    const std::string svg = read_file(dir.str("o1/img.overlay.svg"));
    EXPECT_EQ(svg, read_file(dir.str("o2/img.overlay.svg")));
    EXPECT_NE(svg.find("<circle"), std::string::npos);
    EXPECT_NE(svg.find("<line"), std::string::npos);
}

TEST(PipelineConfig, JsonRoundTripAndOverrides) {
    nlohmann::json j = {{"detector", {{"max_points", 12}, {"quality", 0.02}}},
                        {"extractor", {{"dim", 128}}},
                        {"net", {{"blocks", 2}, {"input_h", 64}, {"input_w", 64}, {"channels", {4, 8}}}},
                        {"train", {{"epochs", 3}, {"batch_size", 2}}},
                        {"split", {{"train", 2}, {"val", 1}, {"test", 1}}},
                        {"threshold", 0.4}};
    PipelineConfig cfg = pipeline_config_from_json(j);
    cfg.validate();
    EXPECT_EQ(cfg.detector.max_points, 12);
    EXPECT_FLOAT_EQ(cfg.detector.quality, 0.02f);
    EXPECT_EQ(cfg.extractor.dim, 128);
    EXPECT_EQ(cfg.net.blocks, 2);
    EXPECT_EQ(cfg.train.epochs, 3);
    EXPECT_EQ(cfg.split.train_ratio, 2);
    EXPECT_FLOAT_EQ(cfg.threshold, 0.4f);
}
