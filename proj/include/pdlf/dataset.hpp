#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdlf/png_io.hpp"
#include "pdlf/rng.hpp"
#include "pdlf/tensor.hpp"

namespace pdlf {

/// Image + ground-truth mask with equal spatial dims.
struct SamplePair {
    Image image;
    Mask gt;
    std::string id;
    std::string class_tag;
};

// Augmented variants carry "<original id>__<transform>" ids; the part before
// the separator groups variants for leakage-free splitting.
inline constexpr const char* kAugSeparator = "__";

inline std::string base_id(const std::string& id) {
    auto pos = id.find(kAugSeparator);
    return pos == std::string::npos ? id : id.substr(0, pos);
}

// ---------------------------------------------------------------------------
// geometric transforms (pixel permutations, applied to image and gt alike)
// ---------------------------------------------------------------------------

inline Image rot90(const Image& in) {  // counter-clockwise
    Image out(in.width, in.height, in.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < in.channels; ++c)
                out.at(y, x, c) = in.at(x, in.width - 1 - y, c);
    return out;
}

inline Mask rot90(const Mask& in) {
    Mask out(in.width, in.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(y, x) = in.at(x, in.width - 1 - y);
    return out;
}

template <typename T>
T rot180(const T& in) {
    return rot90(rot90(in));
}

template <typename T>
T rot270(const T& in) {
    return rot90(rot90(rot90(in)));
}

inline Image hflip(const Image& in) {
    Image out(in.height, in.width, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c) out.at(y, x, c) = in.at(y, in.width - 1 - x, c);
    return out;
}

inline Mask hflip(const Mask& in) {
    Mask out(in.height, in.width);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) out.at(y, x) = in.at(y, in.width - 1 - x);
    return out;
}

inline Image vflip(const Image& in) {
    Image out(in.height, in.width, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c) out.at(y, x, c) = in.at(in.height - 1 - y, x, c);
    return out;
}

inline Mask vflip(const Mask& in) {
    Mask out(in.height, in.width);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) out.at(y, x) = in.at(in.height - 1 - y, x);
    return out;
}

/// The six paper transforms: original, three rotations, two flips. Image and
/// ground truth get the identical transform; 20 originals become 120 pairs.
inline std::vector<SamplePair> augment(const SamplePair& s) {
    if (s.image.height != s.gt.height || s.image.width != s.gt.width)
        throw error("augment: image/gt dimension mismatch");
    std::vector<SamplePair> out;
    out.reserve(6);
    auto push = [&](const char* tag, Image img, Mask gt) {
        out.push_back({std::move(img), std::move(gt), s.id + kAugSeparator + tag, s.class_tag});
    };
    push("orig", s.image, s.gt);
    push("rot90", rot90(s.image), rot90(s.gt));
    push("rot180", rot180(s.image), rot180(s.gt));
    push("rot270", rot270(s.image), rot270(s.gt));
    push("hflip", hflip(s.image), hflip(s.gt));
    push("vflip", vflip(s.image), vflip(s.gt));
    return out;
}

inline std::vector<SamplePair> augment_all(const std::vector<SamplePair>& samples) {
    std::vector<SamplePair> out;
    out.reserve(samples.size() * 6);
    for (const auto& s : samples)
        for (auto& v : augment(s)) out.push_back(std::move(v));
    return out;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

struct SplitSpec {
    int train_ratio = 1;
    int val_ratio = 1;
    int test_ratio = 2;
    std::uint64_t seed = 0;
    // keep all augmented variants of one original in the same part; turning
    // this off reproduces the paper's split-after-augmentation protocol
    bool group_variants = true;

    void validate() const {
        if (train_ratio < 0 || val_ratio < 0 || test_ratio < 0 ||
            train_ratio + val_ratio + test_ratio == 0)
            throw error("split: ratios must be non-negative with positive sum");
    }
};

struct SplitResult {
    std::vector<SamplePair> train, val, test;
};

/// Deterministic seeded shuffle of group keys followed by a largest-remainder
/// partition per the ratios. Parts are disjoint and exhaustive.
inline SplitResult split(const std::vector<SamplePair>& samples, const SplitSpec& spec) {
    spec.validate();

    std::vector<std::string> keys;
    for (const auto& s : samples) {
        std::string k = spec.group_variants ? base_id(s.id) : s.id;
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(std::move(k));
    }

    int positive_parts = (spec.train_ratio > 0) + (spec.val_ratio > 0) + (spec.test_ratio > 0);
    if (static_cast<int>(keys.size()) < positive_parts)
        throw error("split: too few samples for the requested parts");

    Rng rng(spec.seed);
    rng.shuffle(keys);

    const double total_ratio = spec.train_ratio + spec.val_ratio + spec.test_ratio;
    const std::array<int, 3> ratios = {spec.train_ratio, spec.val_ratio, spec.test_ratio};
    std::array<int, 3> counts{};
    std::array<double, 3> fracs{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = keys.size() * ratios[static_cast<std::size_t>(i)] / total_ratio;
        counts[static_cast<std::size_t>(i)] = static_cast<int>(exact);
        fracs[static_cast<std::size_t>(i)] = exact - counts[static_cast<std::size_t>(i)];
        assigned += counts[static_cast<std::size_t>(i)];
    }
    while (assigned < static_cast<int>(keys.size())) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (fracs[static_cast<std::size_t>(i)] > fracs[static_cast<std::size_t>(best)]) best = i;
        ++counts[static_cast<std::size_t>(best)];
        fracs[static_cast<std::size_t>(best)] = -1.0;
        ++assigned;
    }
    // a positive ratio must receive at least one key
    for (int i = 0; i < 3; ++i)
        if (ratios[static_cast<std::size_t>(i)] > 0 && counts[static_cast<std::size_t>(i)] == 0)
            throw error("split: too few samples for the requested parts");

    auto part_of = [&](const std::string& key) {
        int idx = static_cast<int>(std::find(keys.begin(), keys.end(), key) - keys.begin());
        if (idx < counts[0]) return 0;
        if (idx < counts[0] + counts[1]) return 1;
        return 2;
    };

    SplitResult out;
    for (const auto& s : samples) {
        const std::string k = spec.group_variants ? base_id(s.id) : s.id;
        switch (part_of(k)) {
            case 0: out.train.push_back(s); break;
            case 1: out.val.push_back(s); break;
            default: out.test.push_back(s); break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// synthetic weakly visible samples
// ---------------------------------------------------------------------------

/// Low-contrast blob scenes for desk-scale experiments: 1-2 smooth blobs
/// (rotated ellipses with a sinusoidal boundary perturbation) at
/// background + contrast intensity, i.i.d. Gaussian pixel noise, and an exact
/// analytic mask. The background level alternates per image between a base
/// level and base + contrast, so a foreground pixel of a dark image has
/// exactly the intensity of a background pixel of a bright one; absolute
/// intensity alone cannot identify the foreground. Deterministic per seed,
/// independent of generation order.
inline std::vector<SamplePair> synth_weak(std::uint64_t seed, int count, int h, int w,
                                          float contrast, float noise_sigma) {
    if (!(contrast > 0.f && contrast <= 0.5f)) throw error("synth_weak: contrast must be in (0,0.5]");
    if (h < 16 || w < 16) throw error("synth_weak: image too small");
    if (noise_sigma < 0.f) throw error("synth_weak: negative noise sigma");

    std::vector<SamplePair> out;
    out.reserve(static_cast<std::size_t>(count));
    const Rng root(seed);

    for (int i = 0; i < count; ++i) {
        Rng rng = root.fork(static_cast<std::uint64_t>(i));
        const double bg = 0.38 + (rng.uniform() < 0.5 ? 0.0 : contrast);
        const int nblobs = rng.uniform() < 0.4 ? 2 : 1;
        const double dmin = std::min(h, w);

        Mask gt(h, w);
        for (int b = 0; b < nblobs; ++b) {
            const double scale = b == 0 ? 1.0 : 0.55;  // secondary blob smaller
            const double rx = scale * rng.uniform(dmin / 5.5, dmin / 3.0);
            const double ry = scale * rng.uniform(dmin / 5.5, dmin / 3.0);
            const double cx = rng.uniform(rx, w - rx);
            const double cy = rng.uniform(ry, h - ry);
            const double theta = rng.uniform(0.0, 3.14159265358979323846);
            const double amp = rng.uniform(0.05, 0.18);
            const int lobes = rng.uniform_int(2, 5);
            const double phase = rng.uniform(0.0, 6.28318530717958647692);
            const double ct = std::cos(theta), st = std::sin(theta);

            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double dx = x - cx, dy = y - cy;
                    const double u = (dx * ct + dy * st) / rx;
                    const double v = (-dx * st + dy * ct) / ry;
                    const double rho = std::sqrt(u * u + v * v);
                    const double phi = std::atan2(v, u);
                    if (rho <= 1.0 + amp * std::sin(lobes * phi + phase)) gt.at(y, x) = 1;
                }
        }

        Image img(h, w, 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double v = bg + (gt.at(y, x) ? contrast : 0.0);
                if (noise_sigma > 0.f) v += rng.normal(0.0, noise_sigma);
                img.at(y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }

        char id[32];
        std::snprintf(id, sizeof(id), "synth%04d", i);
        out.push_back({std::move(img), std::move(gt), id, "synth"});
    }
    return out;
}

// ---------------------------------------------------------------------------
// perturbations (robustness-harness utilities)
// ---------------------------------------------------------------------------

enum class PerturbKind { gauss, salt_pepper, brightness };

inline PerturbKind perturb_kind_from_string(const std::string& s) {
    if (s == "gauss") return PerturbKind::gauss;
    if (s == "salt_pepper") return PerturbKind::salt_pepper;
    if (s == "brightness") return PerturbKind::brightness;
    throw error("perturb: unknown kind " + s);
}

/// gauss(p): additive noise with sigma = p/100 of full range.
/// salt_pepper(p): p% of pixels forced to pure black or white.
/// brightness(p): multiplicative 1 + p/100 (p may be negative), clamped.
/// p = 0 is the bitwise identity for every kind.
inline Image perturb(const Image& img, PerturbKind kind, double percent, std::uint64_t seed = 0) {
    Image out = img;
    switch (kind) {
        case PerturbKind::gauss: {
            if (percent < 0.0) throw error("perturb: gauss percent must be >= 0");
            const double sigma = percent / 100.0;
            if (sigma == 0.0) return out;
            Rng rng(seed);
            for (float& v : out.pix)
                v = static_cast<float>(std::clamp(v + rng.normal(0.0, sigma), 0.0, 1.0));
            break;
        }
        case PerturbKind::salt_pepper: {
            if (percent < 0.0 || percent > 100.0)
                throw error("perturb: salt_pepper percent must be in [0,100]");
            if (percent == 0.0) return out;
            const double frac = percent / 100.0;
            Rng rng(seed);
            for (int y = 0; y < out.height; ++y)
                for (int x = 0; x < out.width; ++x) {
                    if (rng.uniform() >= frac) continue;
                    const float v = rng.uniform() < 0.5 ? 0.f : 1.f;
                    for (int c = 0; c < out.channels; ++c) out.at(y, x, c) = v;
                }
            break;
        }
        case PerturbKind::brightness: {
            if (percent == 0.0) return out;
            const float factor = static_cast<float>(1.0 + percent / 100.0);
            for (float& v : out.pix) v = std::clamp(v * factor, 0.f, 1.f);
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// resizing helpers (bilinear for images, nearest for masks)
// ---------------------------------------------------------------------------

inline Image resize_image(const Image& img, int out_h, int out_w) {
    Image out(out_h, out_w, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        Tensor plane({img.height, img.width});
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) plane.at2(y, x) = img.at(y, x, c);
        Tensor r = resize_bilinear(plane, out_h, out_w);
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x) out.at(y, x, c) = std::clamp(r.at2(y, x), 0.f, 1.f);
    }
    return out;
}

inline Mask resize_mask(const Mask& m, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw error("resize_mask: zero-size target");
    Mask out(out_h, out_w);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            int sy = std::min(m.height - 1, static_cast<int>(std::lround(
                                                static_cast<double>(y) * (m.height - 1) /
                                                std::max(1, out_h - 1))));
            int sx = std::min(m.width - 1, static_cast<int>(std::lround(
                                               static_cast<double>(x) * (m.width - 1) /
                                               std::max(1, out_w - 1))));
            out.at(y, x) = m.at(sy, sx);
        }
    return out;
}

// ---------------------------------------------------------------------------
// directory layout <root>/<class>/{images,gt}/<id>.png and manifest JSON
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::string id;
    std::string class_tag;
    std::string split;  // "train" | "val" | "test" | "" (unassigned)
};

inline void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : entries)
        j.push_back({{"id", e.id}, {"class", e.class_tag}, {"split", e.split}});
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw error("manifest: cannot open " + path);
    out << j.dump(2) << "\n";
}

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("manifest: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    std::vector<ManifestEntry> entries;
    for (const auto& e : j)
        entries.push_back({e.at("id").get<std::string>(), e.at("class").get<std::string>(),
                           e.value("split", std::string{})});
    return entries;
}

inline void save_sample(const SamplePair& s, const std::string& root) {
    namespace fs = std::filesystem;
    fs::path base = fs::path(root) / s.class_tag;
    fs::create_directories(base / "images");
    fs::create_directories(base / "gt");
    write_png((base / "images" / (s.id + ".png")).string(), s.image);
    write_png((base / "gt" / (s.id + ".png")).string(), s.gt);
}

inline SamplePair load_sample(const std::string& root, const std::string& class_tag,
                              const std::string& id) {
    namespace fs = std::filesystem;
    fs::path base = fs::path(root) / class_tag;
    SamplePair s;
    s.image = read_png_image((base / "images" / (id + ".png")).string());
    s.gt = read_png_mask((base / "gt" / (id + ".png")).string());
    s.id = id;
    s.class_tag = class_tag;
    if (s.image.height != s.gt.height || s.image.width != s.gt.width)
        throw error("dataset: image/gt dimension mismatch for " + id);
    return s;
}

inline void save_dataset(const std::vector<SamplePair>& samples,
                         const std::vector<std::string>& splits, const std::string& root) {
    namespace fs = std::filesystem;
    fs::create_directories(root);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        save_sample(samples[i], root);
        entries.push_back({samples[i].id, samples[i].class_tag,
                           i < splits.size() ? splits[i] : std::string{}});
    }
    save_manifest(entries, (fs::path(root) / "manifest.json").string());
}

inline std::vector<SamplePair> load_dataset(const std::string& root,
                                            std::vector<ManifestEntry>* manifest_out = nullptr) {
    namespace fs = std::filesystem;
    auto entries = load_manifest((fs::path(root) / "manifest.json").string());
    std::vector<SamplePair> samples;
    samples.reserve(entries.size());
    for (const auto& e : entries) samples.push_back(load_sample(root, e.class_tag, e.id));
    if (manifest_out) *manifest_out = entries;
    return samples;
}

}  // namespace pdlf
