#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pdlf/corners.hpp"
#include "pdlf/tensor.hpp"

namespace pdlf {

/// Square pixel window centred at a corner point.
struct Patch {
    Image pixels;
    CornerPoint center;
};

/// One interest point plus its D-dimensional descriptor.
struct FeatureRecord {
    double x = 0.0;
    double y = 0.0;
    std::vector<float> vector;

    bool operator==(const FeatureRecord& o) const {
        return x == o.x && y == o.y && vector == o.vector;
    }
};

/// Cut size x size windows centred at each point. Windows that would overflow
/// the image are shifted to lie fully inside, so the patch size never changes.
inline std::vector<Patch> mesh_patches(const Image& img, const std::vector<CornerPoint>& points,
                                       int size = 40) {
    if (size < 2 || size % 2 != 0) throw error("mesh_patches: size must be even and >= 2");
    if (img.height < size || img.width < size)
        throw error("mesh_patches: image smaller than patch size");

    std::vector<Patch> patches;
    patches.reserve(points.size());
    for (const CornerPoint& p : points) {
        int y0 = std::clamp(p.y - size / 2, 0, img.height - size);
        int x0 = std::clamp(p.x - size / 2, 0, img.width - size);
        Patch patch{Image(size, size, img.channels), p};
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int c = 0; c < img.channels; ++c)
                    patch.pixels.at(y, x, c) = img.at(y0 + y, x0 + x, c);
        patches.push_back(std::move(patch));
    }
    return patches;
}

/// Deterministic patch descriptor standing in for an external deep extractor.
/// Base vector (66 values): 16-bin intensity histogram, 18-bin gradient
/// orientation histogram weighted by magnitude, and a 4x4 grid of cell
/// mean/std pairs. The base is tiled to length dim under a fixed sinusoidal
/// per-tile modulation, then L2-normalized. Identical pixels always produce
/// identical bytes; the point coordinates never enter the computation.
inline FeatureRecord extract_builtin(const Patch& p, int dim = 1000) {
    if (dim < 1) throw error("extract_builtin: dim must be >= 1");
    const Image gray = rgb_to_gray(p.pixels);
    const int h = gray.height, w = gray.width;

    std::vector<float> base(66, 0.f);

    // 16-bin intensity histogram (fractions)
    const float inv_n = 1.f / static_cast<float>(h * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int bin = std::min(15, static_cast<int>(gray.at(y, x) * 16.f));
            base[static_cast<std::size_t>(bin)] += inv_n;
        }

    // 18-bin orientation histogram, central differences, magnitude weighted,
    // normalized to fractions of the total magnitude (all-zero for flat
    // patches) so the three descriptor blocks live on comparable scales
    float total_mag = 0.f;
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            float gx = gray.at(y, x + 1) - gray.at(y, x - 1);
            float gy = gray.at(y + 1, x) - gray.at(y - 1, x);
            float mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.f) continue;
            total_mag += mag;
            double theta = std::atan2(static_cast<double>(gy), static_cast<double>(gx));
            if (theta < 0.0) theta += 6.283185307179586477;
            int bin = std::min(17, static_cast<int>(theta / 6.283185307179586477 * 18.0));
            base[static_cast<std::size_t>(16 + bin)] += mag;
        }
    if (total_mag > 0.f)
        for (int i = 16; i < 34; ++i) base[static_cast<std::size_t>(i)] /= total_mag;

    // 4x4 cell mean/std grid
    for (int cy = 0; cy < 4; ++cy)
        for (int cx = 0; cx < 4; ++cx) {
            int y0 = cy * h / 4, y1 = (cy + 1) * h / 4;
            int x0 = cx * w / 4, x1 = (cx + 1) * w / 4;
            double sum = 0.0, sum2 = 0.0;
            int n = (y1 - y0) * (x1 - x0);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    double v = gray.at(y, x);
                    sum += v;
                    sum2 += v * v;
                }
            double mean = sum / n;
            double var = std::max(0.0, sum2 / n - mean * mean);
            base[static_cast<std::size_t>(34 + 2 * (cy * 4 + cx))] = static_cast<float>(mean);
            base[static_cast<std::size_t>(34 + 2 * (cy * 4 + cx) + 1)] =
                static_cast<float>(std::sqrt(var));
        }

    FeatureRecord rec;
    rec.x = p.center.x;
    rec.y = p.center.y;
    rec.vector.resize(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        int tile = i / 66, j = i % 66;
        float mod = 1.f + 0.5f * std::sin(0.7f * static_cast<float>(tile + 1) +
                                          0.13f * static_cast<float>(j));
        float v = base[static_cast<std::size_t>(j)] * mod;
        rec.vector[static_cast<std::size_t>(i)] = v;
        norm2 += static_cast<double>(v) * v;
    }
    const float inv_norm = static_cast<float>(1.0 / std::sqrt(norm2));
    for (float& v : rec.vector) v *= inv_norm;
    return rec;
}

// ---------------------------------------------------------------------------
// Feature file: magic "PDLF", u32 version=1, u32 count, u32 dim,
// then per record: f64 x, f64 y, dim little-endian f32 values.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

template <typename T>
inline T get_le(const std::string& buf, std::size_t offset) {
    if (offset + sizeof(T) > buf.size())
        throw error("feature file: truncated at byte offset " + std::to_string(offset));
    T v;
    std::memcpy(&v, buf.data() + offset, sizeof(T));
    return v;
}

}  // namespace detail

inline void export_features(const std::vector<FeatureRecord>& records, const std::string& path) {
    if (records.empty()) throw error("export_features: empty record list");
    const std::uint32_t dim = static_cast<std::uint32_t>(records.front().vector.size());
    for (const auto& r : records)
        if (r.vector.size() != dim) throw error("export_features: inconsistent record dimensions");

    std::string buf;
    buf.reserve(16 + records.size() * (16 + dim * 4));
    buf.append("PDLF", 4);
    detail::put_u32(buf, 1u);
    detail::put_u32(buf, static_cast<std::uint32_t>(records.size()));
    detail::put_u32(buf, dim);
    for (const auto& r : records) {
        char b[8];
        std::memcpy(b, &r.x, 8);
        buf.append(b, 8);
        std::memcpy(b, &r.y, 8);
        buf.append(b, 8);
        buf.append(reinterpret_cast<const char*>(r.vector.data()), dim * 4);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error("export_features: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw error("export_features: write failed: " + path);
}

inline std::vector<FeatureRecord> import_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("import_features: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 16) throw error("feature file: truncated header at byte offset 0");
    if (buf.compare(0, 4, "PDLF") != 0) throw error("feature file: bad magic at byte offset 0");
    const std::uint32_t version = detail::get_le<std::uint32_t>(buf, 4);
    if (version != 1)
        throw error("feature file: unsupported version " + std::to_string(version) +
                    " at byte offset 4");
    const std::uint32_t count = detail::get_le<std::uint32_t>(buf, 8);
    const std::uint32_t dim = detail::get_le<std::uint32_t>(buf, 12);
    if (count == 0) throw error("feature file: zero record count at byte offset 8");
    if (dim == 0) throw error("feature file: zero dimension at byte offset 12");

    const std::size_t record_bytes = 16 + static_cast<std::size_t>(dim) * 4;
    const std::size_t expected = 16 + count * record_bytes;
    if (buf.size() != expected)
        throw error("feature file: expected " + std::to_string(expected) + " bytes, found " +
                    std::to_string(buf.size()) + "; mismatch at byte offset " +
                    std::to_string(std::min(buf.size(), expected)));

    std::vector<FeatureRecord> records(count);
    std::size_t off = 16;
    for (std::uint32_t i = 0; i < count; ++i) {
        records[i].x = detail::get_le<double>(buf, off);
        records[i].y = detail::get_le<double>(buf, off + 8);
        records[i].vector.resize(dim);
        std::memcpy(records[i].vector.data(), buf.data() + off + 16,
                    static_cast<std::size_t>(dim) * 4);
        off += record_bytes;
    }
    return records;
}

}  // namespace pdlf
