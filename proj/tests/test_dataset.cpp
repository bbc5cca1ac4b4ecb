#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "pdlf/dataset.hpp"
#include "pdlf/metrics.hpp"
#include "pdlf/rng.hpp"

using namespace pdlf;

namespace {

SamplePair random_pair(std::uint64_t seed, int h = 12, int w = 18, const std::string& id = "s") {
    Rng rng(seed);
    SamplePair s;
    s.image = Image(h, w, 1);
    for (float& v : s.image.pix) v = static_cast<float>(rng.uniform());
    s.gt = Mask(h, w);
    for (auto& v : s.gt.v) v = rng.uniform() < 0.3 ? 1 : 0;
    s.id = id;
    s.class_tag = "DC1";
    return s;
}

std::vector<float> sorted_pixels(const Image& img) {
    std::vector<float> v = img.pix;
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST(Augment, SixVariants) {
    SamplePair s = random_pair(1);
    auto variants = augment(s);
    ASSERT_EQ(variants.size(), 6u);
    std::set<std::string> ids;
    for (const auto& v : variants) {
        ids.insert(v.id);
        EXPECT_EQ(base_id(v.id), "s");
        EXPECT_EQ(v.image.height, v.gt.height);
        EXPECT_EQ(v.image.width, v.gt.width);
    }
    EXPECT_EQ(ids.size(), 6u);
}

TEST(Augment, Rot90FourTimesIsIdentity) {
    SamplePair s = random_pair(2, 10, 14);
    Image i4 = rot90(rot90(rot90(rot90(s.image))));
    Mask m4 = rot90(rot90(rot90(rot90(s.gt))));
    EXPECT_EQ(i4.pix, s.image.pix);  // bitwise
    EXPECT_EQ(m4.v, s.gt.v);
}

TEST(Augment, ForegroundCountInvariant) {
    SamplePair s = random_pair(3);
    for (const auto& v : augment(s)) EXPECT_EQ(v.gt.foreground_count(), s.gt.foreground_count());
}

TEST(Augment, PixelHistogramInvariant) {
    SamplePair s = random_pair(4);
    auto ref = sorted_pixels(s.image);
    for (const auto& v : augment(s)) EXPECT_EQ(sorted_pixels(v.image), ref);
}

TEST(Augment, TwentyPairsBecomeOneTwenty) {
    std::vector<SamplePair> originals;
    for (int i = 0; i < 20; ++i)
        originals.push_back(random_pair(static_cast<std::uint64_t>(i), 12, 18, "img" + std::to_string(i)));
    EXPECT_EQ(augment_all(originals).size(), 120u);
}

TEST(Split, PaperCounts30_30_60) {
    std::vector<SamplePair> originals;
    for (int i = 0; i < 20; ++i)
        originals.push_back(random_pair(static_cast<std::uint64_t>(i), 12, 18, "img" + std::to_string(i)));
    auto augmented = augment_all(originals);
    SplitSpec spec;  // 1:1:2, grouped
    spec.seed = 99;
    SplitResult parts = split(augmented, spec);
    EXPECT_EQ(parts.train.size(), 30u);
    EXPECT_EQ(parts.val.size(), 30u);
    EXPECT_EQ(parts.test.size(), 60u);
}

TEST(Split, NoLeakageAcrossParts) {
    std::vector<SamplePair> originals;
    for (int i = 0; i < 12; ++i)
        originals.push_back(random_pair(static_cast<std::uint64_t>(i), 12, 18, "o" + std::to_string(i)));
    auto augmented = augment_all(originals);
    for (std::uint64_t seed : {0ull, 1ull, 42ull, 999ull}) {
        SplitSpec spec;
        spec.seed = seed;
        SplitResult parts = split(augmented, spec);
        auto bases = [](const std::vector<SamplePair>& v) {
            std::set<std::string> out;
            for (const auto& s : v) out.insert(base_id(s.id));
            return out;
        };
        auto tr = bases(parts.train), va = bases(parts.val), te = bases(parts.test);
        for (const auto& b : tr) {
            EXPECT_FALSE(va.count(b));
            EXPECT_FALSE(te.count(b));
        }
        for (const auto& b : va) EXPECT_FALSE(te.count(b));
    }
}

TEST(Split, PartitionContract) {
    std::vector<SamplePair> samples;
    for (int i = 0; i < 17; ++i)
        samples.push_back(random_pair(static_cast<std::uint64_t>(i), 12, 18, "p" + std::to_string(i)));
    SplitSpec spec;
    spec.seed = 5;
    SplitResult parts = split(samples, spec);
    EXPECT_EQ(parts.train.size() + parts.val.size() + parts.test.size(), samples.size());
    std::set<std::string> seen;
    for (const auto* part : {&parts.train, &parts.val, &parts.test})
        for (const auto& s : *part) EXPECT_TRUE(seen.insert(s.id).second);
    EXPECT_EQ(seen.size(), samples.size());
}

TEST(Split, AllTrainRatio) {
    std::vector<SamplePair> samples;
    for (int i = 0; i < 5; ++i)
        samples.push_back(random_pair(static_cast<std::uint64_t>(i), 12, 18, "q" + std::to_string(i)));
    SplitSpec spec;
    spec.train_ratio = 1;
    spec.val_ratio = 0;
    spec.test_ratio = 0;
    SplitResult parts = split(samples, spec);
    EXPECT_EQ(parts.train.size(), 5u);
    EXPECT_TRUE(parts.val.empty());
    EXPECT_TRUE(parts.test.empty());
}

TEST(Split, DeterministicPerSeed) {
    std::vector<SamplePair> samples;
    for (int i = 0; i < 9; ++i)
        samples.push_back(random_pair(static_cast<std::uint64_t>(i), 12, 18, "d" + std::to_string(i)));
    SplitSpec spec;
    spec.seed = 31;
    auto ids = [](const SplitResult& r) {
        std::vector<std::string> out;
        for (const auto& s : r.train) out.push_back("t:" + s.id);
        for (const auto& s : r.val) out.push_back("v:" + s.id);
        for (const auto& s : r.test) out.push_back("e:" + s.id);
        return out;
    };
    EXPECT_EQ(ids(split(samples, spec)), ids(split(samples, spec)));
}

TEST(Split, TooFewSamplesError) {
    std::vector<SamplePair> samples{random_pair(0, 12, 18, "a"), random_pair(1, 12, 18, "b")};
    SplitSpec spec;  // needs 3 non-empty parts
    EXPECT_THROW(split(samples, spec), error);
}

TEST(SynthWeak, DeterministicPerSeed) {
    auto a = synth_weak(7, 4, 32, 48, 0.2f, 0.05f);
    auto b = synth_weak(7, 4, 32, 48, 0.2f, 0.05f);
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].image.pix, b[i].image.pix);  // bitwise
        EXPECT_EQ(a[i].gt.v, b[i].gt.v);
        EXPECT_EQ(a[i].id, b[i].id);
    }
    auto c = synth_weak(8, 4, 32, 48, 0.2f, 0.05f);
    EXPECT_NE(c[0].image.pix, a[0].image.pix);
}

TEST(SynthWeak, MasksAreExactBinaryIndicators) {
    auto samples = synth_weak(11, 6, 32, 32, 0.3f, 0.1f);
    for (const auto& s : samples) {
        std::size_t fg = s.gt.foreground_count();
        EXPECT_GT(fg, 0u);
        EXPECT_LT(fg, s.gt.size());
        for (auto v : s.gt.v) EXPECT_TRUE(v == 0 || v == 1);
        for (float v : s.image.pix) {
            EXPECT_GE(v, 0.f);
            EXPECT_LE(v, 1.f);
        }
    }
}

TEST(SynthWeak, ContrastRangeEnforced) {
    EXPECT_THROW(synth_weak(1, 1, 32, 32, 0.f, 0.f), error);
    EXPECT_THROW(synth_weak(1, 1, 32, 32, 0.6f, 0.f), error);
}

TEST(SynthWeak, HighContrastOtsuSanity) {
    auto samples = synth_weak(21, 6, 64, 64, 0.5f, 0.f);
    double iou_sum = 0;
    for (const auto& s : samples)
        iou_sum += compute_metrics(confusion(otsu_threshold(s.image), s.gt)).iou;
    EXPECT_GE(iou_sum / static_cast<double>(samples.size()), 0.95);
}

TEST(Perturb, Identities) {
    SamplePair s = random_pair(31);
    Image b0 = perturb(s.image, PerturbKind::brightness, 0.0);
    EXPECT_EQ(b0.pix, s.image.pix);  // bitwise identity
    Image g0 = perturb(s.image, PerturbKind::gauss, 0.0, 5);
    EXPECT_EQ(g0.pix, s.image.pix);
}

TEST(Perturb, SaltPepperFull) {
    SamplePair s = random_pair(37);
    Image sp = perturb(s.image, PerturbKind::salt_pepper, 100.0, 3);
    for (float v : sp.pix) EXPECT_TRUE(v == 0.f || v == 1.f);
}

TEST(Perturb, BrightnessClampsAndScales) {
    Image img(1, 3, 1);
    img.at(0, 0) = 0.4f;
    img.at(0, 1) = 0.9f;
    img.at(0, 2) = 0.1f;
    Image up = perturb(img, PerturbKind::brightness, 25.0);
    EXPECT_FLOAT_EQ(up.at(0, 0), 0.5f);
    EXPECT_FLOAT_EQ(up.at(0, 1), 1.0f);  // clamped
    Image down = perturb(img, PerturbKind::brightness, -25.0);
    EXPECT_FLOAT_EQ(down.at(0, 0), 0.3f);
}

TEST(Perturb, DeterministicPerSeed) {
    SamplePair s = random_pair(41);
    Image a = perturb(s.image, PerturbKind::gauss, 7.0, 11);
    Image b = perturb(s.image, PerturbKind::gauss, 7.0, 11);
    EXPECT_EQ(a.pix, b.pix);
    Image c = perturb(s.image, PerturbKind::gauss, 7.0, 12);
    EXPECT_NE(c.pix, a.pix);
}

TEST(DatasetIo, SaveLoadRoundTrip) {
    namespace fs = std::filesystem;
    const std::string root = (fs::temp_directory_path() / "pdlf_ds_roundtrip").string();
    fs::remove_all(root);

    std::vector<SamplePair> samples;
    for (int i = 0; i < 4; ++i)
        samples.push_back(random_pair(static_cast<std::uint64_t>(60 + i), 16, 20, "rt" + std::to_string(i)));
    save_dataset(samples, {"train", "train", "val", "test"}, root);

    std::vector<ManifestEntry> manifest;
    auto loaded = load_dataset(root, &manifest);
    ASSERT_EQ(loaded.size(), 4u);
    EXPECT_EQ(manifest[0].split, "train");
    EXPECT_EQ(manifest[2].split, "val");
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        EXPECT_EQ(loaded[i].id, samples[i].id);
        EXPECT_EQ(loaded[i].gt.v, samples[i].gt.v);  // masks survive exactly
        ASSERT_EQ(loaded[i].image.pix.size(), samples[i].image.pix.size());
        for (std::size_t p = 0; p < loaded[i].image.pix.size(); ++p)
            EXPECT_NEAR(loaded[i].image.pix[p], samples[i].image.pix[p], 0.5f / 255.f + 1e-6f);
    }
    fs::remove_all(root);
}

TEST(ResizeHelpers, MaskStaysBinary) {
    Mask m(10, 10);
    for (int y = 3; y < 7; ++y)
        for (int x = 3; x < 7; ++x) m.at(y, x) = 1;
    Mask r = resize_mask(m, 20, 20);
    for (auto v : r.v) EXPECT_TRUE(v == 0 || v == 1);
    EXPECT_GT(r.foreground_count(), 0u);
    Image img(10, 10, 1, 0.6f);
    Image ri = resize_image(img, 24, 12);
    for (float v : ri.pix) EXPECT_FLOAT_EQ(v, 0.6f);
}
