#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "pdlf/net.hpp"
#include "pdlf/rng.hpp"

using namespace pdlf;

namespace {

NetworkConfig small_config(int concat_block = 0, std::uint64_t seed = 1) {
    NetworkConfig cfg;
    cfg.input_h = 16;
    cfg.input_w = 16;
    cfg.in_channels = 1;
    cfg.blocks = 2;
    cfg.channels = {2, 3};
    cfg.concat_block = concat_block;
    cfg.seed = seed;
    return cfg;
}

Tensor random_batch(const NetworkConfig& cfg, int n, std::uint64_t seed) {
    Rng rng(seed);
    Tensor x({n, cfg.in_channels, cfg.input_h, cfg.input_w});
    for (float& v : x.data) v = static_cast<float>(rng.uniform());
    return x;
}

Tensor random_plane(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t({rows, cols});
    for (float& v : t.data) v = static_cast<float>(rng.uniform());
    return t;
}

std::vector<TrainSample> toy_samples(const NetworkConfig& cfg, int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainSample> out;
    for (int i = 0; i < n; ++i) {
        TrainSample s;
        s.image = Tensor({cfg.in_channels, cfg.input_h, cfg.input_w});
        s.gt = Mask(cfg.input_h, cfg.input_w);
        // bright square = foreground
        int y0 = rng.uniform_int(2, cfg.input_h / 2), x0 = rng.uniform_int(2, cfg.input_w / 2);
        for (int y = 0; y < cfg.input_h; ++y)
            for (int x = 0; x < cfg.input_w; ++x) {
                bool fg = y >= y0 && y < y0 + 6 && x >= x0 && x < x0 + 6;
                s.gt.at(y, x) = fg ? 1 : 0;
                s.image.data[static_cast<std::size_t>(y) * cfg.input_w + x] =
                    static_cast<float>((fg ? 0.7 : 0.3) + rng.uniform(-0.05, 0.05));
            }
        s.plane = random_plane(6, 8, seed + 100 + static_cast<std::uint64_t>(i));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST(NetworkConfig, Validation) {
    NetworkConfig cfg = small_config();
    cfg.concat_block = 3;  // > blocks
    EXPECT_THROW(cfg.validate(), error);
    cfg = small_config();
    cfg.input_h = 17;  // not divisible by 2^blocks
    EXPECT_THROW(cfg.validate(), error);
    cfg = small_config();
    cfg.kernel = 3;
    EXPECT_THROW(cfg.validate(), error);
    cfg = small_config();
    cfg.blocks = 6;
    EXPECT_THROW(cfg.validate(), error);
}

TEST(Forward, OutputShapeAndRange) {
    SegnetLite net = SegnetLite::init(small_config());
    Tensor x = random_batch(net.cfg, 2, 5);
    Tensor probs = net.forward(x, {}, /*train=*/false);
    EXPECT_EQ(probs.shape, (std::vector<int>{2, 1, 16, 16}));
    for (float v : probs.data) {
        EXPECT_GT(v, 0.f);
        EXPECT_LT(v, 1.f);
    }
}

TEST(Forward, FreshInitCalibration) {
    // freshly initialized nets stay near 0.5 mean output
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SegnetLite net = SegnetLite::init(small_config(0, seed));
        Tensor x = random_batch(net.cfg, 1, 900 + seed);
        Tensor probs = net.forward(x, {}, false);
        double mean = 0;
        for (float v : probs.data) mean += v;
        mean /= static_cast<double>(probs.size());
        EXPECT_GE(mean, 0.3) << "seed " << seed;
        EXPECT_LE(mean, 0.7) << "seed " << seed;
    }
}

TEST(Forward, EncoderDecoderMirror) {
    for (int blocks = 2; blocks <= 4; ++blocks) {
        NetworkConfig cfg;
        cfg.input_h = 32;
        cfg.input_w = 64;
        cfg.blocks = blocks;
        cfg.channels = std::vector<int>(static_cast<std::size_t>(blocks), 2);
        SegnetLite net = SegnetLite::init(cfg);
        Tensor x = random_batch(cfg, 1, 7);
        ForwardCache cache;
        Tensor probs = net.forward(x, {}, false, &cache);
        EXPECT_EQ(probs.dim(2), 32);
        EXPECT_EQ(probs.dim(3), 64);
        // decoder block k unpools back to the dims seen before encoder block k pooled
        for (int k = 1; k <= blocks; ++k) {
            const auto& enc_in = cache.enc[static_cast<std::size_t>(k - 1)].conv_in;
            const auto& dec_in = cache.dec[static_cast<std::size_t>(k - 1)].conv_in;
            EXPECT_EQ(dec_in.dim(2), enc_in.dim(2));
            EXPECT_EQ(dec_in.dim(3), enc_in.dim(3));
        }
    }
}

TEST(Forward, ConcatDimensionArithmetic) {
    NetworkConfig cfg;
    cfg.input_h = 96;
    cfg.input_w = 128;
    cfg.blocks = 3;
    cfg.channels = {8, 16, 32};
    cfg.concat_block = 2;
    SegnetLite net = SegnetLite::init(cfg);
    Tensor x = random_batch(cfg, 1, 3);
    ForwardCache cache;
    net.forward(x, {random_plane(20, 64, 1)}, false, &cache);
    // block-2 input: 8 channels at 48x64, plus the appended plane channel
    EXPECT_EQ(cache.enc[1].conv_in.shape, (std::vector<int>{1, 9, 48, 64}));
}

TEST(Forward, ConstantPlaneAppendsConstantChannel) {
    NetworkConfig cfg = small_config(2);
    SegnetLite net = SegnetLite::init(cfg);
    Tensor x = random_batch(cfg, 1, 9);
    ForwardCache cache;
    net.forward(x, {Tensor({4, 4}, 0.5f)}, false, &cache);
    const Tensor& conv_in = cache.enc[1].conv_in;
    const int c = conv_in.dim(1), hw = conv_in.dim(2) * conv_in.dim(3);
    for (int p = 0; p < hw; ++p)
        EXPECT_FLOAT_EQ(conv_in.data[static_cast<std::size_t>((c - 1) * hw + p)], 0.5f);
}

TEST(Forward, DisabledConcatIndependentOfPlanes) {
    SegnetLite net = SegnetLite::init(small_config(0));
    Tensor x = random_batch(net.cfg, 2, 13);
    Tensor a = net.forward(x, {random_plane(5, 7, 1), random_plane(9, 3, 2)}, false);
    Tensor b = net.forward(x, {random_plane(30, 40, 3), Tensor{}}, false);
    EXPECT_EQ(a.data, b.data);  // byte-identical
}

TEST(Forward, MissingPlaneMeansZeroChannel) {
    NetworkConfig cfg = small_config(1);
    SegnetLite net = SegnetLite::init(cfg);
    Tensor x = random_batch(cfg, 1, 15);
    ForwardCache cache;
    net.forward(x, {Tensor{}}, false, &cache);
    const Tensor& conv_in = cache.enc[0].conv_in;
    const int c = conv_in.dim(1), hw = conv_in.dim(2) * conv_in.dim(3);
    for (int p = 0; p < hw; ++p)
        EXPECT_FLOAT_EQ(conv_in.data[static_cast<std::size_t>((c - 1) * hw + p)], 0.f);
}

TEST(Backward, FullNetworkGradientCheck) {
    NetworkConfig cfg = small_config(2, 21);
    SegnetLite net = SegnetLite::init(cfg);
    Tensor x = random_batch(cfg, 2, 23);
    std::vector<Tensor> planes{random_plane(5, 6, 1), random_plane(7, 5, 2)};
    Tensor target({2, 1, 16, 16});
    Rng rng(27);
    for (float& v : target.data) v = rng.uniform() < 0.5 ? 0.f : 1.f;

    // Index unpooling makes the loss only piecewise smooth in the weights: a
    // pool-argmax flip teleports a decoder value. The finite-difference probe
    // therefore records the pool routing and discards the rare coordinates
    // whose perturbation changes it; backprop differentiates the fixed-routing
    // function.
    auto eval = [&](double& loss, std::vector<PoolIndices>& sig) {
        NetworkParams saved = net.params;
        ForwardCache cache;
        net.forward(x, planes, /*train=*/true, &cache);
        loss = bce_loss(cache.probs, target);
        sig.clear();
        for (const auto& bc : cache.enc) sig.push_back(bc.pool_idx);
        net.params = saved;
    };
    double base_loss;
    std::vector<PoolIndices> base_sig;
    eval(base_loss, base_sig);

    NetworkParams saved = net.params;
    ForwardCache cache;
    net.forward(x, planes, true, &cache);
    Tensor dprob;
    bce_loss(cache.probs, target, &dprob);
    std::vector<Tensor> grads = net.backward(cache, dprob);
    net.params = saved;

    // first-layer weights: enc1.conv.w is tensor index 0
    ASSERT_EQ(net.params.tensors[0].name, "enc1.conv.w");
    Tensor& w = net.params.tensors[0].value;
    const float eps = 3e-4f;
    double na = 0, nb = 0, nd = 0;
    int measured = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const float orig = w.data[i];
        double up, down;
        std::vector<PoolIndices> sig_up, sig_down;
        w.data[i] = orig + eps;
        eval(up, sig_up);
        w.data[i] = orig - eps;
        eval(down, sig_down);
        w.data[i] = orig;
        if (sig_up != base_sig || sig_down != base_sig) continue;
        const double fd = (up - down) / (2.0 * eps);
        na += fd * fd;
        nb += static_cast<double>(grads[0].data[i]) * grads[0].data[i];
        const double d = fd - grads[0].data[i];
        nd += d * d;
        ++measured;
    }
    EXPECT_GE(measured, static_cast<int>(w.size()) - 5);
    EXPECT_LT(std::sqrt(nd) / std::max(std::sqrt(na), std::sqrt(nb)), 1e-2);
}

TEST(Train, LrZeroLeavesParamsUnchanged) {
    SegnetLite net = SegnetLite::init(small_config());
    NetworkParams before = net.params;
    TrainConfig tc;
    tc.lr = 0.f;
    tc.epochs = 2;
    tc.batch_size = 2;
    auto samples = toy_samples(net.cfg, 4, 31);
    train(net, samples, {}, tc);
    for (std::size_t i = 0; i < before.tensors.size(); ++i)
        if (before.tensors[i].learnable)
            EXPECT_EQ(net.params.tensors[i].value.data, before.tensors[i].value.data);
}

TEST(Train, SingleStepDescent) {
    SegnetLite net = SegnetLite::init(small_config(0, 33));
    auto samples = toy_samples(net.cfg, 1, 37);

    Tensor x({1, 1, 16, 16});
    x.data = samples[0].image.data;
    Tensor target({1, 1, 16, 16});
    for (std::size_t i = 0; i < samples[0].gt.v.size(); ++i) target.data[i] = samples[0].gt.v[i];

    NetworkParams initial = net.params;
    ForwardCache cache;
    net.forward(x, {samples[0].plane}, true, &cache);
    const double loss_before = bce_loss(cache.probs, target);
    net.params = initial;

    TrainConfig tc;
    tc.lr = 1e-3f;
    tc.momentum = 0.f;
    tc.epochs = 1;
    tc.batch_size = 1;
    train(net, samples, {}, tc);

    net.forward(x, {samples[0].plane}, true, &cache);
    const double loss_after = bce_loss(cache.probs, target);
    EXPECT_LT(loss_after, loss_before);
}

TEST(Train, DeterministicGivenSeed) {
    auto run = [] {
        SegnetLite net = SegnetLite::init(small_config(1, 41));
        auto samples = toy_samples(net.cfg, 6, 43);
        std::vector<TrainSample> val(samples.begin() + 4, samples.end());
        samples.resize(4);
        TrainConfig tc;
        tc.epochs = 3;
        tc.batch_size = 2;
        tc.seed = 7;
        TrainHistory h = train(net, samples, val, tc);
        return std::make_pair(net.params, h);
    };
    auto [p1, h1] = run();
    auto [p2, h2] = run();
    ASSERT_EQ(h1.epochs.size(), h2.epochs.size());
    for (std::size_t i = 0; i < h1.epochs.size(); ++i) {
        EXPECT_EQ(h1.epochs[i].train_loss, h2.epochs[i].train_loss);  // bitwise
        EXPECT_EQ(h1.epochs[i].val_loss, h2.epochs[i].val_loss);
        EXPECT_EQ(h1.epochs[i].val_iou, h2.epochs[i].val_iou);
    }
    for (std::size_t i = 0; i < p1.tensors.size(); ++i)
        EXPECT_EQ(p1.tensors[i].value.data, p2.tensors[i].value.data);
}

TEST(Train, DivergenceRestoresLastFiniteCheckpoint) {
    SegnetLite net = SegnetLite::init(small_config(0, 47));
    auto samples = toy_samples(net.cfg, 2, 49);
    // poison one input so the very first batch turns non-finite
    samples[0].image.data[0] = std::numeric_limits<float>::quiet_NaN();
    NetworkParams before = net.params;
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 2;
    TrainHistory h = train(net, samples, {}, tc);
    EXPECT_TRUE(h.diverged);
    EXPECT_TRUE(h.epochs.empty());
    for (std::size_t i = 0; i < before.tensors.size(); ++i)
        EXPECT_EQ(net.params.tensors[i].value.data, before.tensors[i].value.data);
}

TEST(Train, EmptyTrainingSetError) {
    SegnetLite net = SegnetLite::init(small_config());
    EXPECT_THROW(train(net, {}, {}, TrainConfig{}), error);
}

TEST(Segment, ThresholdSemantics) {
    SegnetLite net = SegnetLite::init(small_config());
    Image img(16, 16, 1, 0.5f);
    Mask all_on = segment(net, img, Tensor{}, 0.f);
    EXPECT_EQ(all_on.foreground_count(), all_on.size());
    Mask all_off = segment(net, img, Tensor{}, 1.0001f);
    EXPECT_EQ(all_off.foreground_count(), 0u);
    Mask m = segment(net, img, Tensor{}, 0.5f);
    for (auto v : m.v) EXPECT_TRUE(v == 0 || v == 1);
}

TEST(Checkpoint, SaveLoadRoundTrip) {
    NetworkConfig cfg = small_config(2, 51);
    SegnetLite net = SegnetLite::init(cfg);
    // train a step so the round trip covers non-initial running stats
    auto samples = toy_samples(cfg, 3, 53);
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 3;
    train(net, samples, {}, tc);

    const std::string path =
        (std::filesystem::temp_directory_path() / "pdlf_ckpt_roundtrip.pdln").string();
    save_checkpoint(net, path);
    SegnetLite loaded = load_checkpoint(path);
    EXPECT_EQ(loaded.cfg.concat_block, 2);
    ASSERT_EQ(loaded.params.tensors.size(), net.params.tensors.size());
    for (std::size_t i = 0; i < net.params.tensors.size(); ++i) {
        EXPECT_EQ(loaded.params.tensors[i].name, net.params.tensors[i].name);
        EXPECT_EQ(loaded.params.tensors[i].value.data, net.params.tensors[i].value.data);
    }
    Tensor x = random_batch(cfg, 1, 55);
    Tensor plane = random_plane(4, 4, 57);
    EXPECT_EQ(net.forward(x, {plane}, false).data, loaded.forward(x, {plane}, false).data);
    std::filesystem::remove(path);
}

TEST(Checkpoint, BadFileErrors) {
    const std::string path = (std::filesystem::temp_directory_path() / "pdlf_bad.pdln").string();
    std::ofstream out(path, std::ios::binary);
    out << "XXXX1234";
    out.close();
    EXPECT_THROW(load_checkpoint(path), error);
    std::filesystem::remove(path);
}
