#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdlf/layers.hpp"
#include "pdlf/metrics.hpp"
#include "pdlf/rng.hpp"
#include "pdlf/tensor.hpp"

namespace pdlf {

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

struct NetworkConfig {
    int input_h = 96;
    int input_w = 128;
    int in_channels = 1;
    int blocks = 3;              // encoder depth, 2..5
    std::vector<int> channels;   // per-block widths; empty selects 8,16,32,...
    int kernel = 5;              // fixed by the architecture
    int concat_block = 0;        // 0 = no joint-feature concatenation, else 1..blocks
    std::uint64_t seed = 0;

    int channel_at(int i) const {
        return channels.empty() ? (8 << i) : channels.at(static_cast<std::size_t>(i));
    }

    void validate() const {
        if (blocks < 2 || blocks > 5) throw error("net: blocks must be in [2,5]");
        if (kernel != 5) throw error("net: kernel is fixed at 5");
        if (in_channels != 1 && in_channels != 3) throw error("net: in_channels must be 1 or 3");
        if (concat_block < 0 || concat_block > blocks)
            throw error("net: concat_block must be 0 or in [1,blocks]");
        const int div = 1 << blocks;
        if (input_h <= 0 || input_w <= 0 || input_h % div != 0 || input_w % div != 0)
            throw error("net: input dims must be positive and divisible by 2^blocks");
        if (!channels.empty() && static_cast<int>(channels.size()) < blocks)
            throw error("net: channels list shorter than blocks");
        for (int i = 0; i < blocks; ++i)
            if (channel_at(i) < 1) throw error("net: channel widths must be >= 1");
    }
};

struct TrainConfig {
    float lr = 0.01f;
    float momentum = 0.9f;
    int epochs = 20;
    int batch_size = 4;
    std::uint64_t seed = 0;

    void validate() const {
        if (lr < 0.f) throw error("train: lr must be >= 0");
        if (momentum < 0.f || momentum >= 1.f) throw error("train: momentum must be in [0,1)");
        if (epochs < 0 || batch_size < 1) throw error("train: bad epochs/batch_size");
    }
};

// ---------------------------------------------------------------------------
// parameters
// ---------------------------------------------------------------------------

struct ParamTensor {
    std::string name;
    Tensor value;
    bool learnable = true;
};

struct NetworkParams {
    std::vector<ParamTensor> tensors;

    Tensor& get(const std::string& name) {
        for (auto& t : tensors)
            if (t.name == name) return t.value;
        throw error("params: unknown tensor " + name);
    }
    const Tensor& get(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return t.value;
        throw error("params: unknown tensor " + name);
    }

    bool all_finite() const {
        for (const auto& t : tensors)
            if (!t.value.all_finite()) return false;
        return true;
    }
};

/// Append the joint-feature plane (bilinearly resized to the block's spatial
/// size) as one extra channel of a single sample. An unset plane (rank != 2)
/// contributes a zero channel.
inline Tensor concat_joint(const Tensor& block_input, const Tensor& plane) {
    if (block_input.rank() != 3) throw error("concat_joint: C,H,W input expected");
    const int c = block_input.dim(0), h = block_input.dim(1), w = block_input.dim(2);
    Tensor out({c + 1, h, w});
    std::copy(block_input.data.begin(), block_input.data.end(), out.data.begin());
    if (plane.rank() == 2) {
        Tensor resized = resize_bilinear(plane, h, w);
        std::copy(resized.data.begin(), resized.data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(c) * h * w);
    }
    return out;
}

// ---------------------------------------------------------------------------
// the network
// ---------------------------------------------------------------------------

struct BlockCache {
    Tensor conv_in;   // encoder: post-concat conv input; decoder: unpool output
    Tensor conv_out;  // pre-batchnorm
    BNCache bn;
    Tensor bn_out;    // pre-relu
    PoolIndices pool_idx;  // encoder only
};

struct ForwardCache {
    std::vector<BlockCache> enc;
    std::vector<BlockCache> dec;
    Tensor head_in;
    Tensor logits;
    Tensor probs;
};

class SegnetLite {
public:
    NetworkConfig cfg;
    NetworkParams params;

    static SegnetLite init(const NetworkConfig& config) {
        config.validate();
        SegnetLite net;
        net.cfg = config;
        Rng rng(config.seed);

        auto add_conv = [&](const std::string& prefix, int cin, int cout) {
            const int k = config.kernel;
            Tensor w({cout, cin, k, k});
            const float std_dev = std::sqrt(2.f / static_cast<float>(cin * k * k));
            for (float& v : w.data) v = static_cast<float>(rng.normal()) * std_dev;
            net.params.tensors.push_back({prefix + ".w", std::move(w), true});
            net.params.tensors.push_back({prefix + ".b", Tensor({cout}, 0.f), true});
        };
        auto add_bn = [&](const std::string& prefix, int c) {
            net.params.tensors.push_back({prefix + ".gamma", Tensor({c}, 1.f), true});
            net.params.tensors.push_back({prefix + ".beta", Tensor({c}, 0.f), true});
            net.params.tensors.push_back({prefix + ".running_mean", Tensor({c}, 0.f), false});
            net.params.tensors.push_back({prefix + ".running_var", Tensor({c}, 1.f), false});
        };

        for (int i = 1; i <= config.blocks; ++i) {
            const int cin = net.enc_in_channels(i);
            const int cout = config.channel_at(i - 1);
            add_conv("enc" + std::to_string(i) + ".conv", cin, cout);
            add_bn("enc" + std::to_string(i) + ".bn", cout);
        }
        for (int i = config.blocks; i >= 1; --i) {
            const int cin = config.channel_at(i - 1);
            const int cout = net.dec_out_channels(i);
            add_conv("dec" + std::to_string(i) + ".conv", cin, cout);
            add_bn("dec" + std::to_string(i) + ".bn", cout);
        }
        add_conv("head", config.channel_at(0), 1);
        return net;
    }

    int enc_in_channels(int block) const {  // 1-based
        int c = block == 1 ? cfg.in_channels : cfg.channel_at(block - 2);
        if (cfg.concat_block == block) ++c;
        return c;
    }
    int dec_out_channels(int block) const {  // 1-based
        return block > 1 ? cfg.channel_at(block - 2) : cfg.channel_at(0);
    }

    /// Batched forward. x: [N, in_channels, H, W]; planes: one joint plane
    /// per sample, consumed only when concat_block > 0. Train mode runs
    /// batch-statistics batchnorm and updates the running stats.
    Tensor forward(const Tensor& x, const std::vector<Tensor>& planes, bool train,
                   ForwardCache* cache = nullptr) {
        if (x.rank() != 4 || x.dim(1) != cfg.in_channels || x.dim(2) != cfg.input_h ||
            x.dim(3) != cfg.input_w)
            throw error("net: input tensor does not match config dims");
        const int n = x.dim(0);
        if (cfg.concat_block > 0 && static_cast<int>(planes.size()) != n)
            throw error("net: one joint plane per sample required");

        ForwardCache local;
        ForwardCache& fc = cache ? *cache : local;
        fc.enc.assign(static_cast<std::size_t>(cfg.blocks), {});
        fc.dec.assign(static_cast<std::size_t>(cfg.blocks), {});

        ConvScratch scratch;
        Tensor cur = x;
        for (int i = 1; i <= cfg.blocks; ++i) {
            BlockCache& bc = fc.enc[static_cast<std::size_t>(i - 1)];
            if (cfg.concat_block == i)
                cur = append_plane_channel(cur, planes);
            bc.conv_in = std::move(cur);
            conv2d_forward(bc.conv_in, p(enc_name(i) + ".conv.w"), p(enc_name(i) + ".conv.b").data,
                           bc.conv_out, scratch);
            batchnorm_forward(bc.conv_out, p(enc_name(i) + ".bn.gamma").data,
                              p(enc_name(i) + ".bn.beta").data,
                              p(enc_name(i) + ".bn.running_mean").data,
                              p(enc_name(i) + ".bn.running_var").data, train, bc.bn_out, &bc.bn);
            Tensor activated;
            relu_forward(bc.bn_out, activated);
            maxpool2x2_forward(activated, cur, bc.pool_idx);
        }
        for (int i = cfg.blocks; i >= 1; --i) {
            BlockCache& bc = fc.dec[static_cast<std::size_t>(i - 1)];
            unpool2x2(cur, fc.enc[static_cast<std::size_t>(i - 1)].pool_idx, bc.conv_in);
            conv2d_forward(bc.conv_in, p(dec_name(i) + ".conv.w"), p(dec_name(i) + ".conv.b").data,
                           bc.conv_out, scratch);
            batchnorm_forward(bc.conv_out, p(dec_name(i) + ".bn.gamma").data,
                              p(dec_name(i) + ".bn.beta").data,
                              p(dec_name(i) + ".bn.running_mean").data,
                              p(dec_name(i) + ".bn.running_var").data, train, bc.bn_out, &bc.bn);
            relu_forward(bc.bn_out, cur);
        }
        fc.head_in = std::move(cur);
        conv2d_forward(fc.head_in, p("head.w"), p("head.b").data, fc.logits, scratch);
        sigmoid_forward(fc.logits, fc.probs);
        return fc.probs;
    }

    /// Gradients for every learnable tensor, aligned with params.tensors
    /// (zero tensors in the slots of running statistics).
    std::vector<Tensor> backward(const ForwardCache& fc, const Tensor& dprob) {
        std::vector<Tensor> grads(params.tensors.size());
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] = Tensor(params.tensors[i].value.shape);

        ConvScratch scratch;
        Tensor d;
        sigmoid_backward(fc.probs, dprob, d);
        {
            Tensor dx;
            conv_back(fc.head_in, "head", d, dx, grads, scratch);
            d = std::move(dx);
        }
        for (int i = 1; i <= cfg.blocks; ++i) {
            const BlockCache& bc = fc.dec[static_cast<std::size_t>(i - 1)];
            Tensor d2, d3, d4;
            relu_backward(bc.bn_out, d, d2);
            bn_back(bc.conv_out, dec_name(i) + ".bn", bc.bn, d2, d3, grads);
            conv_back(bc.conv_in, dec_name(i) + ".conv", d3, d4, grads, scratch);
            unpool2x2_backward(d4, fc.enc[static_cast<std::size_t>(i - 1)].pool_idx, d);
        }
        for (int i = cfg.blocks; i >= 1; --i) {
            const BlockCache& bc = fc.enc[static_cast<std::size_t>(i - 1)];
            Tensor d2, d3, d4, d5;
            maxpool2x2_backward(d, bc.pool_idx, d2);
            relu_backward(bc.bn_out, d2, d3);
            bn_back(bc.conv_out, enc_name(i) + ".bn", bc.bn, d3, d4, grads);
            conv_back(bc.conv_in, enc_name(i) + ".conv", d4, d5, grads, scratch);
            if (cfg.concat_block == i)
                d = drop_last_channel(d5);
            else
                d = std::move(d5);
        }
        return grads;
    }

private:
    static std::string enc_name(int i) { return "enc" + std::to_string(i); }
    static std::string dec_name(int i) { return "dec" + std::to_string(i); }
    Tensor& p(const std::string& name) { return params.get(name); }

    Tensor append_plane_channel(const Tensor& x, const std::vector<Tensor>& planes) const {
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        Tensor out({n, c + 1, h, w});
        const std::size_t hw = static_cast<std::size_t>(h) * w;
        for (int s = 0; s < n; ++s) {
            const float* src = x.data.data() + static_cast<std::size_t>(s) * c * hw;
            float* dst = out.data.data() + static_cast<std::size_t>(s) * (c + 1) * hw;
            std::copy(src, src + static_cast<std::size_t>(c) * hw, dst);
            const Tensor& plane = planes[static_cast<std::size_t>(s)];
            if (plane.rank() == 2) {
                Tensor resized = resize_bilinear(plane, h, w);
                std::copy(resized.data.begin(), resized.data.end(), dst + static_cast<std::size_t>(c) * hw);
            } else {
                std::fill(dst + static_cast<std::size_t>(c) * hw, dst + static_cast<std::size_t>(c + 1) * hw, 0.f);
            }
        }
        return out;
    }

    static Tensor drop_last_channel(const Tensor& x) {
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        Tensor out({n, c - 1, h, w});
        const std::size_t hw = static_cast<std::size_t>(h) * w;
        for (int s = 0; s < n; ++s)
            std::copy(x.data.begin() + (static_cast<std::size_t>(s) * c) * hw,
                      x.data.begin() + (static_cast<std::size_t>(s) * c + (c - 1)) * hw,
                      out.data.begin() + static_cast<std::size_t>(s) * (c - 1) * hw);
        return out;
    }

    void conv_back(const Tensor& x, const std::string& prefix, const Tensor& dy, Tensor& dx,
                   std::vector<Tensor>& grads, ConvScratch& scratch) {
        Tensor dw;
        std::vector<float> db;
        conv2d_backward(x, params.get(prefix + ".w"), dy, dx, dw, db, scratch);
        grad_of(prefix + ".w", grads) = std::move(dw);
        grad_of(prefix + ".b", grads).data = std::move(db);
    }
    void bn_back(const Tensor& x, const std::string& prefix, const BNCache& cache, const Tensor& dy,
                 Tensor& dx, std::vector<Tensor>& grads) {
        std::vector<float> dgamma, dbeta;
        batchnorm_backward(x, params.get(prefix + ".gamma").data, cache, dy, dx, dgamma, dbeta);
        grad_of(prefix + ".gamma", grads).data = std::move(dgamma);
        grad_of(prefix + ".beta", grads).data = std::move(dbeta);
    }
    Tensor& grad_of(const std::string& name, std::vector<Tensor>& grads) {
        for (std::size_t i = 0; i < params.tensors.size(); ++i)
            if (params.tensors[i].name == name) return grads[i];
        throw error("grads: unknown tensor " + name);
    }
};

// ---------------------------------------------------------------------------
// inference helpers
// ---------------------------------------------------------------------------

inline Tensor forward_probabilities(SegnetLite& net, const Image& img, const Tensor& plane) {
    Tensor x({1, net.cfg.in_channels, net.cfg.input_h, net.cfg.input_w});
    if (img.height != net.cfg.input_h || img.width != net.cfg.input_w ||
        img.channels != net.cfg.in_channels)
        throw error("net: image does not match config dims");
    Tensor chw = image_to_tensor(img);
    x.data = chw.data;
    Tensor probs = net.forward(x, {plane}, /*train=*/false);
    Tensor out({net.cfg.input_h, net.cfg.input_w});
    out.data = probs.data;
    return out;
}

inline Mask segment(SegnetLite& net, const Image& img, const Tensor& plane,
                    float threshold = 0.5f) {
    Tensor prob = forward_probabilities(net, img, plane);
    Mask m(net.cfg.input_h, net.cfg.input_w);
    for (std::size_t i = 0; i < prob.size(); ++i) m.v[i] = prob.data[i] >= threshold ? 1 : 0;
    return m;
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct TrainSample {
    Tensor image;  // [C,H,W]
    Tensor plane;  // rank-2 joint plane; rank-0 means absent (zero plane)
    Mask gt;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_iou = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    bool diverged = false;
};

namespace detail {

inline double evaluate_split(SegnetLite& net, const std::vector<TrainSample>& samples,
                             double& mean_iou) {
    double loss_sum = 0.0, iou_sum = 0.0;
    for (const TrainSample& s : samples) {
        Tensor x({1, net.cfg.in_channels, net.cfg.input_h, net.cfg.input_w});
        x.data = s.image.data;
        Tensor probs = net.forward(x, {s.plane}, /*train=*/false);
        Tensor target({1, 1, net.cfg.input_h, net.cfg.input_w});
        for (std::size_t i = 0; i < s.gt.v.size(); ++i) target.data[i] = s.gt.v[i];
        loss_sum += bce_loss(probs, target);
        Mask pred(net.cfg.input_h, net.cfg.input_w);
        for (std::size_t i = 0; i < pred.v.size(); ++i) pred.v[i] = probs.data[i] >= 0.5f ? 1 : 0;
        iou_sum += compute_metrics(confusion(pred, s.gt)).iou;
    }
    mean_iou = samples.empty() ? 0.0 : iou_sum / static_cast<double>(samples.size());
    return samples.empty() ? 0.0 : loss_sum / static_cast<double>(samples.size());
}

}  // namespace detail

/// SGD with momentum (v <- m v - lr g; theta <- theta + v) over shuffled
/// mini-batches. Deterministic for a fixed seed: shuffle order, batch
/// assembly and reductions are all fixed-order. If the loss turns non-finite
/// the last finite epoch checkpoint is restored and training stops.
inline TrainHistory train(SegnetLite& net, const std::vector<TrainSample>& train_set,
                          const std::vector<TrainSample>& val_set, const TrainConfig& tc) {
    tc.validate();
    if (train_set.empty()) throw error("train: empty training set");
    for (const TrainSample& s : train_set)
        if (s.image.rank() != 3 || s.image.dim(1) != net.cfg.input_h ||
            s.image.dim(2) != net.cfg.input_w || s.image.dim(0) != net.cfg.in_channels)
            throw error("train: sample does not match network dims");

    Rng rng(tc.seed);
    std::vector<Tensor> velocity(net.params.tensors.size());
    for (std::size_t i = 0; i < velocity.size(); ++i)
        velocity[i] = Tensor(net.params.tensors[i].value.shape);

    TrainHistory history;
    NetworkParams snapshot = net.params;

    std::vector<int> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    const int n_all = static_cast<int>(train_set.size());
    const std::size_t img_len = train_set.front().image.size();
    const std::size_t px_len = train_set.front().gt.v.size();

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        bool finite = true;

        for (int start = 0; start < n_all && finite; start += tc.batch_size) {
            const int bn = std::min(tc.batch_size, n_all - start);
            Tensor x({bn, net.cfg.in_channels, net.cfg.input_h, net.cfg.input_w});
            Tensor target({bn, 1, net.cfg.input_h, net.cfg.input_w});
            std::vector<Tensor> planes(static_cast<std::size_t>(bn));
            for (int b = 0; b < bn; ++b) {
                const TrainSample& s = train_set[static_cast<std::size_t>(order[static_cast<std::size_t>(start + b)])];
                std::copy(s.image.data.begin(), s.image.data.end(),
                          x.data.begin() + static_cast<std::ptrdiff_t>(b) * static_cast<std::ptrdiff_t>(img_len));
                for (std::size_t i = 0; i < px_len; ++i)
                    target.data[static_cast<std::size_t>(b) * px_len + i] = s.gt.v[i];
                planes[static_cast<std::size_t>(b)] = s.plane;
            }

            ForwardCache cache;
            net.forward(x, planes, /*train=*/true, &cache);
            Tensor dprob;
            const double loss = bce_loss(cache.probs, target, &dprob);
            if (!std::isfinite(loss)) {
                finite = false;
                break;
            }
            loss_sum += loss * bn;

            std::vector<Tensor> grads = net.backward(cache, dprob);
            for (std::size_t i = 0; i < net.params.tensors.size(); ++i) {
                if (!net.params.tensors[i].learnable) continue;
                Tensor& v = velocity[i];
                Tensor& theta = net.params.tensors[i].value;
                const Tensor& g = grads[i];
                for (std::size_t j = 0; j < v.size(); ++j) {
                    v.data[j] = tc.momentum * v.data[j] - tc.lr * g.data[j];
                    theta.data[j] += v.data[j];
                }
            }
        }

        if (!finite || !net.params.all_finite()) {
            net.params = snapshot;
            history.diverged = true;
            break;
        }

        EpochStats st;
        st.epoch = epoch;
        st.train_loss = loss_sum / n_all;
        st.val_loss = detail::evaluate_split(net, val_set, st.val_iou);
        history.epochs.push_back(st);
        snapshot = net.params;
    }
    return history;
}

inline void write_history_csv(const TrainHistory& h, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw error("history: cannot open " + path);
    out << "epoch,train_loss,val_loss,val_iou\n";
    char line[160];
    for (const EpochStats& e : h.epochs) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_loss,
                      e.val_iou);
        out << line;
    }
}

// ---------------------------------------------------------------------------
// checkpoint: magic "PDLN", u32 version, u32 header length, JSON header
// (config + tensor manifest), then the raw f32 buffers in manifest order.
// ---------------------------------------------------------------------------

inline void save_checkpoint(const SegnetLite& net, const std::string& path) {
    nlohmann::json header;
    header["config"] = {{"input_h", net.cfg.input_h},   {"input_w", net.cfg.input_w},
                        {"in_channels", net.cfg.in_channels}, {"blocks", net.cfg.blocks},
                        {"channels", net.cfg.channels}, {"kernel", net.cfg.kernel},
                        {"concat_block", net.cfg.concat_block}, {"seed", net.cfg.seed}};
    nlohmann::json manifest = nlohmann::json::array();
    for (const ParamTensor& t : net.params.tensors)
        manifest.push_back({{"name", t.name}, {"shape", t.value.shape}, {"learnable", t.learnable}});
    header["tensors"] = manifest;
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error("checkpoint: cannot open " + path);
    out.write("PDLN", 4);
    const std::uint32_t version = 1;
    const std::uint32_t hlen = static_cast<std::uint32_t>(header_str.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&hlen), 4);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const ParamTensor& t : net.params.tensors)
        out.write(reinterpret_cast<const char*>(t.value.data.data()),
                  static_cast<std::streamsize>(t.value.size() * sizeof(float)));
    if (!out) throw error("checkpoint: write failed: " + path);
}

inline SegnetLite load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PDLN", 4) != 0) throw error("checkpoint: bad magic");
    std::uint32_t version = 0, hlen = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&hlen), 4);
    if (!in || version != 1) throw error("checkpoint: unsupported version");
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), hlen);
    if (!in) throw error("checkpoint: truncated header");
    nlohmann::json header = nlohmann::json::parse(header_str);

    NetworkConfig cfg;
    const auto& jc = header.at("config");
    cfg.input_h = jc.at("input_h").get<int>();
    cfg.input_w = jc.at("input_w").get<int>();
    cfg.in_channels = jc.at("in_channels").get<int>();
    cfg.blocks = jc.at("blocks").get<int>();
    cfg.channels = jc.at("channels").get<std::vector<int>>();
    cfg.kernel = jc.at("kernel").get<int>();
    cfg.concat_block = jc.at("concat_block").get<int>();
    cfg.seed = jc.at("seed").get<std::uint64_t>();

    SegnetLite net = SegnetLite::init(cfg);
    const auto& manifest = header.at("tensors");
    if (manifest.size() != net.params.tensors.size())
        throw error("checkpoint: tensor manifest does not match architecture");
    for (std::size_t i = 0; i < net.params.tensors.size(); ++i) {
        ParamTensor& t = net.params.tensors[i];
        const auto& m = manifest[i];
        if (m.at("name").get<std::string>() != t.name ||
            m.at("shape").get<std::vector<int>>() != t.value.shape)
            throw error("checkpoint: manifest mismatch for " + t.name);
        in.read(reinterpret_cast<char*>(t.value.data.data()),
                static_cast<std::streamsize>(t.value.size() * sizeof(float)));
        if (!in) throw error("checkpoint: truncated tensor data for " + t.name);
    }
    return net;
}

}  // namespace pdlf
