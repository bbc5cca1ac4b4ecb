#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "pdlf/tensor.hpp"

namespace pdlf {

// ---------------------------------------------------------------------------
// conv2d, kernel k x k, stride 1, zero padding k/2 (same spatial size),
// batched NCHW via im2col + channel-row GEMM.
// ---------------------------------------------------------------------------

namespace detail {

// col layout: [cin*k*k rows, h*w cols] for one sample
inline void im2col(const float* x, int cin, int h, int w, int k, int pad, float* col) {
    const int hw = h * w;
    for (int ic = 0; ic < cin; ++ic) {
        const float* src = x + static_cast<std::size_t>(ic) * hw;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* dst = col + (static_cast<std::size_t>(ic) * k * k + ky * k + kx) * hw;
                const int x0 = std::max(0, pad - kx);
                const int x1 = std::min(w, w + pad - kx);
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pad;
                    float* d = dst + static_cast<std::size_t>(y) * w;
                    if (sy < 0 || sy >= h) {
                        std::memset(d, 0, static_cast<std::size_t>(w) * sizeof(float));
                        continue;
                    }
                    const float* s = src + static_cast<std::size_t>(sy) * w + (kx - pad);
                    if (x0 > 0) std::memset(d, 0, static_cast<std::size_t>(x0) * sizeof(float));
                    if (x1 > x0)
                        std::memcpy(d + x0, s + x0, static_cast<std::size_t>(x1 - x0) * sizeof(float));
                    if (x1 < w)
                        std::memset(d + x1, 0, static_cast<std::size_t>(w - x1) * sizeof(float));
                }
            }
        }
    }
}

// dx += col2im(dcol)
inline void col2im_add(const float* dcol, int cin, int h, int w, int k, int pad, float* dx) {
    const int hw = h * w;
    for (int ic = 0; ic < cin; ++ic) {
        float* dst = dx + static_cast<std::size_t>(ic) * hw;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* src = dcol + (static_cast<std::size_t>(ic) * k * k + ky * k + kx) * hw;
                const int x0 = std::max(0, pad - kx);
                const int x1 = std::min(w, w + pad - kx);
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    const float* s = src + static_cast<std::size_t>(y) * w;
                    float* d = dst + static_cast<std::size_t>(sy) * w + (kx - pad);
                    for (int xp = x0; xp < x1; ++xp) d[xp] += s[xp];
                }
            }
        }
    }
}

}  // namespace detail

struct ConvScratch {
    std::vector<float> col;
    std::vector<float> dcol;
};

/// y = conv(x, w) + b. x: [N,Cin,H,W], w: [Cout,Cin,k,k], b: [Cout],
/// y: [N,Cout,H,W]. Spatial size is preserved (pad = k/2, odd k).
inline void conv2d_forward(const Tensor& x, const Tensor& w, const std::vector<float>& b,
                           Tensor& y, ConvScratch& scratch) {
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != cin) throw error("conv2d: input channel mismatch");
    if (w.dim(3) != k || k % 2 == 0) throw error("conv2d: odd square kernel expected");
    if (static_cast<int>(b.size()) != cout) throw error("conv2d: bias size mismatch");
    const int pad = k / 2, hw = h * wd, kk = cin * k * k;

    y = Tensor({n, cout, h, wd});
    scratch.col.resize(static_cast<std::size_t>(kk) * hw);
    for (int s = 0; s < n; ++s) {
        detail::im2col(x.data.data() + static_cast<std::size_t>(s) * cin * hw, cin, h, wd, k, pad,
                       scratch.col.data());
        float* ys = y.data.data() + static_cast<std::size_t>(s) * cout * hw;
        for (int oc = 0; oc < cout; ++oc) {
            float* yr = ys + static_cast<std::size_t>(oc) * hw;
            std::fill(yr, yr + hw, b[static_cast<std::size_t>(oc)]);
            const float* wr = w.data.data() + static_cast<std::size_t>(oc) * kk;
            for (int q = 0; q < kk; ++q) {
                const float wv = wr[q];
                if (wv == 0.f) continue;
                const float* cr = scratch.col.data() + static_cast<std::size_t>(q) * hw;
                for (int p = 0; p < hw; ++p) yr[p] += wv * cr[p];
            }
        }
    }
}

/// Gradients w.r.t. input, weights and bias. dw/db are accumulated from zero.
inline void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx,
                            Tensor& dw, std::vector<float>& db, ConvScratch& scratch) {
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(0), k = w.dim(2);
    const int pad = k / 2, hw = h * wd, kk = cin * k * k;

    dx = Tensor({n, cin, h, wd});
    dw = Tensor(w.shape);
    db.assign(static_cast<std::size_t>(cout), 0.f);
    scratch.col.resize(static_cast<std::size_t>(kk) * hw);
    scratch.dcol.resize(static_cast<std::size_t>(kk) * hw);

    for (int s = 0; s < n; ++s) {
        detail::im2col(x.data.data() + static_cast<std::size_t>(s) * cin * hw, cin, h, wd, k, pad,
                       scratch.col.data());
        const float* dys = dy.data.data() + static_cast<std::size_t>(s) * cout * hw;

        // db, dw
        for (int oc = 0; oc < cout; ++oc) {
            const float* dyr = dys + static_cast<std::size_t>(oc) * hw;
            float acc = 0.f;
            for (int p = 0; p < hw; ++p) acc += dyr[p];
            db[static_cast<std::size_t>(oc)] += acc;
            float* dwr = dw.data.data() + static_cast<std::size_t>(oc) * kk;
            for (int q = 0; q < kk; ++q) {
                const float* cr = scratch.col.data() + static_cast<std::size_t>(q) * hw;
                float dot = 0.f;
                for (int p = 0; p < hw; ++p) dot += dyr[p] * cr[p];
                dwr[q] += dot;
            }
        }

        // dcol = w^T . dy, then scatter back to dx
        std::fill(scratch.dcol.begin(), scratch.dcol.end(), 0.f);
        for (int oc = 0; oc < cout; ++oc) {
            const float* dyr = dys + static_cast<std::size_t>(oc) * hw;
            const float* wr = w.data.data() + static_cast<std::size_t>(oc) * kk;
            for (int q = 0; q < kk; ++q) {
                const float wv = wr[q];
                if (wv == 0.f) continue;
                float* dcr = scratch.dcol.data() + static_cast<std::size_t>(q) * hw;
                for (int p = 0; p < hw; ++p) dcr[p] += wv * dyr[p];
            }
        }
        detail::col2im_add(scratch.dcol.data(), cin, h, wd, k, pad,
                           dx.data.data() + static_cast<std::size_t>(s) * cin * hw);
    }
}

// ---------------------------------------------------------------------------
// batch normalization over (N,H,W) per channel
// ---------------------------------------------------------------------------

struct BNCache {
    std::vector<float> mean;
    std::vector<float> inv_std;
};

constexpr float kBnEps = 1e-5f;
constexpr float kBnMomentum = 0.1f;

/// Train mode: normalize with batch statistics and fold them into the running
/// stats (running = (1-momentum)*running + momentum*batch). Infer mode uses
/// the running stats and leaves them untouched.
inline void batchnorm_forward(const Tensor& x, const std::vector<float>& gamma,
                              const std::vector<float>& beta, std::vector<float>& running_mean,
                              std::vector<float>& running_var, bool train, Tensor& y,
                              BNCache* cache) {
    const int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    const std::size_t chw = static_cast<std::size_t>(c) * hw;
    const double m = static_cast<double>(n) * hw;
    y = Tensor(x.shape);

    for (int ch = 0; ch < c; ++ch) {
        float mean, inv_std;
        if (train) {
            double sum = 0.0, sum2 = 0.0;
            for (int s = 0; s < n; ++s) {
                const float* xr = x.data.data() + s * chw + static_cast<std::size_t>(ch) * hw;
                for (int p = 0; p < hw; ++p) {
                    sum += xr[p];
                    sum2 += static_cast<double>(xr[p]) * xr[p];
                }
            }
            const double mu = sum / m;
            const double var = std::max(0.0, sum2 / m - mu * mu);
            mean = static_cast<float>(mu);
            inv_std = static_cast<float>(1.0 / std::sqrt(var + kBnEps));
            running_mean[static_cast<std::size_t>(ch)] =
                (1.f - kBnMomentum) * running_mean[static_cast<std::size_t>(ch)] + kBnMomentum * mean;
            running_var[static_cast<std::size_t>(ch)] =
                (1.f - kBnMomentum) * running_var[static_cast<std::size_t>(ch)] +
                kBnMomentum * static_cast<float>(var);
        } else {
            mean = running_mean[static_cast<std::size_t>(ch)];
            inv_std = 1.f / std::sqrt(running_var[static_cast<std::size_t>(ch)] + kBnEps);
        }
        const float g = gamma[static_cast<std::size_t>(ch)], bt = beta[static_cast<std::size_t>(ch)];
        for (int s = 0; s < n; ++s) {
            const float* xr = x.data.data() + s * chw + static_cast<std::size_t>(ch) * hw;
            float* yr = y.data.data() + s * chw + static_cast<std::size_t>(ch) * hw;
            for (int p = 0; p < hw; ++p) yr[p] = g * (xr[p] - mean) * inv_std + bt;
        }
        if (cache) {
            cache->mean.resize(static_cast<std::size_t>(c));
            cache->inv_std.resize(static_cast<std::size_t>(c));
            cache->mean[static_cast<std::size_t>(ch)] = mean;
            cache->inv_std[static_cast<std::size_t>(ch)] = inv_std;
        }
    }
}

/// Backward through train-mode normalization (batch statistics are part of
/// the graph). dgamma/dbeta accumulated from zero.
inline void batchnorm_backward(const Tensor& x, const std::vector<float>& gamma,
                               const BNCache& cache, const Tensor& dy, Tensor& dx,
                               std::vector<float>& dgamma, std::vector<float>& dbeta) {
    const int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    const std::size_t chw = static_cast<std::size_t>(c) * hw;
    const double m = static_cast<double>(n) * hw;
    dx = Tensor(x.shape);
    dgamma.assign(static_cast<std::size_t>(c), 0.f);
    dbeta.assign(static_cast<std::size_t>(c), 0.f);

    for (int ch = 0; ch < c; ++ch) {
        const float mean = cache.mean[static_cast<std::size_t>(ch)];
        const float inv_std = cache.inv_std[static_cast<std::size_t>(ch)];
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int s = 0; s < n; ++s) {
            const float* xr = x.data.data() + s * chw + static_cast<std::size_t>(ch) * hw;
            const float* dyr = dy.data.data() + s * chw + static_cast<std::size_t>(ch) * hw;
            for (int p = 0; p < hw; ++p) {
                sum_dy += dyr[p];
                sum_dy_xhat += static_cast<double>(dyr[p]) * (xr[p] - mean) * inv_std;
            }
        }
        dgamma[static_cast<std::size_t>(ch)] = static_cast<float>(sum_dy_xhat);
        dbeta[static_cast<std::size_t>(ch)] = static_cast<float>(sum_dy);

        const double g = gamma[static_cast<std::size_t>(ch)];
        const double scale = g * inv_std / m;
        for (int s = 0; s < n; ++s) {
            const float* xr = x.data.data() + s * chw + static_cast<std::size_t>(ch) * hw;
            const float* dyr = dy.data.data() + s * chw + static_cast<std::size_t>(ch) * hw;
            float* dxr = dx.data.data() + s * chw + static_cast<std::size_t>(ch) * hw;
            for (int p = 0; p < hw; ++p) {
                const double xhat = (xr[p] - mean) * inv_std;
                dxr[p] = static_cast<float>(scale * (m * dyr[p] - sum_dy - xhat * sum_dy_xhat));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// relu, max pool / index unpool, sigmoid
// ---------------------------------------------------------------------------

inline void relu_forward(const Tensor& x, Tensor& y) {
    y = Tensor(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > 0.f ? x.data[i] : 0.f;
}

/// Subgradient at 0 is 0: the mask is strictly (x > 0).
inline void relu_backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
    dx = Tensor(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) dx.data[i] = x.data[i] > 0.f ? dy.data[i] : 0.f;
}

/// Stored pool routing: one entry per pooled position, the row-major index
/// (0..3) of the argmax inside its own 2x2 window. Ties break to the first
/// occurrence.
using PoolIndices = std::vector<std::uint8_t>;

inline void maxpool2x2_forward(const Tensor& x, Tensor& y, PoolIndices& idx) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h % 2 != 0 || w % 2 != 0) throw error("maxpool2x2: odd spatial dimensions");
    const int oh = h / 2, ow = w / 2;
    y = Tensor({n, c, oh, ow});
    idx.assign(y.size(), 0);
    for (int sc = 0; sc < n * c; ++sc) {
        const float* xp = x.data.data() + static_cast<std::size_t>(sc) * h * w;
        float* yp = y.data.data() + static_cast<std::size_t>(sc) * oh * ow;
        std::uint8_t* ip = idx.data() + static_cast<std::size_t>(sc) * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                const float* win = xp + static_cast<std::size_t>(2 * oy) * w + 2 * ox;
                float best = win[0];
                std::uint8_t bi = 0;
                if (win[1] > best) { best = win[1]; bi = 1; }
                if (win[w] > best) { best = win[w]; bi = 2; }
                if (win[w + 1] > best) { best = win[w + 1]; bi = 3; }
                yp[oy * ow + ox] = best;
                ip[oy * ow + ox] = bi;
            }
    }
}

/// Place each value at its stored window index; all other cells zero.
inline void unpool2x2(const Tensor& y, const PoolIndices& idx, Tensor& x) {
    const int n = y.dim(0), c = y.dim(1), oh = y.dim(2), ow = y.dim(3);
    if (idx.size() != y.size()) throw error("unpool2x2: index size mismatch");
    const int h = oh * 2, w = ow * 2;
    x = Tensor({n, c, h, w});
    for (int sc = 0; sc < n * c; ++sc) {
        const float* yp = y.data.data() + static_cast<std::size_t>(sc) * oh * ow;
        const std::uint8_t* ip = idx.data() + static_cast<std::size_t>(sc) * oh * ow;
        float* xp = x.data.data() + static_cast<std::size_t>(sc) * h * w;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                const std::uint8_t bi = ip[oy * ow + ox];
                const int dy = bi >> 1, dx = bi & 1;
                xp[static_cast<std::size_t>(2 * oy + dy) * w + (2 * ox + dx)] = yp[oy * ow + ox];
            }
    }
}

/// Gradient routing of maxpool is exactly index unpooling of dy.
inline void maxpool2x2_backward(const Tensor& dy, const PoolIndices& idx, Tensor& dx) {
    unpool2x2(dy, idx, dx);
}

/// Gradient of unpool gathers back from the scattered positions.
inline void unpool2x2_backward(const Tensor& dxp, const PoolIndices& idx, Tensor& dy) {
    const int n = dxp.dim(0), c = dxp.dim(1), h = dxp.dim(2), w = dxp.dim(3);
    const int oh = h / 2, ow = w / 2;
    dy = Tensor({n, c, oh, ow});
    for (int sc = 0; sc < n * c; ++sc) {
        const float* xp = dxp.data.data() + static_cast<std::size_t>(sc) * h * w;
        const std::uint8_t* ip = idx.data() + static_cast<std::size_t>(sc) * oh * ow;
        float* yp = dy.data.data() + static_cast<std::size_t>(sc) * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                const std::uint8_t bi = ip[oy * ow + ox];
                const int ddy = bi >> 1, ddx = bi & 1;
                yp[oy * ow + ox] = xp[static_cast<std::size_t>(2 * oy + ddy) * w + (2 * ox + ddx)];
            }
    }
}

inline void sigmoid_forward(const Tensor& x, Tensor& y) {
    y = Tensor(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float v = x.data[i];
        y.data[i] = v >= 0.f ? 1.f / (1.f + std::exp(-v))
                             : std::exp(v) / (1.f + std::exp(v));
    }
}

inline void sigmoid_backward(const Tensor& y, const Tensor& dy, Tensor& dx) {
    dx = Tensor(y.shape);
    for (std::size_t i = 0; i < y.size(); ++i) dx.data[i] = dy.data[i] * y.data[i] * (1.f - y.data[i]);
}

// ---------------------------------------------------------------------------
// binary cross entropy
// ---------------------------------------------------------------------------

constexpr double kBceClip = 1e-7;

/// Mean over elements of -[y log p + (1-y) log(1-p)], probabilities clipped
/// to [1e-7, 1-1e-7] (the gradient is zero inside the clipped range).
/// target values must be 0 or 1.
inline double bce_loss(const Tensor& prob, const Tensor& target, Tensor* dprob = nullptr) {
    if (!prob.same_shape(target)) throw error("bce_loss: shape mismatch");
    const double inv_n = 1.0 / static_cast<double>(prob.size());
    if (dprob) *dprob = Tensor(prob.shape);
    double loss = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double p = prob.data[i];
        const double y = target.data[i];
        const double pc = std::clamp(p, kBceClip, 1.0 - kBceClip);
        loss -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
        if (dprob) {
            const bool clipped = p < kBceClip || p > 1.0 - kBceClip;
            dprob->data[i] =
                clipped ? 0.f : static_cast<float>((-y / pc + (1.0 - y) / (1.0 - pc)) * inv_n);
        }
    }
    return loss * inv_n;
}

}  // namespace pdlf
