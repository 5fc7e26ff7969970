#pragma once

#include <cmath>

#include "vosmem/core.hpp"

namespace vosmem {

// ----------------------------------------------------------------------------
// Dense kernels. Pure functions over immutable inputs; safe to call
// concurrently. Zero padding is the only padding mode.
// ----------------------------------------------------------------------------

// input:  H x W x Cin, channels-last
// kernel: kh x kw x Cin x Cout
// bias:   Cout
inline Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                     int stride, int padding) {
    require(input.rank() == 3, "conv2d: input must be H x W x C");
    require(kernel.rank() == 4, "conv2d: kernel must be kh x kw x Cin x Cout");
    require(bias.rank() == 1, "conv2d: bias must be rank 1");
    require(stride >= 1, "conv2d: stride must be positive");
    require(padding >= 0, "conv2d: padding must be >= 0");

    const int h = input.extent(0), w = input.extent(1), cin = input.extent(2);
    const int kh = kernel.extent(0), kw = kernel.extent(1);
    const int cout = kernel.extent(3);
    require(kernel.extent(2) == cin, "conv2d: kernel Cin does not match input channels");
    require(bias.extent(0) == cout, "conv2d: bias length does not match Cout");
    require(kh <= h + 2 * padding && kw <= w + 2 * padding,
            "conv2d: kernel larger than padded input");

    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow = (w + 2 * padding - kw) / stride + 1;
    Tensor out({oh, ow, cout});

    std::vector<double> acc(static_cast<size_t>(cout));
    const float* in = input.data();
    const float* k = kernel.data();
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            for (int c = 0; c < cout; ++c) acc[static_cast<size_t>(c)] = bias.at(c);
            const int iy0 = oy * stride - padding;
            const int ix0 = ox * stride - padding;
            for (int ky = 0; ky < kh; ++ky) {
                const int iy = iy0 + ky;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < kw; ++kx) {
                    const int ix = ix0 + kx;
                    if (ix < 0 || ix >= w) continue;
                    const float* in_px = in + (static_cast<size_t>(iy) * w + ix) * cin;
                    const float* k_px = k + (static_cast<size_t>(ky) * kw + kx) * cin * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const double v = in_px[ci];
                        const float* k_row = k_px + static_cast<size_t>(ci) * cout;
                        for (int c = 0; c < cout; ++c)
                            acc[static_cast<size_t>(c)] += v * k_row[c];
                    }
                }
            }
            float* out_px = out.data() + (static_cast<size_t>(oy) * ow + ox) * cout;
            for (int c = 0; c < cout; ++c)
                out_px[c] = static_cast<float>(acc[static_cast<size_t>(c)]);
        }
    }
    return out;
}

// Exact GELU, x * Phi(x) with Phi the standard Gaussian CDF.
inline float gelu_scalar(float x) {
    const double phi = 0.5 * (1.0 + std::erf(static_cast<double>(x) / std::sqrt(2.0)));
    return static_cast<float>(x * phi);
}

inline Tensor gelu(const Tensor& x) {
    Tensor out = x;
    for (long long i = 0; i < out.numel(); ++i)
        out[static_cast<size_t>(i)] = gelu_scalar(out[static_cast<size_t>(i)]);
    return out;
}

// Normalizes over the channel (last) extent, then applies gain and bias.
inline Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
    const int c = x.extent(x.rank() - 1);
    require(gain.rank() == 1 && gain.extent(0) == c, "layer_norm: gain length must match channels");
    require(bias.rank() == 1 && bias.extent(0) == c, "layer_norm: bias length must match channels");

    Tensor out = x;
    const long long rows = x.numel() / c;
    for (long long r = 0; r < rows; ++r) {
        float* row = out.data() + r * c;
        const double mean = sum_acc(row, c) / c;
        double var = 0.0;
        for (int i = 0; i < c; ++i) {
            const double d = row[i] - mean;
            var += d * d;
        }
        var /= c;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int i = 0; i < c; ++i)
            row[i] = static_cast<float>((row[i] - mean) * inv * gain.at(i) + bias.at(i));
    }
    return out;
}

// In-place softmax of a contiguous row, shift-invariant by construction.
inline void softmax_row(float* row, int n) {
    double mx = row[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(row[i]));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = std::exp(row[i] - mx);
        row[i] = static_cast<float>(e);
        sum += e;
    }
    for (int i = 0; i < n; ++i) row[i] = static_cast<float>(row[i] / sum);
}

inline Tensor softmax(const Tensor& v) {
    require(v.rank() == 1 && v.extent(0) >= 1, "softmax: non-empty rank-1 row required");
    Tensor out = v;
    softmax_row(out.data(), out.extent(0));
    return out;
}

// Channelwise bilinear interpolation with half-pixel centers
// (src = (dst + 0.5) * in/out - 0.5) and edge clamping. Resizing to the same
// extents is the bit-exact identity.
inline Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    require(x.rank() == 3, "bilinear_resize: input must be H x W x C");
    require(out_h >= 1 && out_w >= 1, "bilinear_resize: output extents must be >= 1");
    const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
    if (out_h == h && out_w == w) return x;

    Tensor out({out_h, out_w, c});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const double fy = (oy + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        const double dy = fy - y0;
        const int y1 = std::clamp(y0 + 1, 0, h - 1);
        y0 = std::clamp(y0, 0, h - 1);
        for (int ox = 0; ox < out_w; ++ox) {
            const double fx = (ox + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            const double dx = fx - x0;
            const int x1 = std::clamp(x0 + 1, 0, w - 1);
            x0 = std::clamp(x0, 0, w - 1);
            const float* p00 = x.data() + (static_cast<size_t>(y0) * w + x0) * c;
            const float* p01 = x.data() + (static_cast<size_t>(y0) * w + x1) * c;
            const float* p10 = x.data() + (static_cast<size_t>(y1) * w + x0) * c;
            const float* p11 = x.data() + (static_cast<size_t>(y1) * w + x1) * c;
            const double w00 = (1.0 - dy) * (1.0 - dx), w01 = (1.0 - dy) * dx;
            const double w10 = dy * (1.0 - dx), w11 = dy * dx;
            float* op = out.data() + (static_cast<size_t>(oy) * out_w + ox) * c;
            for (int ch = 0; ch < c; ++ch)
                op[ch] = static_cast<float>(w00 * p00[ch] + w01 * p01[ch] +
                                            w10 * p10[ch] + w11 * p11[ch]);
        }
    }
    return out;
}

// Reverses column order of an H x W or H x W x C tensor. Involution.
inline Tensor hflip(const Tensor& x) {
    require(x.rank() == 2 || x.rank() == 3, "hflip: input must be H x W or H x W x C");
    const int h = x.extent(0), w = x.extent(1);
    const int c = x.rank() == 3 ? x.extent(2) : 1;
    Tensor out = x;
    for (int y = 0; y < h; ++y) {
        for (int xcol = 0; xcol < w; ++xcol) {
            const float* src = x.data() + (static_cast<size_t>(y) * w + (w - 1 - xcol)) * c;
            float* dst = out.data() + (static_cast<size_t>(y) * w + xcol) * c;
            for (int ch = 0; ch < c; ++ch) dst[ch] = src[ch];
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// Small matrix helpers shared by the attention and readout paths.
// ----------------------------------------------------------------------------

// a: M x K, b: K x N -> M x N
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 operands required");
    const int m = a.extent(0), k = a.extent(1), n = b.extent(1);
    require(b.extent(0) == k, "matmul: inner extents do not match");
    Tensor out({m, n});
    std::vector<double> acc(static_cast<size_t>(n));
    for (int i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const float* arow = a.data() + static_cast<size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
            const double v = arow[kk];
            const float* brow = b.data() + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) acc[static_cast<size_t>(j)] += v * brow[j];
        }
        float* orow = out.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) orow[j] = static_cast<float>(acc[static_cast<size_t>(j)]);
    }
    return out;
}

// rows: M x K, weight: K x N, bias: N -> M x N
inline Tensor linear(const Tensor& rows, const Tensor& weight, const Tensor& bias) {
    Tensor out = matmul(rows, weight);
    const int m = out.extent(0), n = out.extent(1);
    require(bias.rank() == 1 && bias.extent(0) == n, "linear: bias length mismatch");
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(i, j) += bias.at(j);
    return out;
}

inline Tensor transpose(const Tensor& a) {
    require(a.rank() == 2, "transpose: rank-2 required");
    const int m = a.extent(0), n = a.extent(1);
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "add: shape mismatch");
    Tensor out = a;
    for (long long i = 0; i < out.numel(); ++i)
        out[static_cast<size_t>(i)] += b[static_cast<size_t>(i)];
    return out;
}

}  // namespace vosmem
