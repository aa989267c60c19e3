#pragma once

#include <algorithm>
#include <cmath>

#include "thinpaint/nn/tape.hpp"

namespace thinpaint::nn {

// ---------------------------------------------------------------------------
// Elementwise / reduction ops
// ---------------------------------------------------------------------------

template <typename T>
int add(Tape<T>& tp, int a, int b) {
    const auto& va = tp.val(a);
    const auto& vb = tp.val(b);
    check_same_shape(va, vb, "add");
    Tensor4<T> out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += vb.v[i];
    return tp.node(std::move(out), {a, b}, [a, b](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& ga = t.grad(a);
        auto& gb = t.grad(b);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            ga.v[i] += gy.v[i];
            gb.v[i] += gy.v[i];
        }
    });
}

template <typename T>
int sub(Tape<T>& tp, int a, int b) {
    const auto& va = tp.val(a);
    const auto& vb = tp.val(b);
    check_same_shape(va, vb, "sub");
    Tensor4<T> out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= vb.v[i];
    return tp.node(std::move(out), {a, b}, [a, b](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& ga = t.grad(a);
        auto& gb = t.grad(b);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            ga.v[i] += gy.v[i];
            gb.v[i] -= gy.v[i];
        }
    });
}

template <typename T>
int mul(Tape<T>& tp, int a, int b) {
    const auto va = tp.val(a);
    const auto vb = tp.val(b);
    check_same_shape(va, vb, "mul");
    Tensor4<T> out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= vb.v[i];
    return tp.node(std::move(out), {a, b}, [a, b, va, vb](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& ga = t.grad(a);
        auto& gb = t.grad(b);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            ga.v[i] += gy.v[i] * vb.v[i];
            gb.v[i] += gy.v[i] * va.v[i];
        }
    });
}

/// alpha * x + beta with scalar constants.
template <typename T>
int affine(Tape<T>& tp, int x, T alpha, T beta) {
    Tensor4<T> out = tp.val(x);
    for (auto& v : out.v) v = alpha * v + beta;
    return tp.node(std::move(out), {x}, [x, alpha](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i) gx.v[i] += alpha * gy.v[i];
    });
}

template <typename T>
int scale(Tape<T>& tp, int x, T alpha) {
    return affine(tp, x, alpha, T(0));
}

/// Elementwise multiply by a constant tensor.
template <typename T>
int mul_const(Tape<T>& tp, int x, Tensor4<T> k) {
    const auto& vx = tp.val(x);
    check_same_shape(vx, k, "mul_const");
    Tensor4<T> out = vx;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= k.v[i];
    return tp.node(std::move(out), {x}, [x, k = std::move(k)](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i) gx.v[i] += gy.v[i] * k.v[i];
    });
}

template <typename T>
int square(Tape<T>& tp, int x) {
    const auto vx = tp.val(x);
    Tensor4<T> out = vx;
    for (auto& v : out.v) v *= v;
    return tp.node(std::move(out), {x}, [x, vx](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i) gx.v[i] += T(2) * vx.v[i] * gy.v[i];
    });
}

template <typename T>
int sum(Tape<T>& tp, int x) {
    const auto& vx = tp.val(x);
    T acc = T(0);
    for (T v : vx.v) acc += v;
    const std::size_t sz = vx.size();
    return tp.node(Tensor4<T>::scalar(acc), {x},
                   [x, sz](Tape<T>& t, int self) {
                       const T g = t.grad(self).v[0];
                       auto& gx = t.grad(x);
                       for (std::size_t i = 0; i < sz; ++i) gx.v[i] += g;
                   });
}

template <typename T>
int mean(Tape<T>& tp, int x) {
    const std::size_t sz = tp.val(x).size();
    return scale(tp, sum(tp, x), T(1) / static_cast<T>(sz));
}

/// log of x clamped into [lo, hi]; zero gradient outside the clamp window.
template <typename T>
int log_clamped(Tape<T>& tp, int x, T lo, T hi) {
    const auto vx = tp.val(x);
    Tensor4<T> out = vx;
    for (auto& v : out.v) v = std::log(std::clamp(v, lo, hi));
    return tp.node(std::move(out), {x}, [x, vx, lo, hi](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            const T v = vx.v[i];
            if (v > lo && v < hi) gx.v[i] += gy.v[i] / v;
        }
    });
}

/// clamp with pass-through gradient inside (lo, hi).
template <typename T>
int clamp(Tape<T>& tp, int x, T lo, T hi) {
    const auto vx = tp.val(x);
    Tensor4<T> out = vx;
    for (auto& v : out.v) v = std::clamp(v, lo, hi);
    return tp.node(std::move(out), {x}, [x, vx, lo, hi](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i)
            if (vx.v[i] > lo && vx.v[i] < hi) gx.v[i] += gy.v[i];
    });
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <typename T>
int relu(Tape<T>& tp, int x) {
    const auto vx = tp.val(x);
    Tensor4<T> out = vx;
    for (auto& v : out.v) v = v > T(0) ? v : T(0);
    return tp.node(std::move(out), {x}, [x, vx](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i)
            if (vx.v[i] > T(0)) gx.v[i] += gy.v[i];
    });
}

template <typename T>
int leaky_relu(Tape<T>& tp, int x, T slope = T(0.2)) {
    const auto vx = tp.val(x);
    Tensor4<T> out = vx;
    for (auto& v : out.v) v = v > T(0) ? v : slope * v;
    return tp.node(std::move(out), {x}, [x, vx, slope](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i)
            gx.v[i] += (vx.v[i] > T(0) ? gy.v[i] : slope * gy.v[i]);
    });
}

template <typename T>
int sigmoid(Tape<T>& tp, int x) {
    Tensor4<T> out = tp.val(x);
    for (auto& v : out.v) v = T(1) / (T(1) + std::exp(-v));
    Tensor4<T> saved = out;
    return tp.node(std::move(out), {x}, [x, saved = std::move(saved)](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            const T y = saved.v[i];
            gx.v[i] += gy.v[i] * y * (T(1) - y);
        }
    });
}

template <typename T>
int softmax_channels(Tape<T>& tp, int x) {
    const auto& vx = tp.val(x);
    if (vx.c < 2) throw DataError("softmax_channels: need at least 2 channels");
    Tensor4<T> out(vx.n, vx.c, vx.h, vx.w);
    const std::size_t plane = static_cast<std::size_t>(vx.h) * vx.w;
    for (int in = 0; in < vx.n; ++in)
        for (std::size_t p = 0; p < plane; ++p) {
            T mx = vx.plane(in, 0)[p];
            for (int ic = 1; ic < vx.c; ++ic) mx = std::max(mx, vx.plane(in, ic)[p]);
            T z = T(0);
            for (int ic = 0; ic < vx.c; ++ic) z += std::exp(vx.plane(in, ic)[p] - mx);
            for (int ic = 0; ic < vx.c; ++ic)
                out.plane(in, ic)[p] = std::exp(vx.plane(in, ic)[p] - mx) / z;
        }
    Tensor4<T> saved = out;
    return tp.node(std::move(out), {x}, [x, saved = std::move(saved)](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        const auto& y = saved;
        const std::size_t plane = static_cast<std::size_t>(y.h) * y.w;
        for (int in = 0; in < y.n; ++in)
            for (std::size_t p = 0; p < plane; ++p) {
                T dot = T(0);
                for (int ic = 0; ic < y.c; ++ic)
                    dot += gy.plane(in, ic)[p] * y.plane(in, ic)[p];
                for (int ic = 0; ic < y.c; ++ic)
                    gx.plane(in, ic)[p] += y.plane(in, ic)[p] * (gy.plane(in, ic)[p] - dot);
            }
    });
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

/// Cross-correlation with zero padding. weight is (out_ch, in_ch, k, k), bias is
/// (out_ch, 1, 1, 1). Output spatial dim = floor((in + 2 pad - k) / stride) + 1.
template <typename T>
int conv2d(Tape<T>& tp, int x, int weight, int bias, int stride, int pad) {
    const auto& vx = tp.val(x);
    const auto& vw = tp.val(weight);
    const auto& vb = tp.val(bias);
    if (stride < 1) throw DataError("conv2d: stride must be >= 1");
    if (vw.c != vx.c)
        throw DataError("conv2d: input channels " + std::to_string(vx.c) +
                        " do not match weight channels " + std::to_string(vw.c));
    if (vb.n != vw.n || vb.c != 1 || vb.h != 1 || vb.w != 1)
        throw DataError("conv2d: bias must be (out_ch,1,1,1)");
    const int kh = vw.h, kw = vw.w;
    const int oh = (vx.h + 2 * pad - kh) / stride + 1;
    const int ow = (vx.w + 2 * pad - kw) / stride + 1;
    if (oh < 1 || ow < 1)
        throw DataError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                        " does not fit input " + vx.shape_str());

    Tensor4<T> out(vx.n, vw.n, oh, ow);
    for (int in = 0; in < vx.n; ++in) {
        for (int co = 0; co < vw.n; ++co) {
            T* op = out.plane(in, co);
            const T bval = vb.v[co];
            for (int i = 0; i < oh * ow; ++i) op[i] = bval;
            for (int ci = 0; ci < vx.c; ++ci) {
                const T* ip = vx.plane(in, ci);
                const T* wp = vw.plane(co, ci);
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const T wv = wp[ky * kw + kx];
                        if (wv == T(0)) continue;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= vx.h) continue;
                            const T* irow = ip + static_cast<std::size_t>(iy) * vx.w;
                            T* orow = op + static_cast<std::size_t>(oy) * ow;
                            // Valid ox range so that ix = ox*stride - pad + kx is in bounds.
                            int ox0 = 0;
                            const int off = kx - pad;
                            if (off < 0) ox0 = (-off + stride - 1) / stride;
                            int ox1 = ow - 1;
                            const int max_ix = vx.w - 1 - off;
                            if (max_ix < 0) continue;
                            ox1 = std::min(ox1, max_ix / stride);
                            if (stride == 1) {
                                const T* in_shift = irow + off;
                                for (int ox = ox0; ox <= ox1; ++ox)
                                    orow[ox] += wv * in_shift[ox];
                            } else {
                                for (int ox = ox0; ox <= ox1; ++ox)
                                    orow[ox] += wv * irow[ox * stride + off];
                            }
                        }
                    }
                }
            }
        }
    }

    const int n = vx.n, ic_count = vx.c, ih = vx.h, iw = vx.w;
    return tp.node(std::move(out), {x, weight, bias},
                   [x, weight, bias, stride, pad, n, ic_count, ih, iw, kh,
                    kw](Tape<T>& t, int self) {
                       const auto& gy = t.grad(self);
                       const auto& vx2 = t.val(x);
                       const auto& vw2 = t.val(weight);
                       auto& gx = t.grad(x);
                       auto& gw = t.grad(weight);
                       auto& gb = t.grad(bias);
                       const int oh = gy.h, ow = gy.w, co_count = gy.c;
                       for (int in = 0; in < n; ++in) {
                           for (int co = 0; co < co_count; ++co) {
                               const T* gp = gy.plane(in, co);
                               T acc_b = T(0);
                               for (int i = 0; i < oh * ow; ++i) acc_b += gp[i];
                               gb.v[co] += acc_b;
                               for (int ci = 0; ci < ic_count; ++ci) {
                                   const T* ip = vx2.plane(in, ci);
                                   const T* wp = vw2.plane(co, ci);
                                   T* gip = gx.plane(in, ci);
                                   T* gwp = gw.plane(co, ci);
                                   for (int ky = 0; ky < kh; ++ky) {
                                       for (int kx = 0; kx < kw; ++kx) {
                                           const T wv = wp[ky * kw + kx];
                                           T acc_w = T(0);
                                           const int off = kx - pad;
                                           int ox0 = 0;
                                           if (off < 0) ox0 = (-off + stride - 1) / stride;
                                           const int max_ix = iw - 1 - off;
                                           if (max_ix < 0) continue;
                                           const int ox1 = std::min(ow - 1, max_ix / stride);
                                           for (int oy = 0; oy < oh; ++oy) {
                                               const int iy = oy * stride - pad + ky;
                                               if (iy < 0 || iy >= ih) continue;
                                               const T* irow =
                                                   ip + static_cast<std::size_t>(iy) * iw;
                                               T* girow =
                                                   gip + static_cast<std::size_t>(iy) * iw;
                                               const T* grow =
                                                   gp + static_cast<std::size_t>(oy) * ow;
                                               for (int ox = ox0; ox <= ox1; ++ox) {
                                                   const int ix = ox * stride + off;
                                                   const T g = grow[ox];
                                                   acc_w += g * irow[ix];
                                                   girow[ix] += g * wv;
                                               }
                                           }
                                           gwp[ky * kw + kx] += acc_w;
                                       }
                                   }
                               }
                           }
                       }
                   });
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

constexpr double kBnEps = 1e-5;

enum class BnMode { train, eval };

/// Batch normalization over (batch, height, width) per channel. In train mode the
/// batch statistics normalize and, when update_running is set, fold into the
/// running estimates with the given momentum. Eval mode normalizes with the
/// running estimates. running_mean/var are plain per-channel tensors owned by the
/// caller, not tape nodes.
template <typename T>
int batchnorm(Tape<T>& tp, int x, int gamma, int beta, Tensor4<T>& running_mean,
              Tensor4<T>& running_var, BnMode mode, T momentum = T(0.1),
              bool update_running = true) {
    const auto& vx = tp.val(x);
    const auto& vg = tp.val(gamma);
    const auto& vb = tp.val(beta);
    const int C = vx.c;
    if (vg.size() != static_cast<std::size_t>(C) || vb.size() != static_cast<std::size_t>(C))
        throw DataError("batchnorm: gamma/beta must have one value per channel");
    if (static_cast<int>(running_mean.size()) != C ||
        static_cast<int>(running_var.size()) != C)
        throw DataError("batchnorm: running stats must have one value per channel");

    const std::size_t plane = static_cast<std::size_t>(vx.h) * vx.w;
    const std::size_t per_channel = static_cast<std::size_t>(vx.n) * plane;
    const T eps = static_cast<T>(kBnEps);

    std::vector<T> mean_c(C), inv_std_c(C);
    if (mode == BnMode::train) {
        if (per_channel < 2)
            throw DataError("batchnorm: train mode needs at least 2 values per channel");
        for (int c = 0; c < C; ++c) {
            T m = T(0);
            for (int in = 0; in < vx.n; ++in) {
                const T* p = vx.plane(in, c);
                for (std::size_t i = 0; i < plane; ++i) m += p[i];
            }
            m /= static_cast<T>(per_channel);
            T var = T(0);
            for (int in = 0; in < vx.n; ++in) {
                const T* p = vx.plane(in, c);
                for (std::size_t i = 0; i < plane; ++i) {
                    const T d = p[i] - m;
                    var += d * d;
                }
            }
            var /= static_cast<T>(per_channel);
            mean_c[c] = m;
            inv_std_c[c] = T(1) / std::sqrt(var + eps);
            if (update_running) {
                running_mean.v[c] = (T(1) - momentum) * running_mean.v[c] + momentum * m;
                running_var.v[c] = (T(1) - momentum) * running_var.v[c] + momentum * var;
            }
        }
    } else {
        for (int c = 0; c < C; ++c) {
            mean_c[c] = running_mean.v[c];
            inv_std_c[c] = T(1) / std::sqrt(running_var.v[c] + eps);
        }
    }

    Tensor4<T> xhat(vx.n, vx.c, vx.h, vx.w);
    Tensor4<T> out(vx.n, vx.c, vx.h, vx.w);
    for (int in = 0; in < vx.n; ++in)
        for (int c = 0; c < C; ++c) {
            const T* p = vx.plane(in, c);
            T* xh = xhat.plane(in, c);
            T* op = out.plane(in, c);
            const T m = mean_c[c], is = inv_std_c[c], g = vg.v[c], b = vb.v[c];
            for (std::size_t i = 0; i < plane; ++i) {
                xh[i] = (p[i] - m) * is;
                op[i] = g * xh[i] + b;
            }
        }

    const bool train = mode == BnMode::train;
    return tp.node(
        std::move(out), {x, gamma, beta},
        [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std_c), train,
         per_channel, plane](Tape<T>& t, int self) {
            const auto& gy = t.grad(self);
            const auto& vg2 = t.val(gamma);
            auto& gx = t.grad(x);
            auto& gg = t.grad(gamma);
            auto& gb = t.grad(beta);
            const int N = gy.n, C = gy.c;
            for (int c = 0; c < C; ++c) {
                T sum_gy = T(0), sum_gy_xhat = T(0);
                for (int in = 0; in < N; ++in) {
                    const T* g = gy.plane(in, c);
                    const T* xh = xhat.plane(in, c);
                    for (std::size_t i = 0; i < plane; ++i) {
                        sum_gy += g[i];
                        sum_gy_xhat += g[i] * xh[i];
                    }
                }
                gb.v[c] += sum_gy;
                gg.v[c] += sum_gy_xhat;
                const T gmma = vg2.v[c], is = inv_std[c];
                if (train) {
                    const T inv_n = T(1) / static_cast<T>(per_channel);
                    for (int in = 0; in < N; ++in) {
                        const T* g = gy.plane(in, c);
                        const T* xh = xhat.plane(in, c);
                        T* gxp = gx.plane(in, c);
                        for (std::size_t i = 0; i < plane; ++i)
                            gxp[i] += gmma * is * inv_n *
                                      (static_cast<T>(per_channel) * g[i] - sum_gy -
                                       xh[i] * sum_gy_xhat);
                    }
                } else {
                    for (int in = 0; in < N; ++in) {
                        const T* g = gy.plane(in, c);
                        T* gxp = gx.plane(in, c);
                        for (std::size_t i = 0; i < plane; ++i) gxp[i] += gmma * is * g[i];
                    }
                }
            }
        });
}

// ---------------------------------------------------------------------------
// Resampling / pooling / slicing
// ---------------------------------------------------------------------------

template <typename T>
int upsample_nearest(Tape<T>& tp, int x, int factor = 2) {
    if (factor < 1) throw DataError("upsample_nearest: factor must be >= 1");
    const auto& vx = tp.val(x);
    if (factor == 1) return affine(tp, x, T(1), T(0));
    Tensor4<T> out(vx.n, vx.c, vx.h * factor, vx.w * factor);
    for (int in = 0; in < vx.n; ++in)
        for (int c = 0; c < vx.c; ++c) {
            const T* ip = vx.plane(in, c);
            T* op = out.plane(in, c);
            for (int y = 0; y < out.h; ++y)
                for (int xx = 0; xx < out.w; ++xx)
                    op[static_cast<std::size_t>(y) * out.w + xx] =
                        ip[static_cast<std::size_t>(y / factor) * vx.w + xx / factor];
        }
    return tp.node(std::move(out), {x}, [x, factor](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (int in = 0; in < gx.n; ++in)
            for (int c = 0; c < gx.c; ++c) {
                const T* gp = gy.plane(in, c);
                T* gxp = gx.plane(in, c);
                for (int y = 0; y < gy.h; ++y)
                    for (int xx = 0; xx < gy.w; ++xx)
                        gxp[static_cast<std::size_t>(y / factor) * gx.w + xx / factor] +=
                            gp[static_cast<std::size_t>(y) * gy.w + xx];
            }
    });
}

/// Global average pooling: (n, c, h, w) -> (n, c, 1, 1).
template <typename T>
int adaptive_avg_pool(Tape<T>& tp, int x) {
    const auto& vx = tp.val(x);
    const std::size_t plane = static_cast<std::size_t>(vx.h) * vx.w;
    Tensor4<T> out(vx.n, vx.c, 1, 1);
    for (int in = 0; in < vx.n; ++in)
        for (int c = 0; c < vx.c; ++c) {
            const T* p = vx.plane(in, c);
            T acc = T(0);
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            out.at(in, c, 0, 0) = acc / static_cast<T>(plane);
        }
    return tp.node(std::move(out), {x}, [x, plane](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (int in = 0; in < gx.n; ++in)
            for (int c = 0; c < gx.c; ++c) {
                const T g = gy.at(in, c, 0, 0) / static_cast<T>(plane);
                T* gxp = gx.plane(in, c);
                for (std::size_t i = 0; i < plane; ++i) gxp[i] += g;
            }
    });
}

template <typename T>
int concat_channels(Tape<T>& tp, int a, int b) {
    const auto& va = tp.val(a);
    const auto& vb = tp.val(b);
    if (va.n != vb.n || va.h != vb.h || va.w != vb.w)
        throw DataError("concat_channels: incompatible shapes " + va.shape_str() + " vs " +
                        vb.shape_str());
    Tensor4<T> out(va.n, va.c + vb.c, va.h, va.w);
    const std::size_t plane = static_cast<std::size_t>(va.h) * va.w;
    for (int in = 0; in < va.n; ++in) {
        for (int c = 0; c < va.c; ++c)
            std::copy_n(va.plane(in, c), plane, out.plane(in, c));
        for (int c = 0; c < vb.c; ++c)
            std::copy_n(vb.plane(in, c), plane, out.plane(in, va.c + c));
    }
    const int ca = va.c;
    return tp.node(std::move(out), {a, b}, [a, b, ca, plane](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& ga = t.grad(a);
        auto& gb = t.grad(b);
        for (int in = 0; in < ga.n; ++in) {
            for (int c = 0; c < ga.c; ++c) {
                const T* gp = gy.plane(in, c);
                T* gap = ga.plane(in, c);
                for (std::size_t i = 0; i < plane; ++i) gap[i] += gp[i];
            }
            for (int c = 0; c < gb.c; ++c) {
                const T* gp = gy.plane(in, ca + c);
                T* gbp = gb.plane(in, c);
                for (std::size_t i = 0; i < plane; ++i) gbp[i] += gp[i];
            }
        }
    });
}

/// Spatial crop, batch and channels preserved.
template <typename T>
int slice_spatial(Tape<T>& tp, int x, int r0, int c0, int hs, int ws) {
    const auto& vx = tp.val(x);
    if (r0 < 0 || c0 < 0 || r0 + hs > vx.h || c0 + ws > vx.w)
        throw DataError("slice_spatial: window out of range");
    Tensor4<T> out(vx.n, vx.c, hs, ws);
    for (int in = 0; in < vx.n; ++in)
        for (int c = 0; c < vx.c; ++c) {
            const T* ip = vx.plane(in, c);
            T* op = out.plane(in, c);
            for (int r = 0; r < hs; ++r)
                std::copy_n(ip + static_cast<std::size_t>(r0 + r) * vx.w + c0, ws,
                            op + static_cast<std::size_t>(r) * ws);
        }
    return tp.node(std::move(out), {x}, [x, r0, c0, hs, ws](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (int in = 0; in < gx.n; ++in)
            for (int c = 0; c < gx.c; ++c) {
                const T* gp = gy.plane(in, c);
                T* gxp = gx.plane(in, c);
                for (int r = 0; r < hs; ++r)
                    for (int cc = 0; cc < ws; ++cc)
                        gxp[static_cast<std::size_t>(r0 + r) * gx.w + c0 + cc] +=
                            gp[static_cast<std::size_t>(r) * ws + cc];
            }
    });
}

/// Single-channel view: (n, c, h, w) -> (n, 1, h, w).
template <typename T>
int channel(Tape<T>& tp, int x, int idx) {
    const auto& vx = tp.val(x);
    if (idx < 0 || idx >= vx.c) throw DataError("channel: index out of range");
    Tensor4<T> out(vx.n, 1, vx.h, vx.w);
    const std::size_t plane = static_cast<std::size_t>(vx.h) * vx.w;
    for (int in = 0; in < vx.n; ++in) std::copy_n(vx.plane(in, idx), plane, out.plane(in, 0));
    return tp.node(std::move(out), {x}, [x, idx, plane](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        for (int in = 0; in < gx.n; ++in) {
            const T* gp = gy.plane(in, 0);
            T* gxp = gx.plane(in, idx);
            for (std::size_t i = 0; i < plane; ++i) gxp[i] += gp[i];
        }
    });
}

/// Per-sample dot product over channels: two (n, c, 1, 1) -> (n, 1, 1, 1).
template <typename T>
int dot_channels(Tape<T>& tp, int a, int b) {
    const auto va = tp.val(a);
    const auto vb = tp.val(b);
    check_same_shape(va, vb, "dot_channels");
    if (va.h != 1 || va.w != 1) throw DataError("dot_channels: inputs must be (n,c,1,1)");
    Tensor4<T> out(va.n, 1, 1, 1);
    for (int in = 0; in < va.n; ++in) {
        T acc = T(0);
        for (int c = 0; c < va.c; ++c) acc += va.at(in, c, 0, 0) * vb.at(in, c, 0, 0);
        out.at(in, 0, 0, 0) = acc;
    }
    return tp.node(std::move(out), {a, b}, [a, b, va, vb](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& ga = t.grad(a);
        auto& gb = t.grad(b);
        for (int in = 0; in < va.n; ++in) {
            const T g = gy.at(in, 0, 0, 0);
            for (int c = 0; c < va.c; ++c) {
                ga.at(in, c, 0, 0) += g * vb.at(in, c, 0, 0);
                gb.at(in, c, 0, 0) += g * va.at(in, c, 0, 0);
            }
        }
    });
}

/// x / s where s is a scalar node.
template <typename T>
int div_by_scalar(Tape<T>& tp, int x, int s) {
    const auto vx = tp.val(x);
    const auto& vs = tp.val(s);
    if (vs.size() != 1) throw DataError("div_by_scalar: divisor must be a scalar node");
    const T sv = vs.v[0];
    Tensor4<T> out = vx;
    for (auto& v : out.v) v /= sv;
    return tp.node(std::move(out), {x, s}, [x, s, vx, sv](Tape<T>& t, int self) {
        const auto& gy = t.grad(self);
        auto& gx = t.grad(x);
        auto& gs = t.grad(s);
        T acc = T(0);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            gx.v[i] += gy.v[i] / sv;
            acc += gy.v[i] * vx.v[i];
        }
        gs.v[0] += -acc / (sv * sv);
    });
}

/// Mean of equally-shaped nodes, accumulated in list order.
template <typename T>
int mean_of(Tape<T>& tp, const std::vector<int>& ids) {
    if (ids.empty()) throw DataError("mean_of: empty list");
    int acc = ids[0];
    for (std::size_t i = 1; i < ids.size(); ++i) acc = add(tp, acc, ids[i]);
    return scale(tp, acc, T(1) / static_cast<T>(ids.size()));
}

} // namespace thinpaint::nn
