#pragma once

#include <cmath>
#include <vector>

#include "thinpaint/nn/layers.hpp"

namespace thinpaint::nn {

/// Power-iteration estimate of the top singular value of weight viewed as an
/// (out_channels, rest) matrix. Refines u in place and returns the matching right
/// vector v and sigma. A zero weight leaves u untouched and reports sigma = 0.
template <typename T>
struct PowerIterResult {
    std::vector<T> v;
    T sigma = T(0);
};

template <typename T>
PowerIterResult<T> power_iterate(const Tensor4<T>& weight, std::vector<T>& u, int iterations) {
    const int rows = weight.n;
    const int cols = static_cast<int>(weight.size()) / rows;
    if (static_cast<int>(u.size()) != rows)
        throw DataError("power_iterate: u length must equal out_channels");
    if (iterations < 0) throw DataError("power_iterate: iterations must be >= 0");

    T frob = T(0);
    for (T x : weight.v) frob += x * x;
    PowerIterResult<T> res;
    res.v.assign(cols, T(0));
    if (frob == T(0)) return res;

    auto matvec = [&](const std::vector<T>& x, std::vector<T>& y) { // y = W x
        for (int r = 0; r < rows; ++r) {
            T acc = T(0);
            const T* wr = weight.v.data() + static_cast<std::size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
            y[r] = acc;
        }
    };
    auto matvec_t = [&](const std::vector<T>& x, std::vector<T>& y) { // y = W^T x
        std::fill(y.begin(), y.end(), T(0));
        for (int r = 0; r < rows; ++r) {
            const T* wr = weight.v.data() + static_cast<std::size_t>(r) * cols;
            const T xv = x[r];
            for (int c = 0; c < cols; ++c) y[c] += wr[c] * xv;
        }
    };
    auto normalize = [](std::vector<T>& x) {
        T norm = T(0);
        for (T v : x) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > T(1e-12))
            for (T& v : x) v /= norm;
        return norm;
    };

    std::vector<T> v(cols), wu(rows);
    for (int it = 0; it < iterations; ++it) {
        matvec_t(u, v);
        normalize(v);
        matvec(v, wu);
        normalize(wu);
        u = wu;
    }
    // sigma = u^T W v with the latest u; derive v from u when no iterations ran.
    matvec_t(u, v);
    normalize(v);
    matvec(v, wu);
    T sigma = T(0);
    for (int r = 0; r < rows; ++r) sigma += u[r] * wu[r];
    res.v = std::move(v);
    res.sigma = sigma;
    return res;
}

/// weight / sigma with sigma estimated by power iteration; u is refined in place.
template <typename T>
Tensor4<T> spectral_normalize(const Tensor4<T>& weight, std::vector<T>& u, int iterations) {
    if (iterations < 1) throw DataError("spectral_normalize: iterations must be >= 1");
    auto pi = power_iterate(weight, u, iterations);
    if (pi.sigma == T(0)) return weight; // zero matrix stays zero
    Tensor4<T> out = weight;
    for (auto& x : out.v) x /= pi.sigma;
    return out;
}

/// Tape node for W / sigma where sigma = u^T W v with u, v held constant. The
/// division is differentiable in W including sigma's dependence on it.
template <typename T>
int sn_weight(Tape<T>& tp, int weight, const std::vector<T>& u, const std::vector<T>& v) {
    const auto& vw = tp.val(weight);
    const int rows = vw.n;
    const int cols = static_cast<int>(vw.size()) / rows;
    if (static_cast<int>(u.size()) != rows || static_cast<int>(v.size()) != cols)
        throw DataError("sn_weight: u/v sizes do not match the weight matrix view");
    Tensor4<T> outer(vw.n, vw.c, vw.h, vw.w);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            outer.v[static_cast<std::size_t>(r) * cols + c] = u[r] * v[c];
    const int sigma = sum(tp, mul_const(tp, weight, std::move(outer)));
    return div_by_scalar(tp, weight, sigma);
}

} // namespace thinpaint::nn
