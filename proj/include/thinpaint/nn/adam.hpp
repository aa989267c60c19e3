#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "thinpaint/nn/param_store.hpp"

namespace thinpaint::nn {

template <typename T>
struct AdamHyper {
    T lr = T(1e-3);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

template <typename T>
struct AdamSlot {
    Tensor4<T> m; // first moment
    Tensor4<T> v; // second moment
};

template <typename T>
struct AdamState {
    AdamHyper<T> hyper;
    std::map<std::string, AdamSlot<T>> slots;
    std::int64_t step = 0;
};

/// One bias-corrected Adam update over every (name, grad) pair. Moments are created
/// on first sight of a parameter. Throws on non-finite gradients.
template <typename T>
void adam_step(ParamStore<T>& params, const std::map<std::string, Tensor4<T>>& grads,
               AdamState<T>& state) {
    state.step += 1;
    const T b1 = state.hyper.beta1, b2 = state.hyper.beta2;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(b1),
                                                 static_cast<double>(state.step)));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(b2),
                                                 static_cast<double>(state.step)));
    for (const auto& [name, g] : grads) {
        Tensor4<T>& p = params.at(name);
        check_same_shape(p, g, "adam_step");
        if (!g.all_finite())
            throw NumericError("adam_step: non-finite gradient for '" + name + "'");
        auto it = state.slots.find(name);
        if (it == state.slots.end())
            it = state.slots
                     .emplace(name, AdamSlot<T>{Tensor4<T>(g.n, g.c, g.h, g.w),
                                                Tensor4<T>(g.n, g.c, g.h, g.w)})
                     .first;
        AdamSlot<T>& slot = it->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            slot.m.v[i] = b1 * slot.m.v[i] + (T(1) - b1) * g.v[i];
            slot.v.v[i] = b2 * slot.v.v[i] + (T(1) - b2) * g.v[i] * g.v[i];
            const T mhat = slot.m.v[i] / bc1;
            const T vhat = slot.v.v[i] / bc2;
            p.v[i] -= state.hyper.lr * mhat / (std::sqrt(vhat) + state.hyper.eps);
        }
    }
}

/// Scale all gradients so their global L2 norm is at most max_norm.
template <typename T>
void clip_global_norm(std::map<std::string, Tensor4<T>>& grads, T max_norm) {
    double total = 0.0;
    for (const auto& [name, g] : grads)
        for (T v : g.v) total += static_cast<double>(v) * static_cast<double>(v);
    const double norm = std::sqrt(total);
    if (norm <= static_cast<double>(max_norm) || norm == 0.0) return;
    const T factor = static_cast<T>(static_cast<double>(max_norm) / norm);
    for (auto& [name, g] : grads)
        for (auto& v : g.v) v *= factor;
}

} // namespace thinpaint::nn
