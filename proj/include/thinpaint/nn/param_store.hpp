#pragma once

#include <map>
#include <string>

#include "thinpaint/core/rng.hpp"
#include "thinpaint/nn/tensor.hpp"

namespace thinpaint::nn {

/// Named tensors of one or more networks. std::map keeps iteration order stable, so
/// every walk over the store is deterministic.
template <typename T>
struct ParamStore {
    std::map<std::string, Tensor4<T>> tensors;

    Tensor4<T>& at(const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw DataError("ParamStore: no tensor named '" + name + "'");
        return it->second;
    }
    const Tensor4<T>& at(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw DataError("ParamStore: no tensor named '" + name + "'");
        return it->second;
    }

    void add(const std::string& name, Tensor4<T> t) {
        if (!tensors.emplace(name, std::move(t)).second)
            throw DataError("ParamStore: duplicate tensor name '" + name + "'");
    }

    bool contains(const std::string& name) const { return tensors.count(name) != 0; }
};

/// Auxiliary state (BN running stats, power-iteration vectors) rides along in the
/// store but is never touched by the optimizer.
inline bool is_trainable_param(const std::string& name) {
    auto ends_with = [&](const char* suffix) {
        const std::string s(suffix);
        return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
    };
    return !ends_with(".running_mean") && !ends_with(".running_var") && !ends_with(".u");
}

template <typename T>
Tensor4<T> he_normal(int n, int c, int h, int w, Rng& rng) {
    Tensor4<T> t(n, c, h, w);
    const double stddev = std::sqrt(2.0 / (static_cast<double>(c) * h * w));
    for (auto& v : t.v) v = static_cast<T>(rng.normal() * stddev);
    return t;
}

} // namespace thinpaint::nn
