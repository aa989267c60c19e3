#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "thinpaint/core/error.hpp"

namespace thinpaint::nn {

/// Dense NCHW tensor.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {
        if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1)
            throw DataError("Tensor4: dimensions must be >= 1");
    }

    static Tensor4 scalar(T x) {
        Tensor4 t(1, 1, 1, 1);
        t.v[0] = x;
        return t;
    }

    std::size_t size() const { return v.size(); }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) +
               "," + std::to_string(w) + ")";
    }

    T& at(int in, int ic, int ih, int iw) {
        return v[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
    }
    T at(int in, int ic, int ih, int iw) const {
        return v[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
    }

    T* plane(int in, int ic) {
        return v.data() + (static_cast<std::size_t>(in) * c + ic) * h * w;
    }
    const T* plane(int in, int ic) const {
        return v.data() + (static_cast<std::size_t>(in) * c + ic) * h * w;
    }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }
};

template <typename T>
void check_same_shape(const Tensor4<T>& a, const Tensor4<T>& b, const char* who) {
    if (!a.same_shape(b))
        throw DataError(std::string(who) + ": shape mismatch " + a.shape_str() + " vs " +
                        b.shape_str());
}

} // namespace thinpaint::nn
