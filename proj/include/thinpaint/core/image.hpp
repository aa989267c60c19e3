#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thinpaint/core/error.hpp"

namespace thinpaint {

/// 2-D binary grid, row-major storage. 1 = foreground (structure), 0 = background.
class BinaryMask {
public:
    BinaryMask() = default;

    BinaryMask(int height, int width, std::uint8_t fill = 0)
        : h_(height), w_(width), pix_(static_cast<std::size_t>(height) * width, fill) {
        if (height < 1 || width < 1)
            throw DataError("BinaryMask: dimensions must be >= 1, got " + std::to_string(height) +
                            "x" + std::to_string(width));
        if (fill > 1) throw DataError("BinaryMask: fill value must be 0 or 1");
    }

    int height() const { return h_; }
    int width() const { return w_; }
    bool empty() const { return pix_.empty(); }

    std::uint8_t at(int r, int c) const { return pix_[static_cast<std::size_t>(r) * w_ + c]; }
    std::uint8_t& operator()(int r, int c) { return pix_[static_cast<std::size_t>(r) * w_ + c]; }
    std::uint8_t operator()(int r, int c) const { return at(r, c); }

    // Bounds-checked read; out-of-range counts as background.
    std::uint8_t at_or_zero(int r, int c) const {
        if (r < 0 || r >= h_ || c < 0 || c >= w_) return 0;
        return at(r, c);
    }

    bool in_bounds(int r, int c) const { return r >= 0 && r < h_ && c >= 0 && c < w_; }

    const std::vector<std::uint8_t>& pixels() const { return pix_; }
    std::vector<std::uint8_t>& pixels() { return pix_; }

    std::size_t size() const { return pix_.size(); }

    std::size_t count_foreground() const {
        std::size_t n = 0;
        for (std::uint8_t p : pix_) n += p;
        return n;
    }

    bool operator==(const BinaryMask& other) const {
        return h_ == other.h_ && w_ == other.w_ && pix_ == other.pix_;
    }
    bool operator!=(const BinaryMask& other) const { return !(*this == other); }

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<std::uint8_t> pix_;
};

/// a AND NOT b, elementwise. Shapes must match.
inline BinaryMask mask_and_not(const BinaryMask& a, const BinaryMask& b) {
    if (a.height() != b.height() || a.width() != b.width())
        throw DataError("mask_and_not: shape mismatch");
    BinaryMask out(a.height(), a.width());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.pixels()[i] = static_cast<std::uint8_t>(a.pixels()[i] & (1 - b.pixels()[i]));
    return out;
}

inline BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
    if (a.height() != b.height() || a.width() != b.width())
        throw DataError("mask_or: shape mismatch");
    BinaryMask out(a.height(), a.width());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.pixels()[i] = static_cast<std::uint8_t>(a.pixels()[i] | b.pixels()[i]);
    return out;
}

/// true when every foreground pixel of `inner` is also foreground in `outer`.
inline bool mask_subset(const BinaryMask& inner, const BinaryMask& outer) {
    if (inner.height() != outer.height() || inner.width() != outer.width()) return false;
    for (std::size_t i = 0; i < inner.size(); ++i)
        if (inner.pixels()[i] && !outer.pixels()[i]) return false;
    return true;
}

/// Per-pixel foreground probability field. The background probability is 1 - fg,
/// so the two implicit channels always sum to 1.
class ProbMap {
public:
    ProbMap() = default;

    ProbMap(int height, int width, double fill = 0.0)
        : h_(height), w_(width), fg_(static_cast<std::size_t>(height) * width, fill) {
        if (height < 1 || width < 1) throw DataError("ProbMap: dimensions must be >= 1");
    }

    int height() const { return h_; }
    int width() const { return w_; }

    double at(int r, int c) const { return fg_[static_cast<std::size_t>(r) * w_ + c]; }
    double& operator()(int r, int c) { return fg_[static_cast<std::size_t>(r) * w_ + c]; }

    const std::vector<double>& fg() const { return fg_; }
    std::vector<double>& fg() { return fg_; }
    std::size_t size() const { return fg_.size(); }

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<double> fg_;
};

} // namespace thinpaint
