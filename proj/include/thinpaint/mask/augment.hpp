#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "thinpaint/core/image.hpp"
#include "thinpaint/core/rng.hpp"

namespace thinpaint {

/// Dilation with a (2r+1)^2 square structuring element. r = 0 is the identity.
inline BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius < 0) throw DataError("dilate: radius must be >= 0");
    if (radius == 0) return mask;
    // Separable: horizontal max run, then vertical.
    BinaryMask horiz(mask.height(), mask.width());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) {
            std::uint8_t v = 0;
            for (int d = -radius; d <= radius && !v; ++d) v = mask.at_or_zero(r, c + d);
            horiz(r, c) = v;
        }
    BinaryMask out(mask.height(), mask.width());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) {
            std::uint8_t v = 0;
            for (int d = -radius; d <= radius && !v; ++d) v = horiz.at_or_zero(r + d, c);
            out(r, c) = v;
        }
    return out;
}

/// Rotation. Quarter turns are exact coordinate permutations (90 maps (r,c) to
/// (c, H-1-r) and swaps the dimensions). Other angles rotate about the image
/// centre with nearest-neighbour inverse mapping on the same canvas.
inline BinaryMask rotate(const BinaryMask& mask, double angle_deg) {
    double a = std::fmod(angle_deg, 360.0);
    if (a < 0) a += 360.0;
    const int h = mask.height(), w = mask.width();

    if (a == 0.0) return mask;
    if (a == 90.0) {
        BinaryMask out(w, h);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) out(c, h - 1 - r) = mask.at(r, c);
        return out;
    }
    if (a == 180.0) {
        BinaryMask out(h, w);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) out(h - 1 - r, w - 1 - c) = mask.at(r, c);
        return out;
    }
    if (a == 270.0) {
        BinaryMask out(w, h);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) out(w - 1 - c, r) = mask.at(r, c);
        return out;
    }

    const double rad = a * 3.14159265358979323846 / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double cr = (h - 1) / 2.0, cc = (w - 1) / 2.0;
    BinaryMask out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            // Inverse map: rotate the destination coordinate back by -angle.
            const double dr = r - cr, dc = c - cc;
            const double sr = cs * dr + sn * dc + cr;
            const double sc = -sn * dr + cs * dc + cc;
            const int ir = static_cast<int>(std::lround(sr));
            const int ic = static_cast<int>(std::lround(sc));
            out(r, c) = mask.at_or_zero(ir, ic);
        }
    return out;
}

/// Flip each pixel independently with probability p.
inline BinaryMask add_noise(const BinaryMask& mask, double p, std::uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw DataError("add_noise: p must be in [0,1]");
    Rng rng(seed);
    BinaryMask out = mask;
    for (auto& px : out.pixels())
        if (rng.uniform() < p) px = static_cast<std::uint8_t>(1 - px);
    return out;
}

struct DilateOp {
    int radius = 1;
};
struct RotateOp {
    double angle_deg = 0.0;
};
struct NoiseOp {
    double p = 0.0;
    std::uint64_t seed = 0;
};
using AugmentOp = std::variant<DilateOp, RotateOp, NoiseOp>;

/// Apply an ordered augmentation pipeline. Deterministic given the per-op seeds.
inline BinaryMask augment(const BinaryMask& mask, const std::vector<AugmentOp>& ops) {
    BinaryMask cur = mask;
    for (const auto& op : ops) {
        if (const auto* d = std::get_if<DilateOp>(&op))
            cur = dilate(cur, d->radius);
        else if (const auto* r = std::get_if<RotateOp>(&op))
            cur = rotate(cur, r->angle_deg);
        else if (const auto* n = std::get_if<NoiseOp>(&op))
            cur = add_noise(cur, n->p, n->seed);
    }
    return cur;
}

} // namespace thinpaint
