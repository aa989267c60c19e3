#pragma once

#include <utility>
#include <vector>

#include "thinpaint/core/image.hpp"
#include "thinpaint/core/rng.hpp"

namespace thinpaint {

/// Maps between a parent image and its non-overlapping square patch grid. The
/// parent is zero-padded on the bottom/right up to the next multiple of
/// patch_size; patches are indexed row-major.
struct PatchLayout {
    int parent_h = 0, parent_w = 0;
    int padded_h = 0, padded_w = 0;
    int patch_size = 0;
    int rows = 0, cols = 0;

    int count() const { return rows * cols; }
    std::pair<int, int> origin(int index) const {
        if (index < 0 || index >= count()) throw DataError("PatchLayout: index out of range");
        return {(index / cols) * patch_size, (index % cols) * patch_size};
    }
};

inline PatchLayout make_layout(int parent_h, int parent_w, int patch_size) {
    if (patch_size < 1) throw DataError("make_layout: patch_size must be >= 1");
    PatchLayout l;
    l.parent_h = parent_h;
    l.parent_w = parent_w;
    l.patch_size = patch_size;
    l.rows = (parent_h + patch_size - 1) / patch_size;
    l.cols = (parent_w + patch_size - 1) / patch_size;
    l.padded_h = l.rows * patch_size;
    l.padded_w = l.cols * patch_size;
    return l;
}

inline std::pair<std::vector<BinaryMask>, PatchLayout> extract_patches(const BinaryMask& mask,
                                                                       int patch_size = 256) {
    const PatchLayout layout = make_layout(mask.height(), mask.width(), patch_size);
    std::vector<BinaryMask> patches;
    patches.reserve(layout.count());
    for (int i = 0; i < layout.count(); ++i) {
        auto [r0, c0] = layout.origin(i);
        BinaryMask p(patch_size, patch_size);
        for (int r = 0; r < patch_size; ++r)
            for (int c = 0; c < patch_size; ++c) p(r, c) = mask.at_or_zero(r0 + r, c0 + c);
        patches.push_back(std::move(p));
    }
    return {std::move(patches), layout};
}

inline BinaryMask recompose(const std::vector<BinaryMask>& patches, const PatchLayout& layout) {
    if (static_cast<int>(patches.size()) != layout.count())
        throw DataError("recompose: patch count does not match layout");
    BinaryMask out(layout.parent_h, layout.parent_w);
    for (int i = 0; i < layout.count(); ++i) {
        const BinaryMask& p = patches[i];
        if (p.height() != layout.patch_size || p.width() != layout.patch_size)
            throw DataError("recompose: patch shape does not match layout");
        auto [r0, c0] = layout.origin(i);
        for (int r = 0; r < layout.patch_size; ++r) {
            if (r0 + r >= layout.parent_h) break;
            for (int c = 0; c < layout.patch_size && c0 + c < layout.parent_w; ++c)
                out(r0 + r, c0 + c) = p.at(r, c);
        }
    }
    return out;
}

/// Copy of `base` with the listed patch rectangles replaced. patches[i] lands at
/// indices[i].
inline BinaryMask partial_recompose(const BinaryMask& base,
                                    const std::vector<BinaryMask>& patches,
                                    const std::vector<int>& indices,
                                    const PatchLayout& layout) {
    if (patches.size() != indices.size())
        throw DataError("partial_recompose: patches/indices length mismatch");
    if (base.height() != layout.parent_h || base.width() != layout.parent_w)
        throw DataError("partial_recompose: base shape does not match layout");
    BinaryMask out = base;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        auto [r0, c0] = layout.origin(indices[k]); // throws on bad index
        const BinaryMask& p = patches[k];
        if (p.height() != layout.patch_size || p.width() != layout.patch_size)
            throw DataError("partial_recompose: patch shape does not match layout");
        for (int r = 0; r < layout.patch_size; ++r) {
            if (r0 + r >= layout.parent_h) break;
            for (int c = 0; c < layout.patch_size && c0 + c < layout.parent_w; ++c)
                out(r0 + r, c0 + c) = p.at(r, c);
        }
    }
    return out;
}

/// Each pixel independently becomes foreground with its predicted probability.
inline BinaryMask bernoulli_binarize(const ProbMap& prob, Rng& rng) {
    BinaryMask out(prob.height(), prob.width());
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double p = prob.fg()[i];
        if (p < -1e-6 || p > 1.0 + 1e-6)
            throw NumericError("bernoulli_binarize: probability " + std::to_string(p) +
                               " outside [0,1]");
        out.pixels()[i] = static_cast<std::uint8_t>(rng.uniform() < p);
    }
    return out;
}

/// Foreground wherever the probability is >= t.
inline BinaryMask threshold_binarize(const ProbMap& prob, double t = 0.5) {
    if (t <= 0.0 || t >= 1.0) throw DataError("threshold_binarize: t must be in (0,1)");
    BinaryMask out(prob.height(), prob.width());
    for (std::size_t i = 0; i < prob.size(); ++i)
        out.pixels()[i] = static_cast<std::uint8_t>(prob.fg()[i] >= t);
    return out;
}

} // namespace thinpaint
