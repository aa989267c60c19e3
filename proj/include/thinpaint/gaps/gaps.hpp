#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "thinpaint/core/image.hpp"
#include "thinpaint/core/rng.hpp"

namespace thinpaint {

constexpr int kBlobSize = 32;

struct IntRange {
    int lo = 0;
    int hi = 0;
    bool valid() const { return lo <= hi && lo > 0; }
};

struct ScaleRange {
    double lo = 0.0;
    double hi = 0.0;
    bool valid() const { return lo <= hi && lo > 0.0; }
};

enum class GapKind { square, brush, blob, mix };

struct BrushParams {
    IntRange vertex_count{4, 8};
    IntRange stroke_width{6, 24};
    double max_turn_deg = 60.0;
    IntRange segment_length{16, 64};
};

struct GapConfig {
    GapKind kind = GapKind::mix;
    IntRange count{1, 4};
    IntRange square_size{16, 48};
    BrushParams brush;
    ScaleRange blob_scale{0.5, 2.0};
    std::uint64_t seed = 0;

    void validate() const {
        if (!count.valid() || !square_size.valid() || !brush.vertex_count.valid() ||
            !brush.stroke_width.valid() || !brush.segment_length.valid() ||
            !blob_scale.valid() || brush.max_turn_deg < 0.0)
            throw ConfigError("GapConfig: ranges must be non-empty and positive");
    }
};

struct BlobLibrary {
    std::uint64_t seed = 0;
    std::vector<BinaryMask> blobs;
};

namespace detail {

inline BinaryMask largest_component(const BinaryMask& m) {
    std::vector<int> label(m.size(), -1);
    std::vector<std::size_t> stack;
    int best_label = -1;
    std::size_t best_size = 0;
    int next = 0;
    const int w = m.width();
    for (std::size_t start = 0; start < m.size(); ++start) {
        if (!m.pixels()[start] || label[start] >= 0) continue;
        std::size_t size = 0;
        stack.push_back(start);
        label[start] = next;
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            ++size;
            const int r = static_cast<int>(idx) / w, c = static_cast<int>(idx) % w;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (!dr && !dc) continue;
                    const int nr = r + dr, nc = c + dc;
                    if (!m.in_bounds(nr, nc) || !m.at(nr, nc)) continue;
                    const std::size_t nidx = static_cast<std::size_t>(nr) * w + nc;
                    if (label[nidx] < 0) {
                        label[nidx] = next;
                        stack.push_back(nidx);
                    }
                }
        }
        if (size > best_size) {
            best_size = size;
            best_label = next;
        }
        ++next;
    }
    BinaryMask out(m.height(), m.width());
    if (best_label < 0) return out;
    for (std::size_t i = 0; i < m.size(); ++i)
        out.pixels()[i] = static_cast<std::uint8_t>(label[i] == best_label);
    return out;
}

// 5-tap binomial blur, one horizontal and one vertical pass.
inline void smooth_field(std::vector<double>& v, int h, int w) {
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    std::vector<double> tmp(v.size());
    auto clampi = [](int x, int n) { return std::clamp(x, 0, n - 1); };
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int d = -2; d <= 2; ++d) acc += k[d + 2] * v[r * w + clampi(c + d, w)];
            tmp[r * w + c] = acc;
        }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int d = -2; d <= 2; ++d) acc += k[d + 2] * tmp[clampi(r + d, h) * w + c];
            v[r * w + c] = acc;
        }
}

} // namespace detail

/// One blob: smoothed seeded noise thresholded at its 70th percentile, largest
/// 8-connected component kept. Always non-empty.
inline BinaryMask make_blob(std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(seed + attempt * 0x51ed2701b4d2f6a9ull);
        std::vector<double> field(kBlobSize * kBlobSize);
        for (auto& v : field) v = rng.uniform();
        detail::smooth_field(field, kBlobSize, kBlobSize);
        detail::smooth_field(field, kBlobSize, kBlobSize);

        std::vector<double> sorted = field;
        std::sort(sorted.begin(), sorted.end());
        const double cut = sorted[static_cast<std::size_t>(0.7 * sorted.size())];

        BinaryMask m(kBlobSize, kBlobSize);
        for (std::size_t i = 0; i < field.size(); ++i)
            m.pixels()[i] = static_cast<std::uint8_t>(field[i] > cut);
        m = detail::largest_component(m);
        if (m.count_foreground() > 0) return m;
    }
}

inline BlobLibrary make_blob_library(std::uint64_t seed, int count) {
    if (count < 1) throw ConfigError("make_blob_library: count must be >= 1");
    BlobLibrary lib;
    lib.seed = seed;
    lib.blobs.reserve(count);
    Rng rng(seed);
    for (int i = 0; i < count; ++i) lib.blobs.push_back(make_blob(rng.next_u64()));
    return lib;
}

/// Nearest-neighbour rescale to the given size.
inline BinaryMask rescale_nearest(const BinaryMask& m, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw DataError("rescale_nearest: bad target size");
    BinaryMask out(out_h, out_w);
    for (int r = 0; r < out_h; ++r)
        for (int c = 0; c < out_w; ++c) {
            const int sr = std::min(m.height() - 1, r * m.height() / out_h);
            const int sc = std::min(m.width() - 1, c * m.width() / out_w);
            out(r, c) = m.at(sr, sc);
        }
    return out;
}

struct PolyPoint {
    double r = 0.0;
    double c = 0.0;
};

struct Stroke {
    std::vector<PolyPoint> vertices;
    double width = 1.0;
};

inline Stroke sample_stroke(const BrushParams& p, int h, int w, Rng& rng) {
    constexpr double kPi = 3.14159265358979323846;
    Stroke s;
    s.width = static_cast<double>(rng.uniform_range(p.stroke_width.lo, p.stroke_width.hi));
    const int verts = rng.uniform_range(p.vertex_count.lo, p.vertex_count.hi);
    double r = rng.uniform(0.0, h);
    double c = rng.uniform(0.0, w);
    double heading = rng.uniform(0.0, 2.0 * kPi);
    const double max_turn = p.max_turn_deg * kPi / 180.0;
    s.vertices.push_back({r, c});
    for (int i = 1; i < verts; ++i) {
        const double len =
            static_cast<double>(rng.uniform_range(p.segment_length.lo, p.segment_length.hi));
        heading += rng.uniform(-max_turn, max_turn);
        r += len * std::cos(heading);
        c += len * std::sin(heading);
        s.vertices.push_back({r, c});
    }
    return s;
}

/// Distance from a point to a segment.
inline double point_segment_distance(double pr, double pc, const PolyPoint& a,
                                     const PolyPoint& b) {
    const double dr = b.r - a.r, dc = b.c - a.c;
    const double len2 = dr * dr + dc * dc;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((pr - a.r) * dr + (pc - a.c) * dc) / len2, 0.0, 1.0);
    const double qr = a.r + t * dr, qc = a.c + t * dc;
    return std::hypot(pr - qr, pc - qc);
}

/// Stamp a stroke with a round brush: pixels within width/2 of the polyline.
inline void stamp_stroke(BinaryMask& into, const Stroke& s) {
    const double radius = s.width / 2.0;
    for (std::size_t i = 0; i + 1 < s.vertices.size() || (s.vertices.size() == 1 && i == 0);
         ++i) {
        const PolyPoint& a = s.vertices[i];
        const PolyPoint& b = s.vertices.size() == 1 ? a : s.vertices[i + 1];
        const int lo_r = static_cast<int>(std::floor(std::min(a.r, b.r) - radius));
        const int hi_r = static_cast<int>(std::ceil(std::max(a.r, b.r) + radius));
        const int lo_c = static_cast<int>(std::floor(std::min(a.c, b.c) - radius));
        const int hi_c = static_cast<int>(std::ceil(std::max(a.c, b.c) + radius));
        for (int r = std::max(0, lo_r); r <= std::min(into.height() - 1, hi_r); ++r)
            for (int c = std::max(0, lo_c); c <= std::min(into.width() - 1, hi_c); ++c)
                if (point_segment_distance(r, c, a, b) <= radius) into(r, c) = 1;
        if (s.vertices.size() == 1) break;
    }
}

/// Draws artificial gap masks over a patch shape. All randomness comes from the
/// caller's rng, so a fixed (config, shape, rng state) always produces the same
/// mask.
class GapSampler {
public:
    GapSampler(GapConfig cfg, BlobLibrary lib) : cfg_(std::move(cfg)), lib_(std::move(lib)) {
        cfg_.validate();
        if (lib_.blobs.empty()) throw ConfigError("GapSampler: empty blob library");
    }

    const GapConfig& config() const { return cfg_; }
    const BlobLibrary& library() const { return lib_; }

    BinaryMask sample(int h, int w, Rng& rng) const {
        BinaryMask gaps(h, w);
        const int count = rng.uniform_range(cfg_.count.lo, cfg_.count.hi);
        for (int g = 0; g < count; ++g) {
            GapKind kind = cfg_.kind;
            if (kind == GapKind::mix) {
                const int pick = static_cast<int>(rng.uniform_int(3));
                kind = pick == 0 ? GapKind::square : pick == 1 ? GapKind::brush : GapKind::blob;
            }
            // Retry a clipped-to-nothing draw so every gap contributes pixels.
            for (int attempt = 0; attempt < 8; ++attempt) {
                const std::size_t before = gaps.count_foreground();
                draw_one(gaps, kind, rng);
                if (gaps.count_foreground() > before) break;
            }
        }
        return gaps;
    }

private:
    void draw_one(BinaryMask& gaps, GapKind kind, Rng& rng) const {
        const int h = gaps.height(), w = gaps.width();
        switch (kind) {
        case GapKind::square: {
            const int s = rng.uniform_range(cfg_.square_size.lo, cfg_.square_size.hi);
            const int cr = static_cast<int>(rng.uniform_int(h));
            const int cc = static_cast<int>(rng.uniform_int(w));
            const int top = cr - s / 2, left = cc - s / 2;
            for (int r = std::max(0, top); r < std::min(h, top + s); ++r)
                for (int c = std::max(0, left); c < std::min(w, left + s); ++c) gaps(r, c) = 1;
            break;
        }
        case GapKind::brush: {
            stamp_stroke(gaps, sample_stroke(cfg_.brush, h, w, rng));
            break;
        }
        case GapKind::blob: {
            const auto& blob = lib_.blobs[rng.uniform_int(lib_.blobs.size())];
            const double scale = rng.uniform(cfg_.blob_scale.lo, cfg_.blob_scale.hi);
            const int th = std::max(1, static_cast<int>(std::lround(kBlobSize * scale)));
            const int tw = th;
            const BinaryMask scaled =
                (th == blob.height() && tw == blob.width()) ? blob
                                                            : rescale_nearest(blob, th, tw);
            const int cr = static_cast<int>(rng.uniform_int(h));
            const int cc = static_cast<int>(rng.uniform_int(w));
            const int top = cr - th / 2, left = cc - tw / 2;
            for (int r = 0; r < th; ++r)
                for (int c = 0; c < tw; ++c)
                    if (scaled.at(r, c) && gaps.in_bounds(top + r, left + c))
                        gaps(top + r, left + c) = 1;
            break;
        }
        case GapKind::mix:
            break; // resolved by the caller
        }
    }

    GapConfig cfg_;
    BlobLibrary lib_;
};

/// x = y AND NOT M: gap pixels forced to background, everything else unchanged.
inline BinaryMask corrupt(const BinaryMask& patch, const BinaryMask& gaps) {
    if (patch.height() != gaps.height() || patch.width() != gaps.width())
        throw DataError("corrupt: patch/gap shape mismatch");
    return mask_and_not(patch, gaps);
}

} // namespace thinpaint
