#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "thinpaint/core/image.hpp"
#include "thinpaint/mask/skeleton.hpp"
#include "thinpaint/metrics/convex_hull.hpp"

namespace thinpaint {

/// Mean squared error between two masks; for binary inputs this is the fraction of
/// differing pixels.
inline double mse(const BinaryMask& a, const BinaryMask& b) {
    if (a.height() != b.height() || a.width() != b.width())
        throw DataError("mse: shape mismatch");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        diff += static_cast<std::size_t>(a.pixels()[i] != b.pixels()[i]);
    return static_cast<double>(diff) / static_cast<double>(a.size());
}

/// MSE restricted to pixels where region = 1. Undefined (absent) when the region is
/// empty.
inline std::optional<double> mse_within(const BinaryMask& a, const BinaryMask& b,
                                        const BinaryMask& region) {
    if (a.height() != b.height() || a.width() != b.width() || a.height() != region.height() ||
        a.width() != region.width())
        throw DataError("mse_within: shape mismatch");
    std::size_t count = 0, diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (region.pixels()[i]) {
            ++count;
            diff += static_cast<std::size_t>(a.pixels()[i] != b.pixels()[i]);
        }
    if (count == 0) return std::nullopt;
    return static_cast<double>(diff) / static_cast<double>(count);
}

/// Count of differing pixels, optionally restricted to a region.
inline std::size_t pixel_diff(const BinaryMask& a, const BinaryMask& b,
                              const BinaryMask* region = nullptr) {
    if (a.height() != b.height() || a.width() != b.width())
        throw DataError("pixel_diff: shape mismatch");
    if (region && (region->height() != a.height() || region->width() != a.width()))
        throw DataError("pixel_diff: region shape mismatch");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (region && !region->pixels()[i]) continue;
        diff += static_cast<std::size_t>(a.pixels()[i] != b.pixels()[i]);
    }
    return diff;
}

enum class Connectivity { four = 4, eight = 8 };

/// Number of maximal connected foreground regions. Two-pass union-find labelling.
inline int connected_components(const BinaryMask& mask,
                                Connectivity conn = Connectivity::eight) {
    const int h = mask.height(), w = mask.width();
    if (h == 0 || w == 0) return 0;

    std::vector<int> label(mask.size(), -1);
    std::vector<int> parent;
    parent.reserve(256);

    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!mask.at(r, c)) continue;
            const std::size_t idx = static_cast<std::size_t>(r) * w + c;
            // Previously visited neighbours only (raster order).
            int neigh[4];
            int nn = 0;
            if (c > 0 && mask.at(r, c - 1)) neigh[nn++] = label[idx - 1];
            if (r > 0 && mask.at(r - 1, c)) neigh[nn++] = label[idx - w];
            if (conn == Connectivity::eight) {
                if (r > 0 && c > 0 && mask.at(r - 1, c - 1)) neigh[nn++] = label[idx - w - 1];
                if (r > 0 && c + 1 < w && mask.at(r - 1, c + 1)) neigh[nn++] = label[idx - w + 1];
            }
            if (nn == 0) {
                label[idx] = static_cast<int>(parent.size());
                parent.push_back(label[idx]);
            } else {
                int m = neigh[0];
                for (int i = 1; i < nn; ++i) m = std::min(m, neigh[i]);
                label[idx] = m;
                for (int i = 0; i < nn; ++i) unite(m, neigh[i]);
            }
        }
    }

    int count = 0;
    for (std::size_t i = 0; i < parent.size(); ++i)
        if (find(static_cast<int>(i)) == static_cast<int>(i)) ++count;
    return count;
}

/// |before - after| / before. before = 0 is degenerate: 0 when after is also 0,
/// otherwise absent.
inline std::optional<double> relative_improvement(double before, double after) {
    if (before < 0.0) throw DataError("relative_improvement: before must be >= 0");
    if (before == 0.0) {
        if (after == 0.0) return 0.0;
        return std::nullopt;
    }
    return std::abs(before - after) / before;
}

struct TraitSet {
    double length = 0.0; // skeleton length, diagonal steps weighted sqrt(2)
    int tips = 0;        // skeleton endpoints
    double hull_area = 0.0;
};

/// Skeleton length, tip count and convex hull area of a mask. The skeleton is the
/// Zhang-Suen thinning; length sums unique pixel adjacencies (orthogonal 1,
/// diagonal sqrt(2)), skipping a diagonal when both of its orthogonal bridge pixels
/// are present. The hull is taken over all foreground pixel centres of the mask.
inline TraitSet root_traits(const BinaryMask& mask) {
    TraitSet t;
    if (mask.count_foreground() == 0) return t;

    const BinaryMask skel = skeletonize(mask);
    const double sqrt2 = std::sqrt(2.0);

    for (int r = 0; r < skel.height(); ++r) {
        for (int c = 0; c < skel.width(); ++c) {
            if (!skel.at(r, c)) continue;
            // Forward edges only, so each adjacency is counted once.
            if (skel.at_or_zero(r, c + 1)) t.length += 1.0;
            if (skel.at_or_zero(r + 1, c)) t.length += 1.0;
            if (skel.at_or_zero(r + 1, c + 1) &&
                !(skel.at_or_zero(r, c + 1) && skel.at_or_zero(r + 1, c)))
                t.length += sqrt2;
            if (skel.at_or_zero(r + 1, c - 1) &&
                !(skel.at_or_zero(r, c - 1) && skel.at_or_zero(r + 1, c)))
                t.length += sqrt2;

            int neighbours = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                    if ((dr || dc) && skel.at_or_zero(r + dr, c + dc)) ++neighbours;
            if (neighbours == 1) ++t.tips;
        }
    }

    std::vector<Point2> pts;
    pts.reserve(mask.count_foreground());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            if (mask.at(r, c)) pts.push_back({static_cast<double>(c), static_cast<double>(r)});
    t.hull_area = convex_hull_area(pts);
    return t;
}

// ---------------------------------------------------------------------------
// Aggregated evaluation over (ground truth, corrupted, inpainted) triples.
// ---------------------------------------------------------------------------

struct ImageMetrics {
    std::string name;
    double mse_overall = 0.0;
    std::optional<double> mse_within_gaps;
    std::optional<double> rel_pixel_diff;
    std::optional<double> rel_comp_diff;
    int components_before = 0; // corrupted input
    int components_after = 0;  // inpainted output
    TraitSet traits_before;
    TraitSet traits_after;
};

struct Aggregate {
    std::optional<double> mean;
    std::optional<double> stddev; // sample (n-1); 0 for a single value
    int excluded = 0;             // absent entries left out of the mean
};

struct MetricsReport {
    std::vector<ImageMetrics> per_image;
    Aggregate mse_overall;
    Aggregate mse_within_gaps;
    Aggregate rel_pixel_diff;
    Aggregate rel_comp_diff;
};

struct EvalOptions {
    // Pixel-difference normalization restricted to gap pixels by default; set false
    // to compute it over the whole image.
    bool pixel_diff_within_gaps = true;
    bool with_traits = false;
};

inline Aggregate aggregate(const std::vector<std::optional<double>>& values) {
    Aggregate a;
    std::vector<double> present;
    present.reserve(values.size());
    for (const auto& v : values) {
        if (v)
            present.push_back(*v);
        else
            ++a.excluded;
    }
    if (present.empty()) return a;
    // Compensated summation so aggregation order never matters.
    double sum = 0.0, comp = 0.0;
    for (double v : present) {
        double y = v - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    const double mean = sum / static_cast<double>(present.size());
    a.mean = mean;
    if (present.size() == 1) {
        a.stddev = 0.0;
    } else {
        double ss = 0.0;
        for (double v : present) ss += (v - mean) * (v - mean);
        a.stddev = std::sqrt(ss / static_cast<double>(present.size() - 1));
    }
    return a;
}

struct EvalTriple {
    std::string name;
    const BinaryMask* truth = nullptr;
    const BinaryMask* corrupted = nullptr;
    const BinaryMask* inpainted = nullptr;
    const BinaryMask* gaps = nullptr; // optional
};

inline MetricsReport evaluate(const std::vector<EvalTriple>& triples,
                              const EvalOptions& options = {}) {
    MetricsReport report;
    std::vector<std::optional<double>> v_mse, v_gap, v_pd, v_cd;

    for (const auto& tr : triples) {
        if (!tr.truth || !tr.corrupted || !tr.inpainted)
            throw DataError("evaluate: misaligned triple '" + tr.name + "'");
        ImageMetrics im;
        im.name = tr.name;
        im.mse_overall = mse(*tr.inpainted, *tr.truth);
        if (tr.gaps) im.mse_within_gaps = mse_within(*tr.inpainted, *tr.truth, *tr.gaps);

        const BinaryMask* region =
            (options.pixel_diff_within_gaps && tr.gaps) ? tr.gaps : nullptr;
        const auto pd_before =
            static_cast<double>(pixel_diff(*tr.corrupted, *tr.truth, region));
        const auto pd_after =
            static_cast<double>(pixel_diff(*tr.inpainted, *tr.truth, region));
        im.rel_pixel_diff = relative_improvement(pd_before, pd_after);

        im.components_before = connected_components(*tr.corrupted);
        im.components_after = connected_components(*tr.inpainted);
        im.rel_comp_diff = relative_improvement(static_cast<double>(im.components_before),
                                                static_cast<double>(im.components_after));
        if (options.with_traits) {
            im.traits_before = root_traits(*tr.corrupted);
            im.traits_after = root_traits(*tr.inpainted);
        }

        v_mse.push_back(im.mse_overall);
        v_gap.push_back(im.mse_within_gaps);
        v_pd.push_back(im.rel_pixel_diff);
        v_cd.push_back(im.rel_comp_diff);
        report.per_image.push_back(std::move(im));
    }

    report.mse_overall = aggregate(v_mse);
    report.mse_within_gaps = aggregate(v_gap);
    report.rel_pixel_diff = aggregate(v_pd);
    report.rel_comp_diff = aggregate(v_cd);
    return report;
}

} // namespace thinpaint
