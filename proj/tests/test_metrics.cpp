#include <gtest/gtest.h>

#include <deque>

#include "thinpaint/core/rng.hpp"
#include "thinpaint/metrics/metrics.hpp"

using namespace thinpaint;

namespace {

// Independent component counter: breadth-first flood fill with an explicit queue.
int bfs_components(const BinaryMask& m, Connectivity conn) {
    std::vector<char> seen(m.size(), 0);
    int count = 0;
    for (int sr = 0; sr < m.height(); ++sr) {
        for (int sc = 0; sc < m.width(); ++sc) {
            const std::size_t sidx = static_cast<std::size_t>(sr) * m.width() + sc;
            if (!m.at(sr, sc) || seen[sidx]) continue;
            ++count;
            std::deque<std::pair<int, int>> queue{{sr, sc}};
            seen[sidx] = 1;
            while (!queue.empty()) {
                auto [r, c] = queue.front();
                queue.pop_front();
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (!dr && !dc) continue;
                        if (conn == Connectivity::four && dr != 0 && dc != 0) continue;
                        const int nr = r + dr, nc = c + dc;
                        if (!m.in_bounds(nr, nc) || !m.at(nr, nc)) continue;
                        const std::size_t nidx =
                            static_cast<std::size_t>(nr) * m.width() + nc;
                        if (!seen[nidx]) {
                            seen[nidx] = 1;
                            queue.emplace_back(nr, nc);
                        }
                    }
                }
            }
        }
    }
    return count;
}

// Independent hull area: Jarvis gift wrapping, then shoelace.
double jarvis_hull_area(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return 0.0;

    std::size_t start = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (pts[i] < pts[start]) start = i;

    std::vector<Point2> hull;
    std::size_t cur = start;
    do {
        hull.push_back(pts[cur]);
        std::size_t next = (cur + 1) % n;
        for (std::size_t cand = 0; cand < n; ++cand) {
            if (cand == cur) continue;
            const double cr = cross(pts[cur], pts[next], pts[cand]);
            if (cr < 0) {
                next = cand;
            } else if (cr == 0) {
                const double dn = std::hypot(pts[next].x - pts[cur].x, pts[next].y - pts[cur].y);
                const double dc = std::hypot(pts[cand].x - pts[cur].x, pts[cand].y - pts[cur].y);
                if (dc > dn) next = cand;
            }
        }
        cur = next;
        if (hull.size() > n) break; // safety against degenerate loops
    } while (cur != start);

    double acc = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Point2& a = hull[i];
        const Point2& b = hull[(i + 1) % hull.size()];
        acc += a.x * b.y - b.x * a.y;
    }
    return std::abs(acc) / 2.0;
}

BinaryMask from_rows(const std::vector<std::vector<int>>& rows) {
    BinaryMask m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < m.height(); ++r)
        for (int c = 0; c < m.width(); ++c) m(r, c) = static_cast<std::uint8_t>(rows[r][c]);
    return m;
}

BinaryMask random_mask(int h, int w, double density, Rng& rng) {
    BinaryMask m(h, w);
    for (auto& p : m.pixels()) p = static_cast<std::uint8_t>(rng.uniform() < density);
    return m;
}

} // namespace

TEST(Mse, IdenticalMasksGiveZero) {
    BinaryMask a = from_rows({{1, 0}, {0, 1}});
    EXPECT_EQ(mse(a, a), 0.0);
}

TEST(Mse, ComplementaryMasksGiveOne) {
    BinaryMask a = from_rows({{1, 0}, {0, 1}});
    BinaryMask b = from_rows({{0, 1}, {1, 0}});
    EXPECT_EQ(mse(a, b), 1.0);
}

TEST(Mse, QuarterDifference) {
    BinaryMask a = from_rows({{1, 0}, {0, 1}});
    BinaryMask b = from_rows({{1, 0}, {0, 0}});
    EXPECT_EQ(mse(a, b), 0.25);
}

TEST(Mse, ShapeMismatchThrows) {
    EXPECT_THROW(mse(BinaryMask(2, 2), BinaryMask(2, 3)), DataError);
}

TEST(Mse, EqualsPixelDiffOverArea) {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const int h = 1 + static_cast<int>(rng.uniform_int(20));
        const int w = 1 + static_cast<int>(rng.uniform_int(20));
        BinaryMask a = random_mask(h, w, 0.4, rng);
        BinaryMask b = random_mask(h, w, 0.4, rng);
        EXPECT_DOUBLE_EQ(mse(a, b),
                         static_cast<double>(pixel_diff(a, b)) / (static_cast<double>(h) * w));
    }
}

TEST(MseWithinGaps, MatchOnRegionGivesZero) {
    BinaryMask a = from_rows({{1, 1}, {0, 0}});
    BinaryMask b = from_rows({{1, 1}, {1, 1}});
    BinaryMask region = from_rows({{1, 1}, {0, 0}});
    EXPECT_EQ(mse_within(a, b, region).value(), 0.0);
}

TEST(MseWithinGaps, AllRegionPixelsDifferGivesOne) {
    BinaryMask a = from_rows({{1, 1}, {0, 0}});
    BinaryMask b = from_rows({{0, 0}, {0, 0}});
    BinaryMask region = from_rows({{1, 1}, {0, 0}});
    EXPECT_EQ(mse_within(a, b, region).value(), 1.0);
}

TEST(MseWithinGaps, FiveRegionPixelsTwoDiffer) {
    BinaryMask a = from_rows({{1, 1, 1}, {1, 1, 0}});
    BinaryMask b = from_rows({{0, 0, 1}, {1, 1, 0}});
    BinaryMask region = from_rows({{1, 1, 1}, {1, 1, 0}});
    EXPECT_DOUBLE_EQ(mse_within(a, b, region).value(), 0.4);
}

TEST(MseWithinGaps, EmptyRegionIsAbsent) {
    BinaryMask a(3, 3), b(3, 3), region(3, 3);
    EXPECT_FALSE(mse_within(a, b, region).has_value());
}

TEST(ConnectedComponents, EmptyMaskGivesZero) {
    EXPECT_EQ(connected_components(BinaryMask(4, 4)), 0);
}

TEST(ConnectedComponents, DiagonalPairDependsOnConnectivity) {
    BinaryMask m = from_rows({{1, 0}, {0, 1}});
    EXPECT_EQ(connected_components(m, Connectivity::eight), 1);
    EXPECT_EQ(connected_components(m, Connectivity::four), 2);
}

TEST(ConnectedComponents, MatchesBfsOracleOnRandomGrids) {
    Rng rng(123);
    for (int trial = 0; trial < 1000; ++trial) {
        BinaryMask m = random_mask(16, 16, 0.2 + 0.6 * rng.uniform(), rng);
        EXPECT_EQ(connected_components(m, Connectivity::eight),
                  bfs_components(m, Connectivity::eight));
        EXPECT_EQ(connected_components(m, Connectivity::four),
                  bfs_components(m, Connectivity::four));
    }
}

TEST(RelativeImprovement, BasicValues) {
    EXPECT_DOUBLE_EQ(relative_improvement(4.0, 1.0).value(), 0.75);
    EXPECT_DOUBLE_EQ(relative_improvement(7.0, 7.0).value(), 0.0);
    EXPECT_DOUBLE_EQ(relative_improvement(0.0, 0.0).value(), 0.0);
    EXPECT_FALSE(relative_improvement(0.0, 3.0).has_value());
}

TEST(RelativeImprovement, IdentityIsZeroForPositiveValues) {
    for (double x : {0.25, 1.0, 13.0, 1e6}) EXPECT_EQ(relative_improvement(x, x).value(), 0.0);
}

TEST(PixelDiff, BasicValues) {
    BinaryMask a = from_rows({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
    BinaryMask b = from_rows({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
    EXPECT_EQ(pixel_diff(a, a), 0u);
    EXPECT_EQ(pixel_diff(a, b), 9u);
    BinaryMask region = from_rows({{1, 1, 0}, {1, 1, 0}, {0, 0, 0}});
    BinaryMask c = from_rows({{0, 1, 1}, {1, 1, 1}, {1, 1, 1}});
    EXPECT_EQ(pixel_diff(a, c, &region), 1u);
}

TEST(ConvexHull, FrameCornersGiveNineByNineSquare) {
    // 10x10 frame: hull corners are (0,0), (0,9), (9,0), (9,9).
    BinaryMask frame(10, 10);
    for (int i = 0; i < 10; ++i) {
        frame(0, i) = frame(9, i) = 1;
        frame(i, 0) = frame(i, 9) = 1;
    }
    std::vector<Point2> pts;
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c)
            if (frame.at(r, c)) pts.push_back({static_cast<double>(c), static_cast<double>(r)});
    EXPECT_DOUBLE_EQ(convex_hull_area(pts), 81.0);
}

TEST(ConvexHull, MatchesBruteForceOracleOnRandomPointSets) {
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 3 + static_cast<int>(rng.uniform_int(10));
        std::vector<Point2> pts;
        for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});
        EXPECT_NEAR(convex_hull_area(pts), jarvis_hull_area(pts), 1e-9);
    }
}

TEST(ConvexHull, IntegerGridPointsMatchOracle) {
    Rng rng(1234);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 3 + static_cast<int>(rng.uniform_int(10));
        std::vector<Point2> pts;
        for (int i = 0; i < n; ++i)
            pts.push_back({static_cast<double>(rng.uniform_int(6)),
                           static_cast<double>(rng.uniform_int(6))});
        EXPECT_NEAR(convex_hull_area(pts), jarvis_hull_area(pts), 1e-9);
    }
}

TEST(ConvexHull, InvariantUnderPointDuplication) {
    std::vector<Point2> pts{{0, 0}, {4, 0}, {4, 3}, {0, 3}, {2, 1}};
    const double base = convex_hull_area(pts);
    std::vector<Point2> dup = pts;
    dup.insert(dup.end(), pts.begin(), pts.end());
    dup.push_back(pts[0]);
    EXPECT_DOUBLE_EQ(convex_hull_area(dup), base);
    EXPECT_DOUBLE_EQ(base, 12.0);
}

TEST(RootTraits, HorizontalLine) {
    BinaryMask m(3, 12);
    for (int c = 1; c <= 10; ++c) m(1, c) = 1;
    const TraitSet t = root_traits(m);
    EXPECT_DOUBLE_EQ(t.length, 9.0);
    EXPECT_EQ(t.tips, 2);
    EXPECT_DOUBLE_EQ(t.hull_area, 0.0);
}

TEST(RootTraits, DiagonalLine) {
    BinaryMask m(7, 7);
    for (int i = 1; i <= 5; ++i) m(i, i) = 1;
    const TraitSet t = root_traits(m);
    EXPECT_NEAR(t.length, 4.0 * std::sqrt(2.0), 1e-12);
    EXPECT_EQ(t.tips, 2);
}

TEST(RootTraits, EmptyMaskIsAllZeros) {
    const TraitSet t = root_traits(BinaryMask(5, 5));
    EXPECT_EQ(t.length, 0.0);
    EXPECT_EQ(t.tips, 0);
    EXPECT_EQ(t.hull_area, 0.0);
}

TEST(RootTraits, InvariantUnderTranslationAndRotation) {
    Rng rng(42);
    BinaryMask m(16, 16);
    // A little L-shaped structure away from borders.
    for (int r = 3; r <= 10; ++r) m(r, 4) = 1;
    for (int c = 4; c <= 9; ++c) m(10, c) = 1;

    BinaryMask shifted(20, 20);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c)
            if (m.at(r, c)) shifted(r + 3, c + 2) = 1;

    const TraitSet t0 = root_traits(m);
    const TraitSet t1 = root_traits(shifted);
    EXPECT_DOUBLE_EQ(t0.length, t1.length);
    EXPECT_EQ(t0.tips, t1.tips);
    EXPECT_DOUBLE_EQ(t0.hull_area, t1.hull_area);

    // Exact quarter-turn: traits unchanged.
    BinaryMask rot(16, 16);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c)
            if (m.at(r, c)) rot(c, 15 - r) = 1;
    const TraitSet t2 = root_traits(rot);
    EXPECT_DOUBLE_EQ(t0.length, t2.length);
    EXPECT_EQ(t0.tips, t2.tips);
    EXPECT_DOUBLE_EQ(t0.hull_area, t2.hull_area);
}

TEST(Evaluate, PerfectInpaintingGivesZeroMse) {
    Rng rng(5);
    BinaryMask truth = random_mask(12, 12, 0.3, rng);
    BinaryMask gaps(12, 12);
    for (int c = 0; c < 12; ++c) gaps(5, c) = 1;
    BinaryMask corrupted = mask_and_not(truth, gaps);

    std::vector<EvalTriple> triples{{"a", &truth, &corrupted, &truth, &gaps}};
    const MetricsReport rep = evaluate(triples);
    EXPECT_EQ(rep.per_image.size(), 1u);
    EXPECT_EQ(rep.mse_overall.mean.value(), 0.0);
    EXPECT_EQ(rep.mse_overall.stddev.value(), 0.0); // single image: std 0 by convention
    const auto expected = relative_improvement(
        static_cast<double>(connected_components(corrupted)),
        static_cast<double>(connected_components(truth)));
    EXPECT_EQ(rep.per_image[0].rel_comp_diff.has_value(), expected.has_value());
    if (expected) EXPECT_DOUBLE_EQ(rep.per_image[0].rel_comp_diff.value(), expected.value());
}

TEST(Evaluate, MeansEqualHandAveragedValues) {
    Rng rng(6);
    std::vector<BinaryMask> truths, corrupteds, inpainteds, gapss;
    for (int i = 0; i < 3; ++i) {
        truths.push_back(random_mask(10, 10, 0.35, rng));
        BinaryMask g(10, 10);
        for (int c = 2; c < 8; ++c) g(4 + i % 2, c) = 1;
        gapss.push_back(g);
        corrupteds.push_back(mask_and_not(truths.back(), g));
        inpainteds.push_back(random_mask(10, 10, 0.35, rng));
    }
    std::vector<EvalTriple> triples;
    for (int i = 0; i < 3; ++i)
        triples.push_back({"img" + std::to_string(i), &truths[i], &corrupteds[i],
                           &inpainteds[i], &gapss[i]});
    const MetricsReport rep = evaluate(triples);

    double hand_mean = 0.0;
    for (int i = 0; i < 3; ++i) hand_mean += mse(inpainteds[i], truths[i]);
    hand_mean /= 3.0;
    EXPECT_NEAR(rep.mse_overall.mean.value(), hand_mean, 1e-15);

    double ss = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = mse(inpainteds[i], truths[i]) - hand_mean;
        ss += d * d;
    }
    EXPECT_NEAR(rep.mse_overall.stddev.value(), std::sqrt(ss / 2.0), 1e-15);
}

TEST(Evaluate, AbsentMetricsAreExcludedWithCount) {
    BinaryMask truth = from_rows({{1, 1}, {1, 1}});
    BinaryMask corrupted = truth;
    BinaryMask inpainted = truth;
    // No gap mask on the second triple: mse_within_gaps absent there.
    BinaryMask gaps = from_rows({{1, 0}, {0, 0}});
    std::vector<EvalTriple> triples{{"a", &truth, &corrupted, &inpainted, &gaps},
                                    {"b", &truth, &corrupted, &inpainted, nullptr}};
    const MetricsReport rep = evaluate(triples);
    EXPECT_EQ(rep.mse_within_gaps.excluded, 1);
    EXPECT_EQ(rep.mse_within_gaps.mean.value(), 0.0);
}
