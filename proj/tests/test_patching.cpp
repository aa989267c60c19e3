#include <gtest/gtest.h>

#include "thinpaint/patch/patching.hpp"

using namespace thinpaint;

namespace {

BinaryMask random_mask(int h, int w, double density, Rng& rng) {
    BinaryMask m(h, w);
    for (auto& p : m.pixels()) p = static_cast<std::uint8_t>(rng.uniform() < density);
    return m;
}

} // namespace

TEST(Layout, ExactTiling) {
    const PatchLayout l = make_layout(512, 512, 256);
    EXPECT_EQ(l.rows, 2);
    EXPECT_EQ(l.cols, 2);
    EXPECT_EQ(l.padded_h, 512);
    EXPECT_EQ(l.count(), 4);
}

TEST(Layout, PaddingToNextMultiple) {
    const PatchLayout l = make_layout(300, 300, 256);
    EXPECT_EQ(l.padded_h, 512);
    EXPECT_EQ(l.padded_w, 512);
    EXPECT_EQ(l.count(), 4);
}

TEST(Layout, OriginsAreRowMajor) {
    const PatchLayout l = make_layout(100, 150, 50);
    EXPECT_EQ(l.origin(0), (std::pair{0, 0}));
    EXPECT_EQ(l.origin(1), (std::pair{0, 50}));
    EXPECT_EQ(l.origin(3), (std::pair{50, 0}));
    EXPECT_THROW(l.origin(6), DataError);
}

TEST(ExtractPatches, PaddedPixelsAreZero) {
    Rng rng(3);
    const BinaryMask m = random_mask(300, 300, 1.0, rng); // all ones
    auto [patches, layout] = extract_patches(m, 256);
    ASSERT_EQ(patches.size(), 4u);
    // Patch 3 covers rows/cols 256..511; only 256..299 is real data.
    const BinaryMask& p3 = patches[3];
    EXPECT_EQ(p3.at(0, 0), 1);
    EXPECT_EQ(p3.at(44, 44), 0); // (300,300) in parent: padding
    EXPECT_EQ(p3.at(200, 200), 0);
}

TEST(ExtractPatches, SinglePatchIdentity) {
    Rng rng(4);
    const BinaryMask m = random_mask(256, 256, 0.5, rng);
    auto [patches, layout] = extract_patches(m, 256);
    ASSERT_EQ(patches.size(), 1u);
    EXPECT_EQ(patches[0], m);
}

TEST(RecomposeExtract, RoundTripOnRandomSizes) {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const int h = 1 + static_cast<int>(rng.uniform_int(700));
        const int w = 1 + static_cast<int>(rng.uniform_int(700));
        const int patch = 1 + static_cast<int>(rng.uniform_int(128));
        const BinaryMask m = random_mask(h, w, 0.5, rng);
        auto [patches, layout] = extract_patches(m, patch);
        EXPECT_EQ(recompose(patches, layout), m);
    }
}

TEST(Recompose, AllOnesPatchesCropPadding) {
    auto layout = make_layout(300, 300, 256);
    std::vector<BinaryMask> patches(4, BinaryMask(256, 256, 1));
    const BinaryMask out = recompose(patches, layout);
    EXPECT_EQ(out.height(), 300);
    EXPECT_EQ(out.width(), 300);
    EXPECT_EQ(out.count_foreground(), 300u * 300u);
}

TEST(Recompose, CountMismatchThrows) {
    auto layout = make_layout(512, 512, 256);
    std::vector<BinaryMask> patches(3, BinaryMask(256, 256));
    EXPECT_THROW(recompose(patches, layout), DataError);
}

TEST(PartialRecompose, EmptyIndicesLeaveBaseUnchanged) {
    Rng rng(6);
    const BinaryMask base = random_mask(300, 300, 0.5, rng);
    auto layout = make_layout(300, 300, 256);
    EXPECT_EQ(partial_recompose(base, {}, {}, layout), base);
}

TEST(PartialRecompose, ReplacingPatchZeroOnlyTouchesItsRectangle) {
    Rng rng(7);
    const BinaryMask base = random_mask(512, 512, 0.5, rng);
    auto layout = make_layout(512, 512, 256);
    const BinaryMask repl(256, 256, 1);
    const BinaryMask out = partial_recompose(base, {repl}, {0}, layout);
    for (int r = 0; r < 512; ++r)
        for (int c = 0; c < 512; ++c) {
            if (r < 256 && c < 256)
                EXPECT_EQ(out.at(r, c), 1);
            else
                EXPECT_EQ(out.at(r, c), base.at(r, c));
        }
}

TEST(PartialRecompose, OneIndexChangesExactlyOneRectangle) {
    Rng rng(8);
    const BinaryMask base(512, 512, 0);
    auto layout = make_layout(512, 512, 256);
    const BinaryMask repl(256, 256, 1);
    const BinaryMask out = partial_recompose(base, {repl}, {2}, layout);
    std::size_t diff = 0;
    for (int r = 0; r < 512; ++r)
        for (int c = 0; c < 512; ++c) diff += out.at(r, c) != base.at(r, c);
    EXPECT_EQ(diff, 256u * 256u);
}

TEST(PartialRecompose, AllIndicesEqualsFullRecompose) {
    Rng rng(9);
    const BinaryMask base = random_mask(300, 300, 0.5, rng);
    auto [patches, layout] = extract_patches(random_mask(300, 300, 0.5, rng), 128);
    std::vector<int> indices(layout.count());
    for (int i = 0; i < layout.count(); ++i) indices[i] = i;
    EXPECT_EQ(partial_recompose(base, patches, indices, layout), recompose(patches, layout));
}

TEST(PartialRecompose, BadIndexThrows) {
    auto layout = make_layout(256, 256, 256);
    EXPECT_THROW(partial_recompose(BinaryMask(256, 256), {BinaryMask(256, 256)}, {5}, layout),
                 DataError);
}

TEST(BernoulliBinarize, AllOnesAndAllZeros) {
    Rng rng(10);
    ProbMap ones(8, 8, 1.0);
    EXPECT_EQ(bernoulli_binarize(ones, rng).count_foreground(), 64u);
    ProbMap zeros(8, 8, 0.0);
    EXPECT_EQ(bernoulli_binarize(zeros, rng).count_foreground(), 0u);
}

TEST(BernoulliBinarize, HalfProbabilityWithinFourSigma) {
    Rng rng(11);
    ProbMap half(100, 100, 0.5);
    const BinaryMask draw = bernoulli_binarize(half, rng);
    const double fg = static_cast<double>(draw.count_foreground());
    EXPECT_NEAR(fg, 5000.0, 200.0); // 4 * sqrt(1e4 * 0.25)
}

TEST(BernoulliBinarize, MeanOverSeededDrawsConvergesToProb) {
    Rng master(12);
    ProbMap p(16, 16);
    for (auto& v : p.fg()) v = master.uniform();
    const int k = 4000;
    std::vector<double> acc(p.size(), 0.0);
    for (int i = 0; i < k; ++i) {
        Rng rng = Rng::stream(99, i);
        const BinaryMask d = bernoulli_binarize(p, rng);
        for (std::size_t j = 0; j < d.size(); ++j) acc[j] += d.pixels()[j];
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double mean = acc[j] / k;
        const double sigma = std::sqrt(p.fg()[j] * (1 - p.fg()[j]) / k);
        EXPECT_NEAR(mean, p.fg()[j], 4.0 * sigma + 1e-9);
    }
}

TEST(BernoulliBinarize, OutOfRangeProbabilityThrows) {
    Rng rng(13);
    ProbMap p(2, 2, 0.5);
    p(0, 0) = 1.5;
    EXPECT_THROW(bernoulli_binarize(p, rng), NumericError);
}

TEST(ThresholdBinarize, TieGoesToForeground) {
    ProbMap p(1, 3);
    p(0, 0) = 0.5;
    p(0, 1) = 0.49;
    p(0, 2) = 0.51;
    const BinaryMask m = threshold_binarize(p, 0.5);
    EXPECT_EQ(m.at(0, 0), 1);
    EXPECT_EQ(m.at(0, 1), 0);
    EXPECT_EQ(m.at(0, 2), 1);
}

TEST(ThresholdBinarize, AllBelowGivesAllZeros) {
    ProbMap p(4, 4, 0.49);
    EXPECT_EQ(threshold_binarize(p).count_foreground(), 0u);
}

TEST(ThresholdBinarize, MatchesTwoChannelArgmax) {
    // With channels (1-p, p), argmax with foreground winning ties equals p >= 0.5.
    Rng rng(14);
    ProbMap p(10, 10);
    for (auto& v : p.fg()) v = rng.uniform();
    p(0, 0) = 0.5;
    const BinaryMask m = threshold_binarize(p, 0.5);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) {
            const double fg = p.at(r, c), bg = 1.0 - fg;
            EXPECT_EQ(m.at(r, c), fg >= bg ? 1 : 0);
        }
}

TEST(ThresholdBinarize, RejectsDegenerateThreshold) {
    ProbMap p(2, 2, 0.5);
    EXPECT_THROW(threshold_binarize(p, 0.0), DataError);
    EXPECT_THROW(threshold_binarize(p, 1.0), DataError);
}
