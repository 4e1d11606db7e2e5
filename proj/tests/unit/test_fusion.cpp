#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pad/fusion.hpp"

using namespace pad;

namespace {

HeatMap row(std::vector<double> v) {
    const int n = static_cast<int>(v.size());
    return HeatMap(n, 1, std::move(v));
}

BinaryMask subset_of(const BinaryMask& a, const BinaryMask& b) {
    BinaryMask diff(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] && !b[i];
    return diff;
}

}  // namespace

TEST(Normalize, ConstantIsZero) {
    const auto n = normalize_heatmap(HeatMap(3, 3, 4.0));
    for (auto v : n.values()) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, Endpoints) {
    const auto n = normalize_heatmap(row({2, 10, 6}));
    EXPECT_EQ(n[0], 0.0);
    EXPECT_EQ(n[1], 255.0);
    EXPECT_DOUBLE_EQ(n[2], 127.5);
}

TEST(Fuse, Weights) {
    const auto a = row({100, 0});
    const auto b = row({200, 40});
    EXPECT_EQ(fuse(a, b, 1.0), a);
    EXPECT_EQ(fuse(a, b, 0.0), b);
    EXPECT_DOUBLE_EQ(fuse(a, b, 0.5)[0], 150.0);
    EXPECT_THROW(fuse(a, b, 1.5), InvalidArgument);
    EXPECT_THROW(fuse(a, row({1}), 0.5), InvalidArgument);
}

TEST(Threshold, HandCase) { EXPECT_DOUBLE_EQ(adaptive_threshold(row({40, 0, 30, 10, 20}), 0.8), 32.0); }

TEST(Threshold, AllEqual) { EXPECT_EQ(adaptive_threshold(row({7, 7, 7, 7}), 0.8), 7.0); }

TEST(Threshold, ZeroIsMinimum) { EXPECT_EQ(adaptive_threshold(row({5, -3, 9}), 0.0), -3.0); }

TEST(Threshold, SingleValue) { EXPECT_EQ(adaptive_threshold(row({4}), 0.999), 4.0); }

TEST(Threshold, RejectsBadQuantile) {
    EXPECT_THROW(adaptive_threshold(row({1, 2}), 1.0), InvalidArgument);
    EXPECT_THROW(adaptive_threshold(row({1, 2}), -0.1), InvalidArgument);
    EXPECT_THROW(adaptive_threshold(std::span<const double>{}, 0.5), InvalidArgument);
}

TEST(Threshold, MatchesOracle) {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> size(1, 500);
    std::uniform_real_distribution<double> u(-50.0, 300.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> v(static_cast<std::size_t>(size(rng)));
        for (auto& x : v) x = u(rng);
        for (double p : {0.0, 0.5, 0.8, 0.999}) EXPECT_EQ(adaptive_threshold(v, p), oracle::quantile(v, p));
    }
}

TEST(Binarize, Boundaries) {
    const auto h = row({1, 2, 3});
    EXPECT_EQ(count_set(binarize(h, 1.0)), 3u);
    EXPECT_EQ(count_set(binarize(h, 3.5)), 0u);
    const auto m = binarize(h, 2.0);
    EXPECT_EQ(m[0], 0);
    EXPECT_EQ(m[1], 1);
    EXPECT_EQ(m[2], 1);
}

TEST(Morphology, OpenRemovesSingleton) {
    BinaryMask m(7, 7);
    m.at(3, 3) = 1;
    EXPECT_EQ(count_set(morph_open(m, {3})), 0u);
}

TEST(Morphology, OpenKeepsFullMask) {
    const BinaryMask m(10, 10, 1);
    EXPECT_EQ(morph_open(m, {3}), m);
}

TEST(Morphology, CloseFillsOnePixelGap) {
    BinaryMask m(9, 5);
    for (int y = 1; y < 4; ++y) {
        for (int x = 1; x < 4; ++x) m.at(x, y) = 1;
        for (int x = 5; x < 8; ++x) m.at(x, y) = 1;
    }
    const auto c = morph_close(m, {3});
    for (int y = 1; y < 4; ++y) EXPECT_EQ(c.at(4, y), 1) << y;
    EXPECT_EQ(c, oracle::close(m, 3));
}

TEST(Morphology, MatchesOracleAndLaws) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 40; ++t) {
        const auto m = oracle::random_mask(rng, 19 + t % 5, 17, 0.3 + 0.01 * t);
        for (int side : {1, 2, 3, 4, 5, 8}) {
            const auto e = erode(m, {side});
            const auto d = dilate(m, {side});
            ASSERT_EQ(e, oracle::erode(m, side)) << "erode side " << side;
            ASSERT_EQ(d, oracle::dilate(m, side)) << "dilate side " << side;
            const auto o = morph_open(m, {side});
            const auto c = morph_close(m, {side});
            EXPECT_EQ(morph_open(o, {side}), o);
            EXPECT_EQ(morph_close(c, {side}), c);
            EXPECT_EQ(count_set(subset_of(o, m)), 0u);
            EXPECT_EQ(count_set(subset_of(m, c)), 0u);
        }
    }
}

TEST(Morphology, SideMustBePositive) { EXPECT_THROW(erode(BinaryMask(3, 3), {0}), InvalidArgument); }

TEST(KernelSides, DerivedFromDelta) {
    EXPECT_EQ(base_kernel_side(512, 400, 80), 5);
    EXPECT_EQ(base_kernel_side(60, 60, 80), 1);
    const auto s = morphology_sides(FusionConfig{}, 640, 480);
    EXPECT_EQ(s.open1, 12);
    EXPECT_EQ(s.close, 6);
    EXPECT_EQ(s.open2, 18);
}

TEST(Localize, ConstantMapsKeepEverything) {
    const auto hp = localize(HeatMap(50, 40, 1.0), HeatMap(50, 40, 3.0), FusionConfig{});
    EXPECT_EQ(count_set(hp), hp.size());
}

TEST(Localize, ScatteredActivationsAreErased) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 10; ++t) {
        // Spatially uncorrelated responses: the top 20% is pure scatter.
        HeatMap mi(320, 240);
        HeatMap cd(320, 240);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : mi.values()) v = u(rng);
        for (auto& v : cd.values()) v = u(rng);
        const auto hp = localize(mi, cd, FusionConfig{});
        EXPECT_LE(static_cast<double>(count_set(hp)) / hp.size(), 0.005);
    }
}

TEST(Localize, BlockStandsOut) {
    HeatMap mi(200, 160, 1.0);
    HeatMap cd(200, 160, 0.0);
    for (int y = 40; y < 120; ++y) {
        for (int x = 50; x < 150; ++x) {
            mi.at(x, y) = 0.0;
            cd.at(x, y) = 5.0;
        }
    }
    const auto hp = localize(mi, cd, FusionConfig{});
    EXPECT_EQ(hp, rect_mask(200, 160, {50, 40, 100, 80}));
}
