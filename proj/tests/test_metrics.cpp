#include <gtest/gtest.h>

#include <cmath>

#include "hemogen/fixtures.hpp"
#include "hemogen/metrics.hpp"
#include "support.hpp"

using namespace hemogen;
using hemogen::testing::ascii_bitmap;
using hemogen::testing::ascii_mask;

namespace {
FloatImage disc_image(int w, int h, std::vector<std::array<double, 3>> discs) {
    FloatImage img(w, h, 0.0f);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (const auto& d : discs)
                if (std::hypot(x - d[0], y - d[1]) <= d[2]) img(x, y) = 1.0f;
    return img;
}
}  // namespace

TEST(Dice, IdenticalDisjointAndHalfOverlap) {
    const BinaryGrid a = ascii_bitmap({"xx..", "xx.."});
    EXPECT_DOUBLE_EQ(dice(a, a), 1.0);
    EXPECT_DOUBLE_EQ(dice(a, ascii_bitmap({"..xx", "..xx"})), 0.0);
    // |a| = 4, |b| = 4, overlap 2
    EXPECT_DOUBLE_EQ(dice(a, ascii_bitmap({".xx.", ".xx."})), 0.5);
    EXPECT_DOUBLE_EQ(dice(ascii_bitmap({"xx."}), ascii_bitmap({".xx"})), 0.5);
    const BinaryGrid b = ascii_bitmap({"x...", "xxx."});
    EXPECT_DOUBLE_EQ(dice(a, b), dice(b, a));
    EXPECT_DOUBLE_EQ(dice(a, b), 2.0 * 3 / 8);
}

TEST(Dice, EmptyMasksAndShapeMismatch) {
    EXPECT_DOUBLE_EQ(dice(BinaryGrid(3, 3, 0), BinaryGrid(3, 3, 0)), 1.0);
    EXPECT_DOUBLE_EQ(dice(BinaryGrid(3, 3, 0), BinaryGrid(3, 3, 1)), 0.0);
    EXPECT_THROW(dice(BinaryGrid(3, 3, 0), BinaryGrid(3, 4, 0)), ValidationError);
}

TEST(ExtractInstances, TwoSeparateDiscs) {
    const FloatImage obj = disc_image(80, 40, {{20, 20, 10}, {60, 20, 10}});
    const auto r = extract_instances(obj, FloatImage(80, 40, 0.0f));
    ASSERT_EQ(r.components.size(), 2u);
    EXPECT_EQ(r.labels(20, 20), 1);
    EXPECT_EQ(r.labels(60, 20), 2);
    EXPECT_EQ(r.labels(40, 20), 0);
}

TEST(ExtractInstances, ContourRingSplitsTouchingDiscs) {
    // discs touch at x = 30; a ring on each boundary separates them
    const FloatImage obj = disc_image(60, 40, {{20, 20, 10}, {40, 20, 10}});
    FloatImage contour(60, 40, 0.0f);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 60; ++x) {
            const double d1 = std::hypot(x - 20, y - 20), d2 = std::hypot(x - 40, y - 20);
            if ((d1 <= 10 && d1 > 8) || (d2 <= 10 && d2 > 8)) contour(x, y) = 1.0f;
        }
    EXPECT_EQ(extract_instances(obj, FloatImage(60, 40, 0.0f)).components.size(), 1u);
    const auto r = extract_instances(obj, contour);
    ASSERT_EQ(r.components.size(), 2u);
    EXPECT_NE(r.labels(20, 20), r.labels(40, 20));
    // regrowth reclaims most of the ring but never merges the two
    for (const auto& c : r.components) EXPECT_GT(c.area, 250);
}

TEST(ExtractInstances, SmallBlobsDroppedAndEmptyInput) {
    const FloatImage obj = disc_image(50, 30, {{10, 10, 6}, {40, 20, 2}});
    const auto r = extract_instances(obj, FloatImage(50, 30, 0.0f));
    ASSERT_EQ(r.components.size(), 1u);
    EXPECT_EQ(r.labels(40, 20), 0);
    const auto none = extract_instances(FloatImage(20, 20, 0.0f), FloatImage(20, 20, 0.0f));
    EXPECT_TRUE(none.components.empty());
    for (auto v : none.labels.values()) EXPECT_EQ(v, 0);
    EXPECT_THROW(extract_instances(FloatImage(2, 2, 0.0f), FloatImage(3, 2, 0.0f)), ValidationError);
}

TEST(ExtractInstances, RecoversCellsFromGroundTruthMaps) {
    const InstanceMask m = fixtures::annotated_mask(300, 200, 25, 4, PlacementStrategy::adhesion);
    const auto cells = extract_cells(m);
    const auto maps = instance_maps(m, 2);
    const auto r = extract_instances(maps.objectness, maps.contour, {0.5, 0.5, 50, 2});
    long long big = 0;
    for (const auto& c : cells) big += c.area >= 50;
    EXPECT_NEAR(double(r.components.size()), double(big), 0.02 * big + 0.5);
}

TEST(InstanceMaps, ContourBandWidth) {
    const InstanceMask m = ascii_mask({
        ".......",
        ".aaaaa.",
        ".aaaaa.",
        ".aaaaa.",
        ".aaaaa.",
        ".aaaaa.",
        ".......",
    });
    const auto one = instance_maps(m, 1);
    EXPECT_EQ(one.contour(1, 1), 1.0f);
    EXPECT_EQ(one.contour(2, 2), 0.0f);
    EXPECT_EQ(one.contour(0, 0), 0.0f);
    EXPECT_EQ(one.objectness(3, 3), 1.0f);
    const auto two = instance_maps(m, 2);
    EXPECT_EQ(two.contour(2, 2), 1.0f);
    EXPECT_EQ(two.contour(3, 3), 0.0f);
}

TEST(InstanceMaps, AdjacentCellsShareBoundary) {
    const InstanceMask m = ascii_mask({
        "aaabbb",
        "aaabbb",
    });
    const auto maps = instance_maps(m, 1);
    EXPECT_EQ(maps.contour(2, 0), 1.0f);
    EXPECT_EQ(maps.contour(3, 1), 1.0f);
    EXPECT_EQ(maps.contour(0, 0), 0.0f);  // image border is not a boundary
}

TEST(AveragePrecision, PerfectAndEmpty) {
    const std::vector<BoxF> gt{{0, 0, 10, 10}, {20, 20, 10, 10}, {40, 0, 5, 5}};
    std::vector<Detection> det;
    for (const auto& g : gt) det.push_back({g, 0.9});
    EXPECT_DOUBLE_EQ(match_and_ap(det, gt).ap, 1.0);
    EXPECT_DOUBLE_EQ(match_and_ap({}, gt).ap, 0.0);
    EXPECT_EQ(match_and_ap({}, gt).false_negatives, 3);
    EXPECT_DOUBLE_EQ(match_and_ap({}, {}).ap, 1.0);
    EXPECT_DOUBLE_EQ(match_and_ap(det, {}).ap, 0.0);
}

TEST(AveragePrecision, FalsePositiveRankedBelowTruePositive) {
    const std::vector<BoxF> gt{{0, 0, 10, 10}};
    const std::vector<Detection> det{{{0, 0, 10, 10}, 0.9}, {{50, 50, 10, 10}, 0.8}};
    const ApResult r = match_and_ap(det, gt);
    EXPECT_DOUBLE_EQ(r.ap, 1.0);
    EXPECT_EQ(r.true_positives, 1);
    EXPECT_EQ(r.false_positives, 1);
    EXPECT_DOUBLE_EQ(r.precision, 0.5);
    // the other way round halves it
    const std::vector<Detection> swapped{{{0, 0, 10, 10}, 0.7}, {{50, 50, 10, 10}, 0.8}};
    EXPECT_DOUBLE_EQ(match_and_ap(swapped, gt).ap, 0.5);
}

TEST(AveragePrecision, IouThresholdAndSingleMatchPerTruth) {
    const std::vector<BoxF> gt{{0, 0, 10, 10}};
    // IoU of a 10x10 box shifted by 5 px: 50 / 150
    EXPECT_NEAR(iou({0, 0, 10, 10}, {5, 0, 10, 10}), 1.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(match_and_ap(std::vector<Detection>{{{5, 0, 10, 10}, 1}}, gt).ap, 0.0);
    EXPECT_DOUBLE_EQ(match_and_ap(std::vector<Detection>{{{5, 0, 10, 10}, 1}}, gt, 0.3).ap, 1.0);
    const std::vector<Detection> dup{{{0, 0, 10, 10}, 0.9}, {{0, 0, 10, 10}, 0.8}};
    const ApResult r = match_and_ap(dup, gt);
    EXPECT_EQ(r.true_positives, 1);
    EXPECT_EQ(r.false_positives, 1);
}

TEST(AveragePrecision, ElevenPointInterpolation) {
    const std::vector<BoxF> gt{{0, 0, 10, 10}, {20, 0, 10, 10}};
    const std::vector<Detection> det{{{0, 0, 10, 10}, 0.9}, {{90, 90, 5, 5}, 0.8}, {{20, 0, 10, 10}, 0.7}};
    // curve: (0.5, 1), (0.5, 0.5), (1, 2/3)
    EXPECT_NEAR(match_and_ap(det, gt).ap, 0.5 * 1 + 0.5 * (2.0 / 3.0), 1e-12);
    EXPECT_NEAR(match_and_ap(det, gt, 0.5, ApInterpolation::eleven_point).ap, (6 * 1.0 + 5 * (2.0 / 3.0)) / 11, 1e-12);
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreTransformAndBounded) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<BoxF> gt;
        std::vector<Detection> det;
        for (int i = 0; i < 8; ++i) gt.push_back({rng.uniform(0, 100), rng.uniform(0, 100), 10, 10});
        for (int i = 0; i < 10; ++i) {
            const BoxF& g = gt[rng.below(gt.size())];
            det.push_back({{g.x + rng.uniform(-4, 4), g.y + rng.uniform(-4, 4), 10, 10}, rng.uniform()});
        }
        const double ap = match_and_ap(det, gt).ap;
        EXPECT_GE(ap, 0.0);
        EXPECT_LE(ap, 1.0);
        auto transformed = det;
        for (auto& d : transformed) d.score = std::exp(3 * d.score) - 7;
        EXPECT_DOUBLE_EQ(match_and_ap(transformed, gt).ap, ap);
    }
}

TEST(Adhesion, TouchingPair) {
    const InstanceMask m = ascii_mask({
        "aab....",
        "aab....",
    });
    const AdhesionStats s = adhesion_stats(m);
    EXPECT_EQ(s.n_cells, 2);
    EXPECT_DOUBLE_EQ(s.touch_fraction, 1.0);
    EXPECT_EQ(s.cluster_sizes, std::vector<int>{2});
    ASSERT_EQ(s.nn_center_distances.size(), 2u);
    EXPECT_DOUBLE_EQ(s.nn_center_distances[0], 1.5);
}

TEST(Adhesion, SeparatedCells) {
    const InstanceMask m = ascii_mask({
        "a...b...c",
        ".........",
    });
    const AdhesionStats s = adhesion_stats(m);
    EXPECT_EQ(s.n_cells, 3);
    EXPECT_DOUBLE_EQ(s.touch_fraction, 0.0);
    EXPECT_EQ(s.cluster_sizes, (std::vector<int>{1, 1, 1}));
    EXPECT_EQ(s.cluster_size_histogram.at(1), 3);
    EXPECT_EQ(s.nn_histogram, (std::vector<int>{0, 3}));
}

TEST(Adhesion, ChainAndIsolatedCell) {
    // b touches a diagonally, c touches b; d stands alone
    const InstanceMask m = ascii_mask({
        "aa.......",
        "aa.......",
        "..bbc...d",
        "..bbc....",
    });
    const AdhesionStats s = adhesion_stats(m);
    EXPECT_EQ(s.n_cells, 4);
    EXPECT_DOUBLE_EQ(s.touch_fraction, 0.75);
    EXPECT_EQ(s.cluster_sizes, (std::vector<int>{3, 1}));
}

TEST(Adhesion, SameColorSeparatedRegionsAreDistinctCells) {
    const InstanceMask m = ascii_mask({
        "a.a",
        "...",
    });
    EXPECT_EQ(adhesion_stats(m).n_cells, 2);
    EXPECT_EQ(adhesion_stats(ascii_mask({"..."})).n_cells, 0);
}

TEST(WelchTest, KnownValues) {
    const std::vector<double> a{5.1, 4.9, 5.3, 5.0, 5.2};
    const std::vector<double> b{4.0, 4.2, 4.1, 3.9, 4.3};
    const OneSidedTest t = welch_greater(a, b);
    EXPECT_NEAR(t.a.mean, 5.1, 1e-12);
    EXPECT_NEAR(t.a.stddev, std::sqrt(0.025), 1e-12);
    EXPECT_NEAR(t.t, 1.0 / std::sqrt(0.025 / 5 + 0.025 / 5), 1e-9);
    EXPECT_NEAR(t.dof, 8.0, 1e-9);
    EXPECT_LT(t.p_value, 1e-5);
    EXPECT_GT(welch_greater(b, a).p_value, 0.999);
}
