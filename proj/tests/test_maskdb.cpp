#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "hemogen/fixtures.hpp"
#include "hemogen/shape_db.hpp"
#include "support.hpp"

using namespace hemogen;
using hemogen::testing::ascii_bitmap;
using hemogen::testing::ascii_mask;

TEST(LoadMask, AllBackgroundHasNoCells) {
    const auto dir = hemogen::testing::temp_dir("bg");
    write_rgb_png(dir / "bg.png", RgbImage(3, 3, Rgb{10, 20, 30}));
    const InstanceMask m = load_mask(dir / "bg.png");
    EXPECT_EQ(m.background(), (Rgb{10, 20, 30}));
    EXPECT_EQ(m.foreground_pixels(), 0);
    EXPECT_TRUE(extract_cells(m).empty());
}

TEST(LoadMask, TwoAdjacentRegionsInDistinctColors) {
    const InstanceMask m = ascii_mask({
        "..........",
        ".aaa......",
        ".aaabbb...",
        ".aaabbb...",
        "....bbb...",
        "..........",
        "......cc..",
        "......cc..",
        "..........",
        "..........",
    });
    EXPECT_TRUE(m.violations().empty());
    const auto cells = extract_cells(m);
    ASSERT_EQ(cells.size(), 3u);
    EXPECT_EQ(cells[0].area, 9);
    EXPECT_EQ(cells[1].area, 9);
    EXPECT_EQ(cells[2].area, 4);
}

TEST(LoadMask, DiagonalSameColorContactIsReported) {
    const InstanceMask m = ascii_mask({
        "aa....",
        "aa....",
        "..aa..",
        "..aa..",
    }, "diag");
    const auto v = m.violations();
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].a, (Pixel{1, 1}));
    EXPECT_EQ(v[0].b, (Pixel{2, 2}));
    try {
        m.validate();
        FAIL() << "expected a validation error";
    } catch (const MaskValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("(1,1)-(2,2)"), std::string::npos) << e.what();
        EXPECT_EQ(e.violations().size(), 1u);
    }
}

TEST(LoadMask, ReadsPngAndRejectsViolationsAndCorruptFiles) {
    const auto dir = hemogen::testing::temp_dir("load");
    const InstanceMask good = ascii_mask({"....", ".ab.", ".ab.", "...."});
    write_rgb_png(dir / "good.png", good.render());
    const InstanceMask back = load_mask(dir / "good.png");
    EXPECT_EQ(back, good);

    write_rgb_png(dir / "bad.png", ascii_mask({"a.", ".a"}).render());
    EXPECT_THROW(load_mask(dir / "bad.png", Rgb{0, 0, 0}), MaskValidationError);

    std::ofstream(dir / "junk.png") << "not a png";
    EXPECT_THROW(load_mask(dir / "junk.png"), IoError);
    EXPECT_THROW(load_mask(dir / "missing.png"), IoError);
}

TEST(ExtractCells, PlusShape) {
    const auto cells = extract_cells(ascii_mask({
        ".....",
        "..a..",
        ".aaa.",
        "..a..",
        ".....",
    }));
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_EQ(cells[0].area, 5);
    EXPECT_EQ(cells[0].bitmap.width(), 3);
    EXPECT_EQ(cells[0].bitmap.height(), 3);
    EXPECT_EQ(cells[0].bitmap, ascii_bitmap({".x.", "xxx", ".x."}));
    EXPECT_DOUBLE_EQ(cells[0].centroid.x, 1.0);
    EXPECT_DOUBLE_EQ(cells[0].centroid.y, 1.0);
}

TEST(ExtractCells, DiagonalTouchingDifferentColorsGiveTwoCells) {
    const InstanceMask m = ascii_mask({
        "aa..",
        "aa..",
        "..bb",
        "..bb",
    });
    EXPECT_TRUE(m.violations().empty());
    const auto cells = extract_located_cells(m);
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_EQ(cells[0].bbox, (Box{0, 0, 2, 2}));
    EXPECT_EQ(cells[1].bbox, (Box{2, 2, 2, 2}));
}

TEST(ExtractCells, RasterOrderByFirstPixel) {
    const auto cells = extract_located_cells(ascii_mask({
        "...b",
        "a..b",
        "a...",
    }));
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_EQ(cells[0].bbox.x, 3);
    EXPECT_EQ(cells[1].bbox.x, 0);
}

TEST(ExtractCells, PartitionsForegroundOnRandomMasks) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const InstanceMask m = fixtures::annotated_mask(200, 150, 25, seed);
        ASSERT_TRUE(m.violations().empty());
        const auto cells = extract_located_cells(m);
        Grid<int> cover(m.width(), m.height(), 0);
        long long total = 0;
        for (const auto& c : cells) {
            total += c.shape.area;
            for (int y = 0; y < c.bbox.h; ++y)
                for (int x = 0; x < c.bbox.w; ++x)
                    if (c.shape.bitmap(x, y)) ++cover(c.bbox.x + x, c.bbox.y + y);
            // tight bounding box
            const Box b = bounding_box(c.shape.bitmap);
            EXPECT_EQ(b, (Box{0, 0, c.bbox.w, c.bbox.h}));
        }
        EXPECT_EQ(total, m.foreground_pixels());
        for (std::size_t i = 0; i < cover.size(); ++i)
            EXPECT_EQ(cover[i], m.ids()[i] != InstanceMask::kBackground ? 1 : 0);
    }
}

namespace {
InstanceMask mask_with_cells(int n) {
    // n separated 2x2 blocks, alternating colors
    std::vector<std::string> rows(3, std::string(static_cast<std::size_t>(3 * n + 1), '.'));
    for (int k = 0; k < n; ++k)
        for (int d = 0; d < 2; ++d) rows[1][static_cast<std::size_t>(3 * k + 1 + d)] = k % 2 ? 'b' : 'a';
    return ascii_mask(rows);
}
}  // namespace

TEST(ComputeStats, SampleStdOfCounts) {
    const std::vector<InstanceMask> masks{mask_with_cells(2), mask_with_cells(3), mask_with_cells(4)};
    const DatasetStats s = compute_stats(masks);
    EXPECT_DOUBLE_EQ(s.mu_n, 3.0);
    EXPECT_DOUBLE_EQ(s.sigma_n, 1.0);
    EXPECT_EQ(s.n_images, 3);
    EXPECT_EQ(s.n_cells, 9);
    // 2x1 blocks: sides 2 and 1 pooled
    EXPECT_DOUBLE_EQ(s.mean_cell_extent, 1.5);
}

TEST(ComputeStats, SingleImageHasZeroStd) {
    const std::vector<InstanceMask> masks{mask_with_cells(5)};
    const DatasetStats s = compute_stats(masks);
    EXPECT_DOUBLE_EQ(s.mu_n, 5.0);
    EXPECT_DOUBLE_EQ(s.sigma_n, 0.0);
}

TEST(ComputeStats, NeedsAtLeastOneMask) {
    EXPECT_THROW(compute_stats(std::span<const InstanceMask>{}), ValidationError);
}

TEST(ComputeStats, PermutationInvariant) {
    std::vector<InstanceMask> masks;
    for (std::uint64_t s = 1; s <= 6; ++s) masks.push_back(fixtures::annotated_mask(160, 120, 8 + 2 * static_cast<int>(s), s));
    const DatasetStats ref = compute_stats(masks);
    std::mt19937 shuffle(7);
    for (int k = 0; k < 5; ++k) {
        std::shuffle(masks.begin(), masks.end(), shuffle);
        EXPECT_EQ(compute_stats(masks), ref);
    }
}

TEST(ComputeStats, EllipseSizeReadings) {
    const CellShape disc = fixtures::ellipse_shape(40, 40, 0);
    const std::vector<std::vector<CellShape>> one{{disc}};
    const DatasetStats s = compute_stats_from_cells(one, 100, 100);
    EXPECT_NEAR(s.mean_cell_extent, 40.0, 1.0);
    EXPECT_NEAR(s.mean_equivalent_diameter, 40.0, 1.0);
    EXPECT_NEAR(s.mean_ellipse_major, 40.0, 1.0);
    EXPECT_NEAR(s.mean_ellipse_minor, 40.0, 1.0);
}

namespace {
ShapeDatabase three_shape_db() {
    ShapeDatabase db;
    db.shapes.push_back(make_shape(ascii_bitmap({".x.", "xxx", ".x."}), "m0.png", 0));
    db.shapes.push_back(make_shape(ascii_bitmap({"xx", "x."}), "m0.png", 1));
    db.shapes.push_back(fixtures::ellipse_shape(30, 22, 35, "m1.png", 0));
    const std::vector<std::vector<CellShape>> per{{db.shapes[0], db.shapes[1]}, {db.shapes[2]}};
    db.stats = compute_stats_from_cells(per, 64, 48);
    return db;
}
}  // namespace

TEST(ShapeDb, SaveLoadRoundTrip) {
    const auto dir = hemogen::testing::temp_dir("db");
    const ShapeDatabase db = three_shape_db();
    save_db(db, dir / "db.json");
    const ShapeDatabase back = load_db(dir / "db.json");
    EXPECT_EQ(back, db);
    EXPECT_EQ(serialize_db(back), serialize_db(db));
}

TEST(ShapeDb, RejectsUnknownVersionBadChecksumAndTruncation) {
    std::string text = serialize_db(three_shape_db());
    auto doc = nlohmann::json::parse(text);

    auto versioned = doc;
    versioned["format_version"] = 99;
    try {
        deserialize_db(versioned.dump());
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("format_version 99"), std::string::npos);
    }

    auto tampered = doc;
    tampered["payload"]["shapes"][0]["area"] = 4;
    EXPECT_THROW(deserialize_db(tampered.dump()), ValidationError);

    EXPECT_THROW(deserialize_db(text.substr(0, text.size() / 2)), ValidationError);
    EXPECT_THROW(load_db("/nonexistent/db.json"), IoError);
}

// The golden file was written by format version 1 from three_shape_db(); a
// reader change that breaks old files fails here.
TEST(ShapeDb, LoadsGoldenFile) {
    const ShapeDatabase golden = load_db(std::string(HEMOGEN_TEST_DATA) + "/golden_db_v1.json");
    EXPECT_EQ(golden, three_shape_db());
}
