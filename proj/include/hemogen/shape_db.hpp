#pragma once

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hemogen/codec.hpp"
#include "hemogen/errors.hpp"
#include "hemogen/instance_mask.hpp"

namespace hemogen {

/// Per-dataset statistics that parameterize synthesis.
///
/// `mean_cell_extent` is the mean bounding-box side (width and height pooled).
/// The equivalent diameter and fitted-ellipse axes are reported alongside as
/// alternative readings of "cell size".
struct DatasetStats {
    double mu_n = 0.0;
    double sigma_n = 0.0;
    double mean_cell_extent = 0.0;
    double std_cell_extent = 0.0;
    int image_width = 0;
    int image_height = 0;
    int n_images = 0;
    long long n_cells = 0;
    double mean_cell_area = 0.0;
    double mean_equivalent_diameter = 0.0;
    double mean_ellipse_major = 0.0;
    double mean_ellipse_minor = 0.0;

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

namespace detail {

struct IntMoments {
    long double n = 0, sum = 0, sumsq = 0;
    void add(long long v) {
        n += 1;
        sum += static_cast<long double>(v);
        sumsq += static_cast<long double>(v) * static_cast<long double>(v);
    }
    double mean() const { return n > 0 ? static_cast<double>(sum / n) : 0.0; }
    /// Sample standard deviation; 0 for fewer than two samples.
    double stddev() const {
        if (n < 2) return 0.0;
        const long double var = (n * sumsq - sum * sum) / (n * (n - 1));
        return var > 0 ? static_cast<double>(std::sqrt(var)) : 0.0;
    }
};

/// Mean of real values, summed in sorted order so the result does not depend
/// on input order.
inline double order_free_mean(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / static_cast<long double>(v.size()));
}

/// Full axis lengths of the ellipse with the same second moments as the shape.
inline std::pair<double, double> ellipse_axes(const CellShape& s) {
    if (s.area == 0) return {0.0, 0.0};
    double sxx = 0, syy = 0, sxy = 0;
    for (int y = 0; y < s.bitmap.height(); ++y) {
        for (int x = 0; x < s.bitmap.width(); ++x) {
            if (!s.bitmap(x, y)) continue;
            const double dx = x - s.centroid.x, dy = y - s.centroid.y;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
    }
    const double n = static_cast<double>(s.area);
    // +1/12 accounts for the spread of a unit pixel.
    sxx = sxx / n + 1.0 / 12.0;
    syy = syy / n + 1.0 / 12.0;
    sxy /= n;
    const double tr = sxx + syy;
    const double disc = std::sqrt(std::max(0.0, (sxx - syy) * (sxx - syy) / 4.0 + sxy * sxy));
    const double l1 = tr / 2.0 + disc, l2 = std::max(0.0, tr / 2.0 - disc);
    return {4.0 * std::sqrt(l1), 4.0 * std::sqrt(l2)};
}

}  // namespace detail

/// Statistics over already-extracted per-image cell lists.
inline DatasetStats compute_stats_from_cells(std::span<const std::vector<CellShape>> per_image, int width,
                                             int height) {
    if (per_image.empty()) throw ValidationError("compute_stats needs at least one mask");
    detail::IntMoments counts, sides, areas;
    std::vector<double> diam, major, minor;
    for (const auto& cells : per_image) {
        counts.add(static_cast<long long>(cells.size()));
        for (const CellShape& c : cells) {
            sides.add(c.bitmap.width());
            sides.add(c.bitmap.height());
            areas.add(c.area);
            diam.push_back(std::sqrt(4.0 * static_cast<double>(c.area) / std::numbers::pi));
            const auto [a, b] = detail::ellipse_axes(c);
            major.push_back(a);
            minor.push_back(b);
        }
    }
    DatasetStats s;
    s.n_images = static_cast<int>(per_image.size());
    s.mu_n = counts.mean();
    s.sigma_n = counts.stddev();
    s.mean_cell_extent = sides.mean();
    s.std_cell_extent = sides.stddev();
    s.image_width = width;
    s.image_height = height;
    s.n_cells = static_cast<long long>(areas.n);
    s.mean_cell_area = areas.mean();
    s.mean_equivalent_diameter = detail::order_free_mean(std::move(diam));
    s.mean_ellipse_major = detail::order_free_mean(std::move(major));
    s.mean_ellipse_minor = detail::order_free_mean(std::move(minor));
    return s;
}

/// Image dimensions are the largest seen, so the result is independent of mask order.
inline DatasetStats compute_stats(std::span<const InstanceMask> masks) {
    std::vector<std::vector<CellShape>> per_image;
    int w = 0, h = 0;
    for (const InstanceMask& m : masks) {
        per_image.push_back(extract_cells(m));
        w = std::max(w, m.width());
        h = std::max(h, m.height());
    }
    return compute_stats_from_cells(per_image, w, h);
}

struct ShapeDatabase {
    static constexpr int kFormatVersion = 1;

    std::vector<CellShape> shapes;
    DatasetStats stats;
    int format_version = kFormatVersion;

    friend bool operator==(const ShapeDatabase&, const ShapeDatabase&) = default;
};

inline nlohmann::json stats_to_json(const DatasetStats& s) {
    return {
        {"mu_n", s.mu_n},
        {"sigma_n", s.sigma_n},
        {"mean_cell_extent", s.mean_cell_extent},
        {"std_cell_extent", s.std_cell_extent},
        {"image_width", s.image_width},
        {"image_height", s.image_height},
        {"n_images", s.n_images},
        {"n_cells", s.n_cells},
        {"mean_cell_area", s.mean_cell_area},
        {"mean_equivalent_diameter", s.mean_equivalent_diameter},
        {"mean_ellipse_major", s.mean_ellipse_major},
        {"mean_ellipse_minor", s.mean_ellipse_minor},
    };
}

inline DatasetStats stats_from_json(const nlohmann::json& j) {
    DatasetStats s;
    s.mu_n = j.at("mu_n").get<double>();
    s.sigma_n = j.at("sigma_n").get<double>();
    s.mean_cell_extent = j.at("mean_cell_extent").get<double>();
    s.std_cell_extent = j.at("std_cell_extent").get<double>();
    s.image_width = j.at("image_width").get<int>();
    s.image_height = j.at("image_height").get<int>();
    s.n_images = j.at("n_images").get<int>();
    s.n_cells = j.at("n_cells").get<long long>();
    s.mean_cell_area = j.at("mean_cell_area").get<double>();
    s.mean_equivalent_diameter = j.at("mean_equivalent_diameter").get<double>();
    s.mean_ellipse_major = j.at("mean_ellipse_major").get<double>();
    s.mean_ellipse_minor = j.at("mean_ellipse_minor").get<double>();
    return s;
}

namespace detail {

inline constexpr const char* kDbFormatName = "hemogen-shape-db";

inline std::string crc_hex(const std::string& payload) {
    const uLong crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(payload.data()),
                            static_cast<uInt>(payload.size()));
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

inline nlohmann::json db_payload(const ShapeDatabase& db) {
    nlohmann::json shapes = nlohmann::json::array();
    for (const CellShape& s : db.shapes) {
        shapes.push_back({
            {"width", s.bitmap.width()},
            {"height", s.bitmap.height()},
            {"centroid", {s.centroid.x, s.centroid.y}},
            {"area", s.area},
            {"source", {{"mask", s.source_mask}, {"region", s.source_region}}},
            {"rle", codec::base64_encode(codec::rle_encode(s.bitmap))},
        });
    }
    return {{"stats", stats_to_json(db.stats)}, {"shapes", std::move(shapes)}};
}

}  // namespace detail

inline std::string serialize_db(const ShapeDatabase& db) {
    const nlohmann::json payload = detail::db_payload(db);
    nlohmann::json doc = {
        {"format", detail::kDbFormatName},
        {"format_version", db.format_version},
        {"checksum", detail::crc_hex(payload.dump())},
        {"payload", payload},
    };
    return doc.dump(1) + "\n";
}

/// Parses a database document. Nothing is returned unless the whole file
/// validates (format, version, checksum, every bitmap).
inline ShapeDatabase deserialize_db(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("shape database is not valid JSON (truncated?): ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != detail::kDbFormatName)
            throw ValidationError("not a shape database file");
        const int version = doc.at("format_version").get<int>();
        if (version != ShapeDatabase::kFormatVersion)
            throw ValidationError("unsupported shape database format_version " + std::to_string(version) +
                                  " (expected " + std::to_string(ShapeDatabase::kFormatVersion) + ")");
        const nlohmann::json& payload = doc.at("payload");
        if (detail::crc_hex(payload.dump()) != doc.at("checksum").get<std::string>())
            throw ValidationError("shape database checksum mismatch");

        ShapeDatabase db;
        db.format_version = version;
        db.stats = stats_from_json(payload.at("stats"));
        for (const auto& js : payload.at("shapes")) {
            const int w = js.at("width").get<int>(), h = js.at("height").get<int>();
            if (w <= 0 || h <= 0) throw ValidationError("shape with empty bitmap");
            CellShape s;
            s.bitmap = codec::rle_decode(codec::base64_decode(js.at("rle").get<std::string>()), w, h);
            s.centroid = {js.at("centroid").at(0).get<double>(), js.at("centroid").at(1).get<double>()};
            s.area = js.at("area").get<long long>();
            s.source_mask = js.at("source").at("mask").get<std::string>();
            s.source_region = js.at("source").at("region").get<int>();
            const auto set = std::count(s.bitmap.values().begin(), s.bitmap.values().end(), std::uint8_t{1});
            if (set != s.area || s.area == 0) throw ValidationError("shape area does not match its bitmap");
            db.shapes.push_back(std::move(s));
        }
        return db;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed shape database: ") + e.what());
    }
}

inline void save_db(const ShapeDatabase& db, const std::filesystem::path& path) {
    const std::string text = serialize_db(db);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline ShapeDatabase load_db(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_db(ss.str());
}

/// Extracts every cell of every mask into a database, with stats from the same pass.
inline ShapeDatabase build_db(std::span<const InstanceMask> masks) {
    ShapeDatabase db;
    std::vector<std::vector<CellShape>> per_image;
    int w = 0, h = 0;
    for (const InstanceMask& m : masks) {
        per_image.push_back(extract_cells(m));
        db.shapes.insert(db.shapes.end(), per_image.back().begin(), per_image.back().end());
        w = std::max(w, m.width());
        h = std::max(h, m.height());
    }
    db.stats = compute_stats_from_cells(per_image, w, h);
    return db;
}

}  // namespace hemogen
