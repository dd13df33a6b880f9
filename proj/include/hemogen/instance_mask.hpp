#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hemogen/components.hpp"
#include "hemogen/errors.hpp"
#include "hemogen/grid.hpp"
#include "hemogen/image_io.hpp"

namespace hemogen {

/// Two diagonally adjacent pixels of the same color that belong to different
/// 4-connected parts, i.e. two same-colored cells touching at a corner.
struct TouchViolation {
    Pixel a;
    Pixel b;
    std::uint32_t color_id = 0;

    friend bool operator==(const TouchViolation&, const TouchViolation&) = default;
};

class MaskValidationError : public ValidationError {
public:
    MaskValidationError(const std::string& source, std::vector<TouchViolation> v)
        : ValidationError(describe(source, v)), violations_(std::move(v)) {}

    const std::vector<TouchViolation>& violations() const { return violations_; }

private:
    static std::string describe(const std::string& source, const std::vector<TouchViolation>& v) {
        std::ostringstream os;
        os << source << ": " << v.size() << " same-color touching pixel pair(s)";
        const std::size_t shown = std::min<std::size_t>(v.size(), 8);
        for (std::size_t i = 0; i < shown; ++i)
            os << (i ? ", " : ": ") << "(" << v[i].a.x << "," << v[i].a.y << ")-(" << v[i].b.x << ","
               << v[i].b.y << ")";
        if (shown < v.size()) os << ", ...";
        return os.str();
    }

    std::vector<TouchViolation> violations_;
};

/// Color-coded instance mask. Pixels hold palette indices; index 0 is the
/// background color.
class InstanceMask {
public:
    static constexpr std::uint32_t kBackground = 0;

    InstanceMask() = default;
    InstanceMask(Grid<std::uint32_t> ids, std::vector<Rgb> palette, std::string id = {})
        : ids_(std::move(ids)), palette_(std::move(palette)), id_(std::move(id)) {
        if (palette_.empty()) throw ValidationError("instance mask palette must contain the background color");
        for (std::uint32_t v : ids_.values())
            if (v >= palette_.size()) throw ValidationError("instance mask uses a color id outside its palette");
    }

    /// Builds a mask from an RGB raster. Without an explicit background the most
    /// frequent color is used (ties go to the smallest packed RGB value).
    static InstanceMask from_image(const RgbImage& img, std::optional<Rgb> background = std::nullopt,
                                   std::string id = {}) {
        std::unordered_map<std::uint32_t, long long> freq;
        for (const Rgb& c : img.values()) ++freq[c.packed()];
        if (!background) {
            std::uint32_t best = 0;
            long long best_n = -1;
            for (const auto& [packed, n] : freq)
                if (n > best_n || (n == best_n && packed < best)) best = packed, best_n = n;
            background = Rgb::unpack(best);
        }
        std::vector<std::uint32_t> colors;
        colors.reserve(freq.size());
        for (const auto& [packed, n] : freq)
            if (packed != background->packed()) colors.push_back(packed);
        std::sort(colors.begin(), colors.end());

        std::vector<Rgb> palette{*background};
        std::unordered_map<std::uint32_t, std::uint32_t> index;
        for (std::uint32_t packed : colors) {
            index[packed] = static_cast<std::uint32_t>(palette.size());
            palette.push_back(Rgb::unpack(packed));
        }
        Grid<std::uint32_t> ids(img.width(), img.height(), kBackground);
        for (std::size_t i = 0; i < img.size(); ++i) {
            const std::uint32_t packed = img[i].packed();
            if (packed != background->packed()) ids[i] = index[packed];
        }
        return InstanceMask(std::move(ids), std::move(palette), std::move(id));
    }

    int width() const { return ids_.width(); }
    int height() const { return ids_.height(); }
    const Grid<std::uint32_t>& ids() const { return ids_; }
    const std::vector<Rgb>& palette() const { return palette_; }
    Rgb background() const { return palette_.front(); }
    const std::string& id() const { return id_; }

    long long foreground_pixels() const {
        return std::count_if(ids_.values().begin(), ids_.values().end(),
                             [](std::uint32_t v) { return v != kBackground; });
    }

    /// Corner contacts between distinct same-colored cells. A cell is a
    /// same-color 8-connected region, so two cells sharing a color can only
    /// be told apart where the region is joined exclusively through a
    /// diagonal step between separate 4-connected parts.
    std::vector<TouchViolation> violations() const {
        const auto parts = label_components(
            width(), height(), Connectivity::four, [&](int x, int y) { return ids_(x, y) != kBackground; },
            [&](int x0, int y0, int x1, int y1) { return ids_(x0, y0) == ids_(x1, y1); });
        std::vector<TouchViolation> out;
        for (int y = 0; y + 1 < height(); ++y) {
            for (int x = 0; x < width(); ++x) {
                const std::uint32_t c = ids_(x, y);
                if (c == kBackground) continue;
                for (int dx : {-1, 1}) {
                    const int nx = x + dx;
                    if (nx < 0 || nx >= width()) continue;
                    if (ids_(nx, y + 1) == c && parts.labels(x, y) != parts.labels(nx, y + 1))
                        out.push_back({{x, y}, {nx, y + 1}, c});
                }
            }
        }
        return out;
    }

    void validate() const {
        auto v = violations();
        if (!v.empty()) throw MaskValidationError(id_.empty() ? std::string("mask") : id_, std::move(v));
    }

    RgbImage render() const {
        RgbImage img(width(), height());
        for (std::size_t i = 0; i < ids_.size(); ++i) img[i] = palette_[ids_[i]];
        return img;
    }

    friend bool operator==(const InstanceMask& a, const InstanceMask& b) {
        return a.ids_ == b.ids_ && a.palette_ == b.palette_;
    }

private:
    Grid<std::uint32_t> ids_;
    std::vector<Rgb> palette_;
    std::string id_;
};

/// Reads and validates a mask PNG. Throws IoError or MaskValidationError.
inline InstanceMask load_mask(const std::filesystem::path& path, std::optional<Rgb> background = std::nullopt) {
    InstanceMask mask = InstanceMask::from_image(read_rgb_png(path), background, path.filename().string());
    mask.validate();
    return mask;
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// One extracted cell: tight binary bitmap plus centroid in bitmap coordinates.
struct CellShape {
    BinaryGrid bitmap;
    Point2 centroid;
    std::string source_mask;
    int source_region = 0;
    long long area = 0;

    friend bool operator==(const CellShape&, const CellShape&) = default;
};

/// Builds a CellShape from a bitmap that is already tight and non-empty.
inline CellShape make_shape(BinaryGrid bitmap, std::string source = {}, int region = 0) {
    long long n = 0, sx = 0, sy = 0;
    for (int y = 0; y < bitmap.height(); ++y)
        for (int x = 0; x < bitmap.width(); ++x)
            if (bitmap(x, y)) ++n, sx += x, sy += y;
    CellShape s;
    s.bitmap = std::move(bitmap);
    s.area = n;
    s.centroid = n ? Point2{static_cast<double>(sx) / n, static_cast<double>(sy) / n} : Point2{};
    s.source_mask = std::move(source);
    s.source_region = region;
    return s;
}

/// A cell located in image coordinates, as produced by extract_cells.
struct ExtractedCell {
    CellShape shape;
    Box bbox;
    std::uint32_t color_id = 0;
};

/// One cell per maximal same-color 8-connected region, in raster order of the
/// region's first pixel.
inline std::vector<ExtractedCell> extract_located_cells(const InstanceMask& mask) {
    const auto& ids = mask.ids();
    const auto cc = label_components(
        mask.width(), mask.height(), Connectivity::eight,
        [&](int x, int y) { return ids(x, y) != InstanceMask::kBackground; },
        [&](int x0, int y0, int x1, int y1) { return ids(x0, y0) == ids(x1, y1); });

    std::vector<Box> boxes(static_cast<std::size_t>(cc.count));
    std::vector<std::array<int, 4>> ext(static_cast<std::size_t>(cc.count),
                                        {mask.width(), mask.height(), -1, -1});
    std::vector<std::uint32_t> colors(static_cast<std::size_t>(cc.count), 0);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const int l = cc.labels(x, y);
            if (!l) continue;
            auto& e = ext[static_cast<std::size_t>(l - 1)];
            e[0] = std::min(e[0], x);
            e[1] = std::min(e[1], y);
            e[2] = std::max(e[2], x);
            e[3] = std::max(e[3], y);
            colors[static_cast<std::size_t>(l - 1)] = ids(x, y);
        }
    }
    std::vector<ExtractedCell> out;
    out.reserve(static_cast<std::size_t>(cc.count));
    for (int k = 0; k < cc.count; ++k) {
        const auto& e = ext[static_cast<std::size_t>(k)];
        const Box b{e[0], e[1], e[2] - e[0] + 1, e[3] - e[1] + 1};
        BinaryGrid bm(b.w, b.h, 0);
        for (int y = 0; y < b.h; ++y)
            for (int x = 0; x < b.w; ++x) bm(x, y) = cc.labels(b.x + x, b.y + y) == k + 1;
        out.push_back({make_shape(std::move(bm), mask.id(), k), b, colors[static_cast<std::size_t>(k)]});
    }
    return out;
}

inline std::vector<CellShape> extract_cells(const InstanceMask& mask) {
    std::vector<CellShape> out;
    for (auto& c : extract_located_cells(mask)) out.push_back(std::move(c.shape));
    return out;
}

}  // namespace hemogen
