#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hemogen/augment.hpp"
#include "hemogen/components.hpp"
#include "hemogen/errors.hpp"
#include "hemogen/instance_mask.hpp"
#include "hemogen/probability_map.hpp"
#include "hemogen/random.hpp"
#include "hemogen/shape_db.hpp"

namespace hemogen {

enum class PlacementStrategy { adhesion, uniform_random };

inline const char* to_string(PlacementStrategy s) {
    return s == PlacementStrategy::adhesion ? "adhesion" : "uniform-random";
}

inline PlacementStrategy parse_strategy(const std::string& s) {
    if (s == "adhesion") return PlacementStrategy::adhesion;
    if (s == "uniform-random" || s == "uniform_random" || s == "random") return PlacementStrategy::uniform_random;
    throw ValidationError("unknown placement strategy '" + s + "'");
}

inline std::vector<Rgb> default_palette() {
    return {{255, 0, 0},   {0, 255, 0},   {0, 0, 255},   {255, 255, 0}, {255, 0, 255}, {0, 255, 255},
            {255, 128, 0}, {128, 0, 255}, {0, 255, 128}, {255, 0, 128}, {128, 255, 0}, {0, 128, 255}};
}

struct SynthesisConfig {
    static constexpr double kDefaultMeanCount = 669.0;
    static constexpr double kDefaultStdCount = 149.0;

    int width = 1920;
    int height = 1200;
    double mu_n = kDefaultMeanCount;
    double sigma_n = kDefaultStdCount;
    std::optional<int> cell_count;  // forces n, bypassing the draw and its clamp
    SamplerParams sampler;
    AugmentationConfig augmentation;
    std::vector<Rgb> palette = default_palette();
    Rgb background{0, 0, 0};
    int max_location_retries = 100;
    int max_color_retries = 20;
    PlacementStrategy strategy = PlacementStrategy::adhesion;
    std::uint64_t seed = 0;
    /// Fraction of the canvas the drawn count may cover at the mean cell area.
    double max_coverage = 0.6;
    /// Mean cell area for the coverage cap; 0 takes it from the database.
    double mean_cell_area = 0.0;
    /// Also hard-zero the density under every placed cell.
    bool zero_occupied = false;
    /// Keep a float copy of the final density in the record.
    bool keep_density = false;

    void validate() const {
        if (width < 1 || height < 1) throw ValidationError("synthesis dimensions must be positive");
        if (palette.size() < 2) throw ValidationError("palette needs at least two colors");
        for (std::size_t i = 0; i < palette.size(); ++i) {
            if (palette[i] == background) throw ValidationError("palette color equals the background color");
            for (std::size_t j = i + 1; j < palette.size(); ++j)
                if (palette[i] == palette[j]) throw ValidationError("palette colors must be distinct");
        }
        if (!(sigma_n >= 0.0)) throw ValidationError("sigma_n must be non-negative");
        if (!cell_count && !(mu_n > 0.0)) throw ValidationError("mu_n must be positive");
        if (cell_count && *cell_count < 0) throw ValidationError("cell count must be non-negative");
        if (max_location_retries < 1 || max_color_retries < 1) throw ValidationError("retry budgets must be positive");
        if (!(max_coverage > 0.0 && max_coverage <= 1.0)) throw ValidationError("max_coverage must lie in (0, 1]");
        sampler.validate();
        augmentation.validate();
    }
};

/// Upper bound on the cell count: `coverage` of the canvas at the mean cell area.
inline int cell_count_cap(int width, int height, double mean_cell_area, double coverage = 0.6) {
    if (!(mean_cell_area > 0.0)) return std::numeric_limits<int>::max();
    return static_cast<int>(std::floor(coverage * width * static_cast<double>(height) / mean_cell_area));
}

struct CountDraw {
    int count = 0;
    double unclamped = 0.0;  // rounded normal draw before clamping
};

/// Normal draw rounded to the nearest integer and clamped to [floor, cap].
/// The floor wins if cap < floor.
inline CountDraw draw_cell_count(double mu_n, double sigma_n, int floor, int cap, Rng& rng) {
    const double rounded = std::nearbyint(rng.normal(mu_n, sigma_n));
    const double hi = std::max<double>(floor, cap);
    return {static_cast<int>(std::clamp(rounded, static_cast<double>(floor), hi)), rounded};
}

inline int sample_cell_count(double mu_n, double sigma_n, int floor, int cap, Rng& rng) {
    return draw_cell_count(mu_n, sigma_n, floor, cap, rng).count;
}

inline std::optional<int> assign_color(const std::vector<int>& neighbor_colors, int palette_size, Rng& rng) {
    std::vector<char> used(static_cast<std::size_t>(palette_size), 0);
    for (int c : neighbor_colors)
        if (c >= 0 && c < palette_size) used[static_cast<std::size_t>(c)] = 1;
    std::vector<int> free;
    for (int c = 0; c < palette_size; ++c)
        if (!used[static_cast<std::size_t>(c)]) free.push_back(c);
    if (free.empty()) return std::nullopt;
    return free[rng.below(free.size())];
}

enum class PlaceStatus { placed, overlap, out_of_bounds };

/// Result of anchoring a shape on the canvas.
struct Placement {
    PlaceStatus status = PlaceStatus::out_of_bounds;
    Box bbox;                    // image coordinates of `bitmap`
    BinaryGrid bitmap;           // visible pixels, tight
    bool clipped = false;
    std::vector<int> neighbors;  // ids of 8-adjacent cells, sorted, unique
};

/// Occupancy canvas: each pixel holds the index of the cell covering it or -1.
class Canvas {
public:
    Canvas(int width, int height) : owner_(width, height, -1) {}

    int width() const { return owner_.width(); }
    int height() const { return owner_.height(); }
    const Grid<std::int32_t>& owner() const { return owner_; }

    /// Anchors the shape's rounded centroid at `l` without modifying the canvas.
    /// Pixels beyond the border are dropped; if that splits the shape, only its
    /// largest 4-connected part is kept so the cell stays one region.
    Placement probe(const CellShape& shape, Pixel l) const {
        Placement p;
        const int ox = l.x - static_cast<int>(std::floor(shape.centroid.x + 0.5));
        const int oy = l.y - static_cast<int>(std::floor(shape.centroid.y + 0.5));
        const Box full{ox, oy, shape.bitmap.width(), shape.bitmap.height()};
        const Box vis = intersect(full, {0, 0, width(), height()});
        if (vis.empty()) return p;

        BinaryGrid visible(vis.w, vis.h, 0);
        for (int y = 0; y < vis.h; ++y)
            for (int x = 0; x < vis.w; ++x) visible(x, y) = shape.bitmap(vis.x - ox + x, vis.y - oy + y);
        p.clipped = !(vis == full);
        if (p.clipped) keep_largest_component(visible, Connectivity::four);
        const Box tight = bounding_box(visible);
        if (tight.empty()) return p;
        p.bitmap = crop(visible, tight);
        p.bbox = {vis.x + tight.x, vis.y + tight.y, tight.w, tight.h};

        for (int y = 0; y < p.bbox.h; ++y) {
            for (int x = 0; x < p.bbox.w; ++x) {
                if (!p.bitmap(x, y)) continue;
                if (owner_(p.bbox.x + x, p.bbox.y + y) >= 0) {
                    p.status = PlaceStatus::overlap;
                    return p;
                }
            }
        }
        for (int y = 0; y < p.bbox.h; ++y) {
            for (int x = 0; x < p.bbox.w; ++x) {
                if (!p.bitmap(x, y)) continue;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = p.bbox.x + x + dx, ny = p.bbox.y + y + dy;
                        if (!owner_.contains(nx, ny)) continue;
                        const std::int32_t o = owner_(nx, ny);
                        if (o >= 0) p.neighbors.push_back(o);
                    }
                }
            }
        }
        std::sort(p.neighbors.begin(), p.neighbors.end());
        p.neighbors.erase(std::unique(p.neighbors.begin(), p.neighbors.end()), p.neighbors.end());
        p.status = PlaceStatus::placed;
        return p;
    }

    void commit(const Placement& p, std::int32_t cell) {
        for (int y = 0; y < p.bbox.h; ++y)
            for (int x = 0; x < p.bbox.w; ++x)
                if (p.bitmap(x, y)) owner_(p.bbox.x + x, p.bbox.y + y) = cell;
    }

    /// probe followed by commit on success.
    Placement try_place(const CellShape& shape, Pixel l, std::int32_t cell) {
        Placement p = probe(shape, l);
        if (p.status == PlaceStatus::placed) commit(p, cell);
        return p;
    }

private:
    Grid<std::int32_t> owner_;
};

struct PlacedCell {
    std::size_t shape_id = 0;
    ShapeTransform transform;
    Pixel location;
    int color_id = 0;  // index into the cell palette (mask id - 1)
    bool clipped = false;
    Box bbox;
    long long area = 0;
    BinaryGrid bitmap;  // realized pixels inside bbox

    friend bool operator==(const PlacedCell&, const PlacedCell&) = default;
};

struct RejectionCounters {
    long long overlap = 0;
    long long color = 0;
    long long border = 0;
    long long shape_resamples = 0;
    long long abandoned = 0;

    friend bool operator==(const RejectionCounters&, const RejectionCounters&) = default;
};

struct SynthesisRecord {
    SynthesisConfig config;
    std::uint64_t seed = 0;
    int drawn_count = 0;      // cells requested for this mask
    bool count_capped = false;
    int count_cap = 0;
    std::vector<PlacedCell> placed;
    RejectionCounters rejected;
    long long location_attempts = 0;
    std::vector<std::string> warnings;
    double elapsed_seconds = 0.0;
    std::optional<FloatImage> final_density;
};

struct GenerationResult {
    InstanceMask mask;
    SynthesisRecord record;
};

inline double mean_shape_area(std::span<const CellShape> shapes) {
    if (shapes.empty()) return 0.0;
    long double s = 0;
    for (const CellShape& c : shapes) s += static_cast<long double>(c.area);
    return static_cast<double>(s / static_cast<long double>(shapes.size()));
}

inline InstanceMask render_mask(const SynthesisConfig& cfg, std::span<const PlacedCell> cells) {
    Grid<std::uint32_t> ids(cfg.width, cfg.height, InstanceMask::kBackground);
    for (const PlacedCell& c : cells)
        for (int y = 0; y < c.bbox.h; ++y)
            for (int x = 0; x < c.bbox.w; ++x)
                if (c.bitmap(x, y)) ids(c.bbox.x + x, c.bbox.y + y) = static_cast<std::uint32_t>(c.color_id + 1);
    std::vector<Rgb> palette{cfg.background};
    palette.insert(palette.end(), cfg.palette.begin(), cfg.palette.end());
    return InstanceMask(std::move(ids), std::move(palette));
}

/// Builds one synthetic instance mask.
///
/// The cell count is drawn (or forced), then cells are placed one by one. The
/// first n_init locations are uniform; later ones come from the probability
/// map, which is advanced after each successful placement. A cell gets up to
/// max_location_retries locations (overlap, border and color exhaustion all
/// consume one); after max_color_retries color exhaustions, or once the
/// location budget is spent, the shape is resampled once; if that also fails
/// the cell is abandoned and a warning is recorded. The uniform-random
/// strategy skips the map and draws every location uniformly.
inline GenerationResult generate_mask(const ShapeDatabase& db, const SynthesisConfig& cfg) {
    cfg.validate();
    if (db.shapes.empty()) throw ValidationError("shape database is empty");
    const auto t0 = std::chrono::steady_clock::now();

    Rng rng(cfg.seed);
    SynthesisRecord rec;
    rec.config = cfg;
    rec.seed = cfg.seed;

    const double mean_area = cfg.mean_cell_area > 0.0 ? cfg.mean_cell_area
                             : db.stats.mean_cell_area > 0.0 ? db.stats.mean_cell_area
                                                             : mean_shape_area(db.shapes);
    rec.count_cap = cell_count_cap(cfg.width, cfg.height, mean_area, cfg.max_coverage);
    if (cfg.cell_count) {
        rec.drawn_count = *cfg.cell_count;
    } else {
        const CountDraw d = draw_cell_count(cfg.mu_n, cfg.sigma_n, cfg.sampler.n_init, rec.count_cap, rng);
        rec.drawn_count = d.count;
        rec.count_capped = d.unclamped > d.count;
        if (rec.count_capped)
            rec.warnings.push_back("cell count " + std::to_string(static_cast<long long>(d.unclamped)) +
                                   " capped at " + std::to_string(rec.drawn_count) + " by coverage limit");
    }

    Canvas canvas(cfg.width, cfg.height);
    const bool adhesion = cfg.strategy == PlacementStrategy::adhesion;
    std::optional<ProbabilityMap> map;
    if (adhesion) map.emplace(cfg.width, cfg.height, cfg.sampler);
    const int palette_size = static_cast<int>(cfg.palette.size());

    auto draw_location = [&]() -> Pixel {
        const bool warm = static_cast<int>(rec.placed.size()) < cfg.sampler.n_init;
        if (!adhesion || warm || !(map->total() > 0.0))
            return {static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.width))),
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.height)))};
        return map->sample(rng);
    };

    for (int cell = 0; cell < rec.drawn_count; ++cell) {
        bool done = false;
        for (int shape_try = 0; shape_try < 2 && !done; ++shape_try) {
            if (shape_try > 0) ++rec.rejected.shape_resamples;
            SampledShape s = sample_shape(db.shapes, cfg.augmentation, rng);
            int color_failures = 0;
            for (int loc_try = 0; loc_try < cfg.max_location_retries; ++loc_try) {
                const Pixel l = draw_location();
                ++rec.location_attempts;
                Placement p = canvas.probe(s.shape, l);
                if (p.status == PlaceStatus::out_of_bounds) {
                    ++rec.rejected.border;
                    continue;
                }
                if (p.status == PlaceStatus::overlap) {
                    ++rec.rejected.overlap;
                    continue;
                }
                std::vector<int> neighbor_colors;
                neighbor_colors.reserve(p.neighbors.size());
                for (int n : p.neighbors) neighbor_colors.push_back(rec.placed[static_cast<std::size_t>(n)].color_id);
                const auto color = assign_color(neighbor_colors, palette_size, rng);
                if (!color) {
                    ++rec.rejected.color;
                    if (++color_failures >= cfg.max_color_retries) break;
                    continue;
                }
                const auto index = static_cast<std::int32_t>(rec.placed.size());
                canvas.commit(p, index);
                PlacedCell pc;
                pc.shape_id = s.shape_id;
                pc.transform = s.transform;
                pc.location = l;
                pc.color_id = *color;
                pc.clipped = p.clipped;
                pc.bbox = p.bbox;
                pc.area = static_cast<long long>(
                    std::count(p.bitmap.values().begin(), p.bitmap.values().end(), std::uint8_t{1}));
                pc.bitmap = std::move(p.bitmap);
                rec.placed.push_back(std::move(pc));
                if (adhesion) {
                    map->advance(l);
                    if (cfg.zero_occupied && map->step_index() >= cfg.sampler.n_init) {
                        const bool first = map->step_index() == cfg.sampler.n_init;
                        std::vector<Pixel> px;
                        for (std::size_t k = first ? 0 : rec.placed.size() - 1; k < rec.placed.size(); ++k) {
                            const PlacedCell& c = rec.placed[k];
                            for (int y = 0; y < c.bbox.h; ++y)
                                for (int x = 0; x < c.bbox.w; ++x)
                                    if (c.bitmap(x, y)) px.push_back({c.bbox.x + x, c.bbox.y + y});
                        }
                        map->suppress(px);
                    }
                }
                done = true;
                break;
            }
        }
        if (!done) ++rec.rejected.abandoned;
    }
    if (rec.rejected.abandoned > 0)
        rec.warnings.push_back("placed " + std::to_string(rec.placed.size()) + " of " +
                               std::to_string(rec.drawn_count) + " cells; " +
                               std::to_string(rec.rejected.abandoned) + " abandoned after exhausting retries");

    InstanceMask mask = render_mask(cfg, rec.placed);
    if (cfg.keep_density && map) rec.final_density = map->to_float_image();
    rec.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(mask), std::move(rec)};
}

struct BatchItem {
    std::optional<GenerationResult> result;
    std::string error;
};

/// Job k runs with seed = base seed + k. Results do not depend on parallelism.
inline std::vector<BatchItem> batch_generate(const ShapeDatabase& db, const SynthesisConfig& cfg, int count,
                                             int parallelism) {
    if (count < 1) throw ValidationError("batch count must be at least 1");
    std::vector<BatchItem> out(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < count; k = next++) {
            SynthesisConfig job = cfg;
            job.seed = cfg.seed + static_cast<std::uint64_t>(k);
            try {
                out[static_cast<std::size_t>(k)].result = generate_mask(db, job);
            } catch (const std::exception& e) {
                out[static_cast<std::size_t>(k)].error = e.what();
            }
        }
    };
    const int threads = std::clamp(parallelism, 1, count);
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    return out;
}

}  // namespace hemogen
