#pragma once

// Synthetic stand-ins for annotated blood smear masks: elliptical cells with
// sizes around the typical red-cell extent. Used for demos and tests when no
// real annotations are at hand.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hemogen/components.hpp"
#include "hemogen/instance_mask.hpp"
#include "hemogen/random.hpp"
#include "hemogen/shape_db.hpp"
#include "hemogen/synth.hpp"

namespace hemogen::fixtures {

/// Filled ellipse with full axis lengths `major` x `minor`, rotated by `angle_deg`.
inline CellShape ellipse_shape(double major, double minor, double angle_deg, std::string source = "ellipse",
                               int region = 0) {
    const double a = major / 2.0, b = minor / 2.0;
    const int half = static_cast<int>(std::ceil(std::max(a, b))) + 1;
    const double t = angle_deg * std::numbers::pi / 180.0, c = std::cos(t), s = std::sin(t);
    BinaryGrid g(2 * half + 1, 2 * half + 1, 0);
    for (int y = -half; y <= half; ++y) {
        for (int x = -half; x <= half; ++x) {
            const double u = c * x + s * y, v = -s * x + c * y;
            if ((u * u) / (a * a) + (v * v) / (b * b) <= 1.0) g(x + half, y + half) = 1;
        }
    }
    keep_largest_component(g, Connectivity::four);
    return make_shape(crop(g, bounding_box(g)), std::move(source), region);
}

/// Exemplar set of ellipses with extent ~ N(mean_extent, std_extent) and
/// aspect ratios in [0.8, 1].
inline std::vector<CellShape> ellipse_shapes(int n, std::uint64_t seed, double mean_extent = 46.0,
                                             double std_extent = 5.0) {
    Rng rng(seed);
    std::vector<CellShape> out;
    for (int i = 0; i < n; ++i) {
        const double major = std::max(4.0, rng.normal(mean_extent, std_extent));
        const double minor = major * rng.uniform(0.8, 1.0);
        out.push_back(ellipse_shape(major, minor, rng.uniform(0.0, 180.0), "ellipse", i));
    }
    return out;
}

/// Database of ellipse exemplars whose stats are computed from the shapes
/// (one pseudo image) with the count distribution set to the given values.
inline ShapeDatabase ellipse_db(int n_shapes = 64, std::uint64_t seed = 1, double mu_n = 669.0,
                                double sigma_n = 149.0) {
    ShapeDatabase db;
    db.shapes = ellipse_shapes(n_shapes, seed);
    const std::vector<std::vector<CellShape>> one{db.shapes};
    db.stats = compute_stats_from_cells(one, 1920, 1200);
    db.stats.mu_n = mu_n;
    db.stats.sigma_n = sigma_n;
    return db;
}

/// Annotation-like mask: `cells` ellipses placed uniformly at random with the
/// touching-colors rule enforced.
inline InstanceMask annotated_mask(int width, int height, int cells, std::uint64_t seed,
                                   PlacementStrategy strategy = PlacementStrategy::uniform_random) {
    ShapeDatabase db;
    db.shapes = ellipse_shapes(32, seed ^ 0x9e3779b97f4a7c15ull);
    SynthesisConfig cfg;
    cfg.width = width;
    cfg.height = height;
    cfg.cell_count = cells;
    cfg.strategy = strategy;
    cfg.seed = seed;
    cfg.augmentation = AugmentationConfig::identity();
    return generate_mask(db, cfg).mask;
}

}  // namespace hemogen::fixtures
