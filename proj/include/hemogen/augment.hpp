#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "hemogen/components.hpp"
#include "hemogen/errors.hpp"
#include "hemogen/instance_mask.hpp"
#include "hemogen/random.hpp"

namespace hemogen {

struct AugmentationConfig {
    double rotation_min = 0.0;  // degrees
    double rotation_max = 360.0;
    double scale_min = 0.8;
    double scale_max = 1.2;
    double flip_horizontal_prob = 0.5;
    double flip_vertical_prob = 0.5;

    static AugmentationConfig identity() { return {0.0, 0.0, 1.0, 1.0, 0.0, 0.0}; }

    void validate() const {
        if (!(scale_min > 0.0) || !(scale_max >= scale_min)) throw ValidationError("augmentation scale range must be positive and ordered");
        if (!(rotation_max >= rotation_min)) throw ValidationError("augmentation rotation range must be ordered");
        for (double p : {flip_horizontal_prob, flip_vertical_prob})
            if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("flip probabilities must lie in [0, 1]");
    }
};

/// Rotation is in degrees, clockwise as displayed (image y axis points down),
/// applied about the bitmap center together with the scale; flips follow.
struct ShapeTransform {
    double rotation = 0.0;
    double scale = 1.0;
    bool flip_horizontal = false;
    bool flip_vertical = false;

    friend bool operator==(const ShapeTransform&, const ShapeTransform&) = default;
};

/// Nearest-neighbor resampling of a shape. The result is re-tightened and
/// reduced to its largest 4-connected part; nullopt if nothing survives.
inline std::optional<CellShape> apply_transform(const CellShape& src, const ShapeTransform& t) {
    const BinaryGrid& in = src.bitmap;
    const double rad = t.rotation * std::numbers::pi / 180.0;
    double c = std::cos(rad), s = std::sin(rad);
    // Snap values that are zero or one up to rounding, so quarter turns are exact.
    if (std::abs(c) < 1e-12) c = 0.0;
    if (std::abs(s) < 1e-12) s = 0.0;
    const double w = in.width(), h = in.height();
    constexpr double kEps = 1e-9;
    const int out_w = std::max(1, static_cast<int>(std::ceil(t.scale * (std::abs(c) * w + std::abs(s) * h) - kEps)));
    const int out_h = std::max(1, static_cast<int>(std::ceil(t.scale * (std::abs(s) * w + std::abs(c) * h) - kEps)));
    const double ocx = (out_w - 1) / 2.0, ocy = (out_h - 1) / 2.0;
    const double icx = (w - 1) / 2.0, icy = (h - 1) / 2.0;

    BinaryGrid out(out_w, out_h, 0);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const double ox = x - ocx, oy = y - ocy;
            const double sx = (c * ox + s * oy) / t.scale + icx;
            const double sy = (-s * ox + c * oy) / t.scale + icy;
            const int ix = static_cast<int>(std::floor(sx + 0.5));
            const int iy = static_cast<int>(std::floor(sy + 0.5));
            if (in.contains(ix, iy) && in(ix, iy)) {
                const int tx = t.flip_horizontal ? out_w - 1 - x : x;
                const int ty = t.flip_vertical ? out_h - 1 - y : y;
                out(tx, ty) = 1;
            }
        }
    }
    keep_largest_component(out, Connectivity::four);
    const Box b = bounding_box(out);
    if (b.empty()) return std::nullopt;
    return make_shape(crop(out, b), src.source_mask, src.source_region);
}

inline ShapeTransform sample_transform(const AugmentationConfig& cfg, Rng& rng) {
    ShapeTransform t;
    t.rotation = rng.uniform(cfg.rotation_min, cfg.rotation_max);
    t.scale = rng.uniform(cfg.scale_min, cfg.scale_max);
    t.flip_horizontal = rng.bernoulli(cfg.flip_horizontal_prob);
    t.flip_vertical = rng.bernoulli(cfg.flip_vertical_prob);
    return t;
}

struct SampledShape {
    std::size_t shape_id = 0;
    ShapeTransform transform;
    CellShape shape;
};

/// Uniformly picks an exemplar and augments it, retrying if the augmented
/// shape vanishes.
inline SampledShape sample_shape(std::span<const CellShape> shapes, const AugmentationConfig& cfg, Rng& rng) {
    if (shapes.empty()) throw ValidationError("shape database is empty");
    constexpr int kMaxAttempts = 1000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::size_t id = rng.below(shapes.size());
        const ShapeTransform t = sample_transform(cfg, rng);
        if (auto s = apply_transform(shapes[id], t)) return {id, t, std::move(*s)};
    }
    throw Error(ErrorKind::internal, "augmentation produced empty shapes repeatedly");
}

}  // namespace hemogen
