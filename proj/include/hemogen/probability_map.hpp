#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hemogen/errors.hpp"
#include "hemogen/fenwick.hpp"
#include "hemogen/grid.hpp"
#include "hemogen/image_io.hpp"
#include "hemogen/random.hpp"

namespace hemogen {

/// Parameters of the evolving location density.
struct SamplerParams {
    static constexpr double kDefaultCellSize = 46.0;
    static constexpr int kDefaultWarmup = 20;

    double cell_size = kDefaultCellSize;
    double sigma = sigma_for(kDefaultCellSize);
    int n_init = kDefaultWarmup;
    int support_radius = radius_for(sigma_for(kDefaultCellSize));

    /// Gaussian sigma whose half width at half maximum equals `cell_size`.
    static double sigma_for(double cell_size) { return cell_size / std::sqrt(2.0 * std::numbers::ln2); }
    static int radius_for(double sigma) { return static_cast<int>(std::ceil(3.0 * sigma)); }

    static SamplerParams for_cell_size(double cell_size, int n_init = kDefaultWarmup) {
        SamplerParams p;
        p.cell_size = cell_size;
        p.sigma = sigma_for(cell_size);
        p.n_init = n_init;
        p.support_radius = radius_for(p.sigma);
        return p;
    }

    /// Blend weight for step i: a harmonic progression.
    static double blend_weight(long long i) { return 1.0 / static_cast<double>(i); }

    void validate() const {
        if (!(sigma > 0.0)) throw ValidationError("sampler sigma must be positive");
        if (!(cell_size > 0.0)) throw ValidationError("sampler cell_size must be positive");
        if (n_init < 1) throw ValidationError("sampler n_init must be at least 1");
        if (support_radius < cell_size) throw ValidationError("sampler support_radius must be >= cell_size");
    }
};

/// Unnormalized excitation at distance r from a placed center, with G_max = 1.
/// Inside the cell radius the Gaussian is flipped (1 - G), which meets the
/// outer branch at r = cell_size because G(cell_size) = 1/2 there.
inline double excitation_value(double r, const SamplerParams& p) {
    if (r > p.support_radius) return 0.0;
    const double g = std::exp(-r * r / (2.0 * p.sigma * p.sigma));
    return r <= p.cell_size ? 1.0 - g : g;
}

/// Excitation clipped to the image and normalized to unit mass.
struct ExcitationPatch {
    Pixel center;
    Box window;               // image coordinates
    Grid<double> values;      // window-local, sums to 1
};

inline ExcitationPatch excitation(Pixel l, const SamplerParams& p, int width, int height) {
    const int r = p.support_radius;
    const Box window = intersect({l.x - r, l.y - r, 2 * r + 1, 2 * r + 1}, {0, 0, width, height});
    ExcitationPatch patch{l, window, Grid<double>(window.w, window.h, 0.0)};
    double mass = 0.0;
    for (int y = 0; y < window.h; ++y) {
        for (int x = 0; x < window.w; ++x) {
            const double dx = window.x + x - l.x, dy = window.y + y - l.y;
            const double v = excitation_value(std::sqrt(dx * dx + dy * dy), p);
            patch.values(x, y) = v;
            mass += v;
        }
    }
    if (mass > 0.0)
        for (double& v : patch.values.values()) v /= mass;
    return patch;
}

/// Discrete location density over image pixels, evolved one placement at a time.
///
/// Storage is `density = raw * scale`. A blend step multiplies the whole map
/// by (1 - a), which is folded into `scale`; only pixels under the new patch
/// touch `raw` and the sampling index. The index is a Fenwick tree per row
/// plus one over row totals, so draws and point updates cost O(log area).
class ProbabilityMap {
public:
    ProbabilityMap(int width, int height, SamplerParams params = {}) : params_(params) {
        if (width < 1 || height < 1) throw ValidationError("probability map dimensions must be positive");
        params_.validate();
        raw_ = Grid<double>(width, height, 1.0);
        scale_ = 1.0 / static_cast<double>(raw_.size());
        build_kernel();
        rebuild_index();
    }

    /// Map with an arbitrary density, normalized to unit mass. `step_index`
    /// resumes the chain after that many placements; it must be 0 or at least
    /// n_init, since warm-up locations are not part of the density.
    static ProbabilityMap from_density(const Grid<double>& density, SamplerParams params = {},
                                       long long step_index = 0) {
        ProbabilityMap m(density.width(), density.height(), params);
        if (step_index < 0 || (step_index > 0 && step_index < params.n_init))
            throw ValidationError("from_density: step_index must be 0 or >= n_init");
        m.step_ = step_index;
        for (std::size_t i = 0; i < density.size(); ++i) {
            if (!(density[i] >= 0.0)) throw ValidationError("density values must be non-negative");
            m.raw_[i] = density[i];
        }
        m.rebuild_index();
        m.scale_ = 1.0;
        m.renormalize();
        return m;
    }

    int width() const { return raw_.width(); }
    int height() const { return raw_.height(); }
    const SamplerParams& params() const { return params_; }

    /// Number of placements recorded so far.
    long long step_index() const { return step_; }

    double density(int x, int y) const { return raw_(x, y) * scale_; }

    Grid<double> density_grid() const {
        Grid<double> out(width(), height());
        for (std::size_t i = 0; i < raw_.size(); ++i) out[i] = raw_[i] * scale_;
        return out;
    }

    /// Total mass according to the sampling index.
    double total() const { return row_index_.total() * scale_; }

    /// Records the placement at `l` and moves the density to the one used for
    /// the next draw:
    ///   - while fewer than n_init cells are placed the map stays uniform;
    ///   - after the n_init-th placement it becomes the mean excitation of the
    ///     warm-up locations;
    ///   - afterwards P <- (1 - a) P + a z(l) with a = 1/i, i being the index
    ///     of the cell about to be drawn.
    void advance(Pixel l) {
        if (!raw_.contains(l)) throw ValidationError("placement location outside the probability map");
        ++step_;
        if (step_ < params_.n_init) {
            warmup_.push_back(l);
        } else if (step_ == params_.n_init) {
            warmup_.push_back(l);
            raw_.fill(0.0);
            const double w = 1.0 / static_cast<double>(warmup_.size());
            for (Pixel c : warmup_) add_patch(c, w, false);
            warmup_.clear();
            warmup_.shrink_to_fit();
            rebuild_index();
            scale_ = 1.0;
            renormalize();
        } else {
            const double a = SamplerParams::blend_weight(step_ + 1);
            scale_ *= 1.0 - a;
            add_patch(l, a / scale_, true);
            renormalize();
        }
    }

    /// Warm-up batch: records every location in order.
    void advance(std::span<const Pixel> batch) {
        for (Pixel l : batch) advance(l);
    }

    /// Hard-zeroes the given pixels (used to exclude occupied area) and renormalizes.
    void suppress(std::span<const Pixel> pixels) {
        for (Pixel p : pixels) {
            if (!raw_.contains(p)) continue;
            double& v = raw_(p.x, p.y);
            if (v == 0.0) continue;
            rows_[static_cast<std::size_t>(p.y)].add(static_cast<std::size_t>(p.x), -v);
            row_index_.add(static_cast<std::size_t>(p.y), -v);
            v = 0.0;
        }
        renormalize();
    }

    /// Draws a pixel with probability proportional to its density.
    Pixel sample(Rng& rng) const {
        const double total_raw = row_index_.total();
        if (!(total_raw > 0.0)) throw ValidationError("cannot sample from a map with zero mass");
        double u = rng.uniform() * total_raw;
        std::size_t y = row_index_.find(u);
        u -= row_index_.prefix(y);
        while (!(rows_[y].total() > 0.0)) {
            // Rounding landed on an empty row; take the next non-empty one.
            y = (y + 1) % rows_.size();
            u = 0.0;
        }
        const Fenwick<double>& row = rows_[y];
        u = std::clamp(u, 0.0, std::nextafter(row.total(), 0.0));
        std::size_t x = row.find(u);
        if (raw_(static_cast<int>(x), static_cast<int>(y)) <= 0.0) x = nearest_positive(static_cast<int>(y), x);
        return {static_cast<int>(x), static_cast<int>(y)};
    }

    /// Largest |prefix sum| disagreement between the sampling index and the
    /// density, over every row prefix and every row-total prefix.
    double max_index_discrepancy() const {
        double worst = 0.0;
        long double rows_acc = 0;
        for (int y = 0; y < height(); ++y) {
            long double acc = 0;
            const auto& row = rows_[static_cast<std::size_t>(y)];
            for (int x = 0; x < width(); ++x) {
                acc += raw_(x, y);
                const double d = std::abs(static_cast<double>(acc) - row.prefix(static_cast<std::size_t>(x) + 1));
                worst = std::max(worst, d * scale_);
            }
            rows_acc += acc;
            const double d = std::abs(static_cast<double>(rows_acc) - row_index_.prefix(static_cast<std::size_t>(y) + 1));
            worst = std::max(worst, d * scale_);
        }
        return worst;
    }

    /// 32-bit float copy of the density, for debug dumps.
    FloatImage to_float_image() const {
        FloatImage out(width(), height());
        for (std::size_t i = 0; i < raw_.size(); ++i) out[i] = static_cast<float>(raw_[i] * scale_);
        return out;
    }

private:
    void build_kernel() {
        const int r = params_.support_radius;
        kernel_ = Grid<double>(2 * r + 1, 2 * r + 1, 0.0);
        for (int y = -r; y <= r; ++y)
            for (int x = -r; x <= r; ++x)
                kernel_(x + r, y + r) = excitation_value(std::sqrt(static_cast<double>(x * x + y * y)), params_);
    }

    void rebuild_index() {
        rows_.resize(static_cast<std::size_t>(height()));
        std::vector<double> totals(static_cast<std::size_t>(height()));
        for (int y = 0; y < height(); ++y) {
            rows_[static_cast<std::size_t>(y)].assign(raw_.row(y));
            long double acc = 0;
            for (double v : raw_.row(y)) acc += v;
            totals[static_cast<std::size_t>(y)] = static_cast<double>(acc);
        }
        row_index_.assign(totals);
    }

    /// Adds weight * z(c) (z normalized over its visible window) into raw.
    void add_patch(Pixel c, double weight, bool update_index) {
        const int r = params_.support_radius;
        const Box window = intersect({c.x - r, c.y - r, 2 * r + 1, 2 * r + 1}, {0, 0, width(), height()});
        double mass = 0.0;
        for (int y = window.y; y < window.bottom(); ++y)
            for (int x = window.x; x < window.right(); ++x) mass += kernel_(x - c.x + r, y - c.y + r);
        if (!(mass > 0.0)) return;
        const double k = weight / mass;
        for (int y = window.y; y < window.bottom(); ++y) {
            double row_delta = 0.0;
            auto& row = rows_[static_cast<std::size_t>(y)];
            for (int x = window.x; x < window.right(); ++x) {
                const double kv = kernel_(x - c.x + r, y - c.y + r);
                if (kv == 0.0) continue;
                const double d = k * kv;
                raw_(x, y) += d;
                row_delta += d;
                if (update_index) row.add(static_cast<std::size_t>(x), d);
            }
            if (update_index) row_index_.add(static_cast<std::size_t>(y), row_delta);
        }
    }

    void renormalize() {
        const double t = row_index_.total();
        if (t > 0.0) scale_ = 1.0 / t;
    }

    std::size_t nearest_positive(int y, std::size_t x) const {
        for (std::size_t d = 1; d < static_cast<std::size_t>(width()); ++d) {
            if (x + d < static_cast<std::size_t>(width()) && raw_(static_cast<int>(x + d), y) > 0.0) return x + d;
            if (d <= x && raw_(static_cast<int>(x - d), y) > 0.0) return x - d;
        }
        return x;
    }

    SamplerParams params_;
    Grid<double> raw_;
    double scale_ = 1.0;
    long long step_ = 0;
    std::vector<Pixel> warmup_;
    Grid<double> kernel_;
    std::vector<Fenwick<double>> rows_;
    Fenwick<double> row_index_;
};

/// False-color rendering of a density grid (black -> red -> yellow -> white),
/// scaled by the grid maximum.
inline RgbImage false_color(const Grid<double>& density) {
    double peak = 0.0;
    for (double v : density.values()) peak = std::max(peak, v);
    RgbImage out(density.width(), density.height());
    for (std::size_t i = 0; i < density.size(); ++i) {
        const double t = peak > 0.0 ? std::clamp(density[i] / peak, 0.0, 1.0) : 0.0;
        auto ch = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
        out[i] = {ch(3.0 * t), ch(3.0 * t - 1.0), ch(3.0 * t - 2.0)};
    }
    return out;
}

}  // namespace hemogen
