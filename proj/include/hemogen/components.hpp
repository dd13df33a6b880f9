#pragma once

#include <cstdint>
#include <vector>

#include "hemogen/grid.hpp"

namespace hemogen {

enum class Connectivity { four = 4, eight = 8 };

struct ComponentLabels {
    Grid<std::int32_t> labels;  // 0 = not part of any component, otherwise 1..count
    int count = 0;
};

/// Labels connected components in row-major discovery order, so component k
/// is the one whose first pixel in raster order comes k-th.
///
/// `in_set(x, y)` selects candidate pixels; `joins(x0, y0, x1, y1)` decides
/// whether two neighboring candidates belong together.
template <typename InSet, typename Joins>
ComponentLabels label_components(int width, int height, Connectivity conn, InSet&& in_set, Joins&& joins) {
    static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int neighbors = conn == Connectivity::eight ? 8 : 4;

    ComponentLabels out{Grid<std::int32_t>(width, height, 0), 0};
    std::vector<Pixel> stack;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (out.labels(x, y) != 0 || !in_set(x, y)) continue;
            const int id = ++out.count;
            out.labels(x, y) = id;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                for (int k = 0; k < neighbors; ++k) {
                    const int nx = p.x + kDx[k];
                    const int ny = p.y + kDy[k];
                    if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                    if (out.labels(nx, ny) != 0 || !in_set(nx, ny) || !joins(p.x, p.y, nx, ny)) continue;
                    out.labels(nx, ny) = id;
                    stack.push_back({nx, ny});
                }
            }
        }
    }
    return out;
}

/// Components of the set pixels of a binary grid.
inline ComponentLabels label_binary(const BinaryGrid& g, Connectivity conn) {
    return label_components(
        g.width(), g.height(), conn, [&](int x, int y) { return g(x, y) != 0; },
        [](int, int, int, int) { return true; });
}

/// Keeps only the largest component (ties go to the earliest in raster order).
/// Returns the number of pixels removed.
inline long long keep_largest_component(BinaryGrid& g, Connectivity conn) {
    const ComponentLabels cc = label_binary(g, conn);
    if (cc.count <= 1) return 0;
    std::vector<long long> sizes(static_cast<std::size_t>(cc.count) + 1, 0);
    for (std::size_t i = 0; i < g.size(); ++i) ++sizes[static_cast<std::size_t>(cc.labels[i])];
    int best = 1;
    for (int k = 2; k <= cc.count; ++k)
        if (sizes[static_cast<std::size_t>(k)] > sizes[static_cast<std::size_t>(best)]) best = k;
    long long removed = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] && cc.labels[i] != best) {
            g[i] = 0;
            ++removed;
        }
    }
    return removed;
}

/// Bounding box of set pixels; empty box when nothing is set.
inline Box bounding_box(const BinaryGrid& g) {
    int x0 = g.width(), y0 = g.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            if (!g(x, y)) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

inline BinaryGrid crop(const BinaryGrid& g, const Box& b) {
    BinaryGrid out(b.w, b.h, 0);
    for (int y = 0; y < b.h; ++y)
        for (int x = 0; x < b.w; ++x) out(x, y) = g(b.x + x, b.y + y);
    return out;
}

}  // namespace hemogen
