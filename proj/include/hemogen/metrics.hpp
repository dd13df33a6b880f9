#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "hemogen/components.hpp"
#include "hemogen/errors.hpp"
#include "hemogen/grid.hpp"
#include "hemogen/image_io.hpp"
#include "hemogen/instance_mask.hpp"

namespace hemogen {

// ---------------------------------------------------------------------------
// Dice

/// 2|p.t| / (|p|^2 + |t|^2) over binary masks; two empty masks score 1.
inline double dice(const BinaryGrid& prediction, const BinaryGrid& target) {
    if (prediction.width() != target.width() || prediction.height() != target.height())
        throw ValidationError("dice: mask dimensions differ");
    long long inter = 0, p = 0, t = 0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const bool a = prediction[i] != 0, b = target[i] != 0;
        p += a;
        t += b;
        inter += a && b;
    }
    if (p + t == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(p + t);
}

/// Foreground of an instance mask (any non-background pixel).
inline BinaryGrid foreground(const InstanceMask& m) {
    BinaryGrid g(m.width(), m.height(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = m.ids()[i] != InstanceMask::kBackground;
    return g;
}

// ---------------------------------------------------------------------------
// Instance extraction from objectness + contour maps

struct InstanceParams {
    double objectness_threshold = 0.5;
    double contour_threshold = 0.5;
    long long min_blob_size = 50;
    /// Dilation steps used to grow blobs back over the contour band.
    int contour_width = 2;
};

struct InstanceComponent {
    int id = 0;
    Box bbox;
    long long area = 0;
};

struct InstanceExtraction {
    Grid<std::int32_t> labels;  // 0 = background, otherwise 1..K
    std::vector<InstanceComponent> components;
};

/// Blobs of (objectness >= t_o) AND (contour < t_c), 8-connected, with blobs
/// smaller than min_blob_size dropped. Survivors are then grown one pixel
/// ring per step for contour_width steps, only into objectness-foreground
/// pixels that border exactly one blob, so blobs never merge.
inline InstanceExtraction extract_instances(const FloatImage& objectness, const FloatImage& contour,
                                            const InstanceParams& params = {}) {
    if (objectness.width() != contour.width() || objectness.height() != contour.height())
        throw ValidationError("extract_instances: map dimensions differ");
    const int w = objectness.width(), h = objectness.height();
    auto object = [&](int x, int y) { return objectness(x, y) >= params.objectness_threshold; };
    const auto cc = label_components(
        w, h, Connectivity::eight, [&](int x, int y) { return object(x, y) && contour(x, y) < params.contour_threshold; },
        [](int, int, int, int) { return true; });

    std::vector<long long> sizes(static_cast<std::size_t>(cc.count) + 1, 0);
    for (std::size_t i = 0; i < cc.labels.size(); ++i) ++sizes[static_cast<std::size_t>(cc.labels[i])];
    std::vector<std::int32_t> remap(static_cast<std::size_t>(cc.count) + 1, 0);
    std::int32_t kept = 0;
    for (int k = 1; k <= cc.count; ++k)
        if (sizes[static_cast<std::size_t>(k)] >= params.min_blob_size) remap[static_cast<std::size_t>(k)] = ++kept;

    InstanceExtraction out{Grid<std::int32_t>(w, h, 0), {}};
    for (std::size_t i = 0; i < cc.labels.size(); ++i) out.labels[i] = remap[static_cast<std::size_t>(cc.labels[i])];

    for (int step = 0; step < params.contour_width; ++step) {
        const Grid<std::int32_t> prev = out.labels;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (prev(x, y) != 0 || !object(x, y)) continue;
                std::int32_t found = 0;
                bool ambiguous = false;
                for (int dy = -1; dy <= 1 && !ambiguous; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!prev.contains(x + dx, y + dy)) continue;
                        const std::int32_t l = prev(x + dx, y + dy);
                        if (l == 0 || l == found) continue;
                        if (found != 0) {
                            ambiguous = true;
                            break;
                        }
                        found = l;
                    }
                }
                if (found != 0 && !ambiguous) out.labels(x, y) = found;
            }
        }
    }

    std::vector<std::array<int, 4>> ext(static_cast<std::size_t>(kept), {w, h, -1, -1});
    std::vector<long long> area(static_cast<std::size_t>(kept), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::int32_t l = out.labels(x, y);
            if (!l) continue;
            auto& e = ext[static_cast<std::size_t>(l - 1)];
            e[0] = std::min(e[0], x);
            e[1] = std::min(e[1], y);
            e[2] = std::max(e[2], x);
            e[3] = std::max(e[3], y);
            ++area[static_cast<std::size_t>(l - 1)];
        }
    }
    for (int k = 0; k < kept; ++k) {
        const auto& e = ext[static_cast<std::size_t>(k)];
        out.components.push_back({k + 1, {e[0], e[1], e[2] - e[0] + 1, e[3] - e[1] + 1}, area[static_cast<std::size_t>(k)]});
    }
    return out;
}

/// Objectness and contour maps derived from a ground-truth instance mask: the
/// contour band holds every cell pixel within Chebyshev distance
/// `contour_width` of a pixel outside that cell (image borders do not count).
struct InstanceMaps {
    FloatImage objectness;
    FloatImage contour;
};

inline InstanceMaps instance_maps(const InstanceMask& mask, int contour_width = 2) {
    const auto& ids = mask.ids();
    const auto cc = label_components(
        mask.width(), mask.height(), Connectivity::eight,
        [&](int x, int y) { return ids(x, y) != InstanceMask::kBackground; },
        [&](int x0, int y0, int x1, int y1) { return ids(x0, y0) == ids(x1, y1); });
    InstanceMaps maps{FloatImage(mask.width(), mask.height(), 0.0f), FloatImage(mask.width(), mask.height(), 0.0f)};
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const std::int32_t l = cc.labels(x, y);
            if (!l) continue;
            maps.objectness(x, y) = 1.0f;
            bool edge = false;
            for (int dy = -contour_width; dy <= contour_width && !edge; ++dy)
                for (int dx = -contour_width; dx <= contour_width && !edge; ++dx)
                    if (cc.labels.contains(x + dx, y + dy) && cc.labels(x + dx, y + dy) != l) edge = true;
            if (edge) maps.contour(x, y) = 1.0f;
        }
    }
    return maps;
}

// ---------------------------------------------------------------------------
// Average precision

struct BoxF {
    double x = 0, y = 0, w = 0, h = 0;

    static BoxF from(const Box& b) { return {double(b.x), double(b.y), double(b.w), double(b.h)}; }
    friend bool operator==(const BoxF&, const BoxF&) = default;
};

inline double iou(const BoxF& a, const BoxF& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

struct Detection {
    BoxF bbox;
    double score = 1.0;
};

enum class ApInterpolation { all_points, eleven_point };

struct PrPoint {
    double recall = 0;
    double precision = 0;
};

struct ApResult {
    double ap = 0.0;
    std::vector<PrPoint> curve;  // one point per ranked detection
    long long true_positives = 0;
    long long false_positives = 0;
    long long false_negatives = 0;
    double precision = 0.0;  // at the last ranked detection
    double recall = 0.0;
};

/// Ranks detections by descending score (stable for ties), matches each
/// greedily to the unmatched ground-truth box of highest IoU >= threshold,
/// and integrates the precision envelope over recall.
inline ApResult match_and_ap(std::span<const Detection> detections, std::span<const BoxF> ground_truth,
                             double iou_threshold = 0.5, ApInterpolation mode = ApInterpolation::all_points) {
    ApResult r;
    const auto n_gt = static_cast<long long>(ground_truth.size());
    if (detections.empty()) {
        r.ap = n_gt == 0 ? 1.0 : 0.0;
        r.false_negatives = n_gt;
        r.precision = n_gt == 0 ? 1.0 : 0.0;
        r.recall = n_gt == 0 ? 1.0 : 0.0;
        return r;
    }
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });

    std::vector<char> matched(ground_truth.size(), 0);
    long long tp = 0, fp = 0;
    for (std::size_t idx : order) {
        double best = iou_threshold;
        std::ptrdiff_t hit = -1;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (matched[g]) continue;
            const double v = iou(detections[idx].bbox, ground_truth[g]);
            if (v >= best && (hit < 0 || v > best)) {
                best = v;
                hit = static_cast<std::ptrdiff_t>(g);
            }
        }
        if (hit >= 0) {
            matched[static_cast<std::size_t>(hit)] = 1;
            ++tp;
        } else {
            ++fp;
        }
        const double recall = n_gt ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0;
        r.curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    r.true_positives = tp;
    r.false_positives = fp;
    r.false_negatives = n_gt - tp;
    r.precision = r.curve.back().precision;
    r.recall = r.curve.back().recall;
    if (n_gt == 0) return r;  // detections without ground truth: AP 0

    // Precision envelope: best precision at this or any higher recall.
    std::vector<double> envelope(r.curve.size());
    double running = 0.0;
    for (std::size_t i = r.curve.size(); i-- > 0;) {
        running = std::max(running, r.curve[i].precision);
        envelope[i] = running;
    }
    if (mode == ApInterpolation::all_points) {
        double prev_recall = 0.0;
        for (std::size_t i = 0; i < r.curve.size(); ++i) {
            r.ap += (r.curve[i].recall - prev_recall) * envelope[i];
            prev_recall = r.curve[i].recall;
        }
    } else {
        for (int k = 0; k <= 10; ++k) {
            const double level = k / 10.0;
            double p = 0.0;
            for (std::size_t i = 0; i < r.curve.size(); ++i)
                if (r.curve[i].recall >= level - 1e-12) p = std::max(p, r.curve[i].precision);
            r.ap += p / 11.0;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Spatial adhesion statistics

struct AdhesionStats {
    int n_cells = 0;
    double touch_fraction = 0.0;
    std::vector<double> nn_center_distances;  // per cell, raster order
    std::vector<int> cluster_sizes;           // descending
    /// Histogram of nearest-neighbor distances, `nn_bin_width` pixels per bin.
    std::vector<int> nn_histogram;
    double nn_bin_width = 0.0;
    /// cluster size -> number of clusters of that size
    std::map<int, int> cluster_size_histogram;
};

inline AdhesionStats adhesion_stats(const InstanceMask& mask, double nn_bin_width = 4.0) {
    AdhesionStats st;
    st.nn_bin_width = nn_bin_width;
    const auto& ids = mask.ids();
    const auto cc = label_components(
        mask.width(), mask.height(), Connectivity::eight,
        [&](int x, int y) { return ids(x, y) != InstanceMask::kBackground; },
        [&](int x0, int y0, int x1, int y1) { return ids(x0, y0) == ids(x1, y1); });
    st.n_cells = cc.count;
    if (cc.count == 0) return st;

    const auto n = static_cast<std::size_t>(cc.count);
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a)
            a = parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
        return a;
    };
    std::vector<char> touches(n, 0);
    std::vector<double> sx(n, 0), sy(n, 0), cnt(n, 0);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const std::int32_t l = cc.labels(x, y);
            if (!l) continue;
            sx[static_cast<std::size_t>(l - 1)] += x;
            sy[static_cast<std::size_t>(l - 1)] += y;
            cnt[static_cast<std::size_t>(l - 1)] += 1;
            // Forward half of the 8-neighborhood covers every adjacent pair once.
            constexpr int kDx[4] = {1, -1, 0, 1};
            constexpr int kDy[4] = {0, 1, 1, 1};
            for (int k = 0; k < 4; ++k) {
                const int nx = x + kDx[k], ny = y + kDy[k];
                if (!cc.labels.contains(nx, ny)) continue;
                const std::int32_t m = cc.labels(nx, ny);
                if (!m || m == l) continue;
                touches[static_cast<std::size_t>(l - 1)] = touches[static_cast<std::size_t>(m - 1)] = 1;
                const int a = find(l - 1), b = find(m - 1);
                if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
            }
        }
    }
    st.touch_fraction =
        static_cast<double>(std::count(touches.begin(), touches.end(), 1)) / static_cast<double>(n);

    std::map<int, int> by_root;
    for (int i = 0; i < cc.count; ++i) ++by_root[find(i)];
    for (const auto& [root, size] : by_root) {
        st.cluster_sizes.push_back(size);
        ++st.cluster_size_histogram[size];
    }
    std::sort(st.cluster_sizes.rbegin(), st.cluster_sizes.rend());

    if (n >= 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = sx[i] / cnt[i], yi = sy[i] / cnt[i];
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double dx = sx[j] / cnt[j] - xi, dy = sy[j] / cnt[j] - yi;
                best = std::min(best, dx * dx + dy * dy);
            }
            const double d = std::sqrt(best);
            st.nn_center_distances.push_back(d);
            const auto bin = static_cast<std::size_t>(d / nn_bin_width);
            if (st.nn_histogram.size() <= bin) st.nn_histogram.resize(bin + 1, 0);
            ++st.nn_histogram[bin];
        }
    }
    return st;
}

// ---------------------------------------------------------------------------
// Two-sample comparison

struct SampleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;  // sample (n - 1)
    double std_error = 0.0;
};

inline SampleSummary summarize(std::span<const double> v) {
    SampleSummary s;
    s.n = v.size();
    if (v.empty()) return s;
    long double sum = 0;
    for (double x : v) sum += x;
    s.mean = static_cast<double>(sum / v.size());
    if (v.size() > 1) {
        long double ss = 0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stddev = static_cast<double>(std::sqrt(ss / (v.size() - 1)));
        s.std_error = s.stddev / std::sqrt(static_cast<double>(v.size()));
    }
    return s;
}

struct OneSidedTest {
    SampleSummary a;
    SampleSummary b;
    double t = 0.0;
    double dof = 0.0;
    double p_value = 1.0;  // H1: mean(a) > mean(b)
};

/// Welch's t-test of mean(a) > mean(b).
inline OneSidedTest welch_greater(std::span<const double> a, std::span<const double> b) {
    OneSidedTest r{summarize(a), summarize(b)};
    if (r.a.n < 2 || r.b.n < 2) return r;
    const double va = r.a.std_error * r.a.std_error, vb = r.b.std_error * r.b.std_error;
    const double se = std::sqrt(va + vb);
    if (!(se > 0.0)) {
        r.p_value = r.a.mean > r.b.mean ? 0.0 : 1.0;
        r.t = r.a.mean > r.b.mean ? std::numeric_limits<double>::infinity() : 0.0;
        return r;
    }
    r.t = (r.a.mean - r.b.mean) / se;
    r.dof = (va + vb) * (va + vb) /
            (va * va / static_cast<double>(r.a.n - 1) + vb * vb / static_cast<double>(r.b.n - 1));
    boost::math::students_t dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.t));
    return r;
}

}  // namespace hemogen
