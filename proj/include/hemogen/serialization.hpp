#pragma once

// JSON forms of synthesis configs, synthesis records and detection lists.

#include <zlib.h>

#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "hemogen/errors.hpp"
#include "hemogen/metrics.hpp"
#include "hemogen/synth.hpp"

namespace hemogen {

using nlohmann::json;

inline json rgb_to_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

inline Rgb rgb_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("color must be an [r, g, b] array");
    Rgb c;
    std::uint8_t* ch[3] = {&c.r, &c.g, &c.b};
    for (std::size_t i = 0; i < 3; ++i) {
        const int v = j[i].get<int>();
        if (v < 0 || v > 255) throw ValidationError("color channel out of range");
        *ch[i] = static_cast<std::uint8_t>(v);
    }
    return c;
}

inline json synthesis_to_json(const SynthesisConfig& c) {
    json palette = json::array();
    for (const Rgb& p : c.palette) palette.push_back(rgb_to_json(p));
    return {
        {"width", c.width},
        {"height", c.height},
        {"mu_n", c.mu_n},
        {"sigma_n", c.sigma_n},
        {"cell_count", c.cell_count ? json(*c.cell_count) : json(nullptr)},
        {"strategy", to_string(c.strategy)},
        {"seed", c.seed},
        {"max_location_retries", c.max_location_retries},
        {"max_color_retries", c.max_color_retries},
        {"max_coverage", c.max_coverage},
        {"mean_cell_area", c.mean_cell_area},
        {"zero_occupied", c.zero_occupied},
        {"sampler",
         {{"cell_size", c.sampler.cell_size},
          {"sigma", c.sampler.sigma},
          {"n_init", c.sampler.n_init},
          {"support_radius", c.sampler.support_radius}}},
        {"augmentation",
         {{"rotation", {c.augmentation.rotation_min, c.augmentation.rotation_max}},
          {"scale", {c.augmentation.scale_min, c.augmentation.scale_max}},
          {"flip_horizontal_prob", c.augmentation.flip_horizontal_prob},
          {"flip_vertical_prob", c.augmentation.flip_vertical_prob}}},
        {"palette", palette},
        {"background", rgb_to_json(c.background)},
    };
}

/// Overlays the keys present in `j` onto `base`. Setting sampler.cell_size
/// without sigma/support_radius re-derives them from the new cell size.
inline SynthesisConfig synthesis_from_json(const json& j, SynthesisConfig base = {}) {
    try {
        auto take = [&](const json& obj, const char* key, auto& field) {
            if (obj.contains(key) && !obj.at(key).is_null()) field = obj.at(key).get<std::decay_t<decltype(field)>>();
        };
        take(j, "width", base.width);
        take(j, "height", base.height);
        take(j, "mu_n", base.mu_n);
        take(j, "sigma_n", base.sigma_n);
        if (j.contains("cell_count")) {
            if (j.at("cell_count").is_null()) base.cell_count.reset();
            else base.cell_count = j.at("cell_count").get<int>();
        }
        if (j.contains("strategy")) base.strategy = parse_strategy(j.at("strategy").get<std::string>());
        take(j, "seed", base.seed);
        take(j, "max_location_retries", base.max_location_retries);
        take(j, "max_color_retries", base.max_color_retries);
        take(j, "max_coverage", base.max_coverage);
        take(j, "mean_cell_area", base.mean_cell_area);
        take(j, "zero_occupied", base.zero_occupied);
        if (j.contains("sampler")) {
            const json& s = j.at("sampler");
            if (s.contains("cell_size")) {
                base.sampler = SamplerParams::for_cell_size(s.at("cell_size").get<double>(), base.sampler.n_init);
            }
            take(s, "sigma", base.sampler.sigma);
            if (s.contains("sigma") && !s.contains("support_radius"))
                base.sampler.support_radius = SamplerParams::radius_for(base.sampler.sigma);
            take(s, "n_init", base.sampler.n_init);
            take(s, "support_radius", base.sampler.support_radius);
        }
        if (j.contains("augmentation")) {
            const json& a = j.at("augmentation");
            if (a.contains("rotation")) {
                base.augmentation.rotation_min = a.at("rotation").at(0).get<double>();
                base.augmentation.rotation_max = a.at("rotation").at(1).get<double>();
            }
            if (a.contains("scale")) {
                base.augmentation.scale_min = a.at("scale").at(0).get<double>();
                base.augmentation.scale_max = a.at("scale").at(1).get<double>();
            }
            take(a, "flip_horizontal_prob", base.augmentation.flip_horizontal_prob);
            take(a, "flip_vertical_prob", base.augmentation.flip_vertical_prob);
        }
        if (j.contains("palette")) {
            base.palette.clear();
            for (const json& p : j.at("palette")) base.palette.push_back(rgb_from_json(p));
        }
        if (j.contains("background")) base.background = rgb_from_json(j.at("background"));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad synthesis config: ") + e.what());
    }
    return base;
}

inline std::string crc32_hex(const std::string& s) {
    const uLong crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size()));
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

/// Hash of the resolved config with the seed removed, so all jobs of one
/// batch share it.
inline std::string config_hash(const SynthesisConfig& c) {
    json j = synthesis_to_json(c);
    j.erase("seed");
    return crc32_hex(j.dump());
}

inline json box_to_json(const Box& b) { return json::array({b.x, b.y, b.w, b.h}); }

/// Sidecar metadata for one generated mask. Timing is deliberately left out
/// so identical seeds give byte-identical files.
inline json record_to_json(const SynthesisRecord& r) {
    json palette = json::array();
    for (std::size_t i = 0; i < r.config.palette.size(); ++i)
        palette.push_back({{"color_id", i}, {"rgb", rgb_to_json(r.config.palette[i])}});
    json cells = json::array();
    for (const PlacedCell& c : r.placed) {
        cells.push_back({
            {"shape_id", c.shape_id},
            {"transform",
             {{"rotation", c.transform.rotation},
              {"scale", c.transform.scale},
              {"flip_horizontal", c.transform.flip_horizontal},
              {"flip_vertical", c.transform.flip_vertical}}},
            {"location", {c.location.x, c.location.y}},
            {"color_id", c.color_id},
            {"bbox", box_to_json(c.bbox)},
            {"area", c.area},
            {"clipped", c.clipped},
        });
    }
    return {
        {"format", "hemogen-synthesis-record"},
        {"format_version", 1},
        {"seed", r.seed},
        {"strategy", to_string(r.config.strategy)},
        {"config", synthesis_to_json(r.config)},
        {"config_hash", config_hash(r.config)},
        {"background", rgb_to_json(r.config.background)},
        {"palette", palette},
        {"drawn_count", r.drawn_count},
        {"count_cap", r.count_cap},
        {"count_capped", r.count_capped},
        {"placed_count", r.placed.size()},
        {"location_attempts", r.location_attempts},
        {"rejected",
         {{"overlap", r.rejected.overlap},
          {"color", r.rejected.color},
          {"border", r.rejected.border},
          {"shape_resamples", r.rejected.shape_resamples},
          {"abandoned", r.rejected.abandoned}}},
        {"warnings", r.warnings},
        {"cells", cells},
    };
}

/// Reads boxes (and scores, default 1) from any of: a synthesis record
/// sidecar, {"detections": [...]}, or a bare array of {"bbox": [x, y, w, h],
/// "score": s} objects.
inline std::vector<Detection> detections_from_json(const json& j) {
    try {
        const json* list = &j;
        if (j.is_object() && j.contains("cells")) list = &j.at("cells");
        else if (j.is_object() && j.contains("detections")) list = &j.at("detections");
        if (!list->is_array()) throw ValidationError("expected an array of boxes");
        std::vector<Detection> out;
        for (const json& d : *list) {
            const json& b = d.at("bbox");
            Detection det{{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()},
                          d.value("score", 1.0)};
            if (!(det.bbox.w > 0 && det.bbox.h > 0)) throw ValidationError("box with non-positive size");
            out.push_back(det);
        }
        return out;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad detection list: ") + e.what());
    }
}

inline json ap_to_json(const ApResult& r) {
    json curve = json::array();
    for (const PrPoint& p : r.curve) curve.push_back({p.recall, p.precision});
    return {{"ap", r.ap},
            {"true_positives", r.true_positives},
            {"false_positives", r.false_positives},
            {"false_negatives", r.false_negatives},
            {"precision", r.precision},
            {"recall", r.recall},
            {"pr_curve", curve}};
}

inline json adhesion_to_json(const AdhesionStats& s) {
    json hist = json::object();
    for (const auto& [size, n] : s.cluster_size_histogram) hist[std::to_string(size)] = n;
    return {{"n_cells", s.n_cells},
            {"touch_fraction", s.touch_fraction},
            {"nn_center_distances", s.nn_center_distances},
            {"nn_histogram", {{"bin_width", s.nn_bin_width}, {"counts", s.nn_histogram}}},
            {"cluster_sizes", s.cluster_sizes},
            {"cluster_size_histogram", hist}};
}

}  // namespace hemogen
