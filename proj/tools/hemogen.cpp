// hemogen command-line front end.
//
// Exit codes: 0 success, 1 validation, 2 I/O, 3 internal.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hemogen/hemogen.hpp"

namespace fs = std::filesystem;
using namespace hemogen;

namespace {

std::vector<fs::path> list_pngs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::optional<Rgb> parse_rgb(const std::string& s) {
    if (s.empty() || s == "auto") return std::nullopt;
    int r = -1, g = -1, b = -1;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> r >> c1 >> g >> c2 >> b) || c1 != ',' || c2 != ',' || r < 0 || g < 0 || b < 0 || r > 255 ||
        g > 255 || b > 255)
        throw ValidationError("color must be given as R,G,B (got '" + s + "')");
    return Rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void emit(const json& report, const std::string& out) {
    const std::string text = report.dump(2) + "\n";
    if (out.empty()) std::cout << text;
    else write_text(out, text);
}

void print_table(const DatasetStats& s) {
    std::printf("%-22s %12s %12s\n", "", "mean", "std");
    std::printf("%-22s %12.1f %12.1f\n", "cells per image", s.mu_n, s.sigma_n);
    std::printf("%-22s %12.1f %12.1f\n", "cell extent (bbox)", s.mean_cell_extent, s.std_cell_extent);
    std::printf("%-22s %12.1f\n", "equivalent diameter", s.mean_equivalent_diameter);
    std::printf("%-22s %7.1f x %.1f\n", "ellipse axes", s.mean_ellipse_major, s.mean_ellipse_minor);
    std::printf("%-22s %12.1f\n", "cell area", s.mean_cell_area);
    std::printf("images: %d  cells: %lld  size: %dx%d\n", s.n_images, s.n_cells, s.image_width, s.image_height);
}

// ---------------------------------------------------------------------------

struct BuildDbArgs {
    std::string masks_dir;
    std::string out = "shapes.db.json";
    std::string stats_out;
    std::string background = "auto";
    bool keep_going = false;
    int parallelism = default_parallelism();
};

int cmd_build_db(const BuildDbArgs& a) {
    const auto files = list_pngs(a.masks_dir);
    if (files.empty()) throw ValidationError("no PNG masks in '" + a.masks_dir + "'");
    const auto background = parse_rgb(a.background);

    std::vector<std::optional<InstanceMask>> masks(files.size());
    std::vector<std::string> errors(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
            try {
                masks[i] = load_mask(files[i], background);
            } catch (const Error& e) {
                errors[i] = e.what();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const int threads = std::clamp<int>(a.parallelism, 1, static_cast<int>(files.size()));
        for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }

    std::vector<InstanceMask> valid;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (masks[i]) {
            valid.push_back(std::move(*masks[i]));
        } else {
            ++failures;
            std::cerr << (a.keep_going ? "warning: " : "error: ") << errors[i] << "\n";
        }
    }
    if (failures && !a.keep_going) {
        std::cerr << failures << " invalid mask(s); nothing written (use --keep-going to skip them)\n";
        return static_cast<int>(ErrorKind::validation);
    }
    if (valid.empty()) throw ValidationError("no valid masks to build a database from");

    const ShapeDatabase db = build_db(valid);
    save_db(db, a.out);
    const fs::path stats_path = a.stats_out.empty() ? fs::path(a.out).replace_extension(".stats.json") : fs::path(a.stats_out);
    write_text(stats_path, stats_to_json(db.stats).dump(2) + "\n");
    std::printf("%zu masks (%zu skipped), %zu shapes -> %s\n", valid.size(), failures, db.shapes.size(), a.out.c_str());
    print_table(db.stats);
    return 0;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
    std::string input;
    std::string background = "auto";
    std::string out;
};

int cmd_stats(const StatsArgs& a) {
    DatasetStats stats;
    if (fs::is_directory(a.input)) {
        const auto files = list_pngs(a.input);
        if (files.empty()) throw ValidationError("no PNG masks in '" + a.input + "'");
        std::vector<InstanceMask> masks;
        for (const auto& f : files) masks.push_back(load_mask(f, parse_rgb(a.background)));
        stats = compute_stats(masks);
    } else {
        stats = load_db(a.input).stats;
    }
    emit(stats_to_json(stats), a.out);
    if (!a.out.empty()) print_table(stats);
    return 0;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string config;
    std::string db;
    std::string out_dir;
    std::optional<int> count;
    std::optional<std::uint64_t> seed;
    std::string strategy;
    std::optional<int> parallelism;
    std::optional<int> width, height, cells, n_init, max_location_retries, max_color_retries;
    std::optional<double> mu, sigma, cell_size, max_coverage;
    bool counts_from_db = false;
    bool zero_occupied = false;
    bool dump_density = false;
};

int cmd_generate(const GenerateArgs& a) {
    RunConfig run;
    run.parallelism = default_parallelism();
    if (!a.config.empty()) run = load_run_config(a.config, run);
    if (!a.db.empty()) run.db = a.db;
    if (!a.out_dir.empty()) run.out_dir = a.out_dir;
    if (a.count) run.count = *a.count;
    if (a.parallelism) run.parallelism = *a.parallelism;
    SynthesisConfig& s = run.synthesis;
    if (a.seed) {
        s.seed = *a.seed;
        run.seed_given = true;
    }
    if (!run.seed_given) s.seed = std::random_device{}() | (std::uint64_t{std::random_device{}()} << 32);
    if (!a.strategy.empty()) s.strategy = parse_strategy(a.strategy);
    if (a.width) s.width = *a.width;
    if (a.height) s.height = *a.height;
    if (a.cells) s.cell_count = *a.cells;
    if (a.cell_size) s.sampler = SamplerParams::for_cell_size(*a.cell_size, s.sampler.n_init);
    if (a.n_init) s.sampler.n_init = *a.n_init;
    if (a.max_location_retries) s.max_location_retries = *a.max_location_retries;
    if (a.max_color_retries) s.max_color_retries = *a.max_color_retries;
    if (a.max_coverage) s.max_coverage = *a.max_coverage;
    if (a.zero_occupied) s.zero_occupied = true;
    if (a.dump_density) s.keep_density = true;
    if (run.db.empty()) throw ValidationError("no shape database given (--db or \"db\" in the config)");

    const ShapeDatabase db = load_db(run.db);
    if (a.counts_from_db) {
        if (!(db.stats.mu_n > 0.0)) throw ValidationError("database has no count statistics");
        s.mu_n = db.stats.mu_n;
        s.sigma_n = db.stats.sigma_n;
    }
    if (a.mu) s.mu_n = *a.mu;
    if (a.sigma) s.sigma_n = *a.sigma;
    s.validate();
    if (run.count < 1) throw ValidationError("--count must be at least 1");

    fs::create_directories(run.out_dir);
    std::printf("generating %d mask(s), base seed %llu, strategy %s, parallelism %d\n", run.count,
                static_cast<unsigned long long>(s.seed), to_string(s.strategy), run.parallelism);
    std::fflush(stdout);

    const auto t0 = std::chrono::steady_clock::now();
    const auto items = batch_generate(db, s, run.count, run.parallelism);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json run_echo = {{"db", run.db.string()}, {"count", run.count}, {"base_seed", s.seed}};
    int failures = 0;
    long long total_cells = 0, total_drawn = 0;
    double total_job_time = 0.0;
    for (int k = 0; k < run.count; ++k) {
        const BatchItem& item = items[static_cast<std::size_t>(k)];
        char stem[32];
        std::snprintf(stem, sizeof stem, "mask_%05d", k);
        if (!item.result) {
            ++failures;
            std::fprintf(stderr, "%s: error: %s\n", stem, item.error.c_str());
            continue;
        }
        const auto& [mask, rec] = *item.result;
        write_rgb_png(run.out_dir / (std::string(stem) + ".png"), mask.render());
        json sidecar = record_to_json(rec);
        sidecar["run"] = run_echo;
        sidecar["mask_file"] = std::string(stem) + ".png";
        write_text(run.out_dir / (std::string(stem) + ".json"), sidecar.dump(1) + "\n");
        if (rec.final_density) {
            write_float_raster(run.out_dir / (std::string(stem) + "_density.f32"), *rec.final_density);
            Grid<double> d(rec.final_density->width(), rec.final_density->height());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = (*rec.final_density)[i];
            write_rgb_png(run.out_dir / (std::string(stem) + "_density.png"), false_color(d));
        }
        total_cells += static_cast<long long>(rec.placed.size());
        total_drawn += rec.drawn_count;
        total_job_time += rec.elapsed_seconds;
        std::printf("%s: %zu/%d cells in %.3f s", stem, rec.placed.size(), rec.drawn_count, rec.elapsed_seconds);
        for (const auto& w : rec.warnings) std::printf(" [warning: %s]", w.c_str());
        std::printf("\n");
    }
    const int ok = run.count - failures;
    if (ok > 0)
        std::printf("%d mask(s), mean %.1f cells placed of %.1f drawn, %.3f s/mask per job, throughput %.3f masks/s "
                    "(wall %.2f s)\n",
                    ok, static_cast<double>(total_cells) / ok, static_cast<double>(total_drawn) / ok,
                    total_job_time / ok, ok / std::max(wall, 1e-9), wall);
    return failures ? static_cast<int>(ErrorKind::internal) : 0;
}

// ---------------------------------------------------------------------------

BinaryGrid load_binary(const fs::path& path, const std::optional<Rgb>& background) {
    return foreground(InstanceMask::from_image(read_rgb_png(path), background.value_or(Rgb{0, 0, 0})));
}

struct EvalArgs {
    std::string out;
    // dice
    std::string prediction, target;
    std::string background = "0,0,0";
    // ap
    std::string detections, ground_truth;
    double iou_threshold = 0.5;
    bool eleven_point = false;
    // instances
    std::string objectness, contour, from_mask, labels_out;
    InstanceParams inst;
    // adhesion
    std::vector<std::string> masks;
    double bin_width = 4.0;
};

int cmd_eval_dice(const EvalArgs& a) {
    const auto bg = parse_rgb(a.background);
    const double d = dice(load_binary(a.prediction, bg), load_binary(a.target, bg));
    emit({{"metric", "dice"}, {"prediction", a.prediction}, {"target", a.target}, {"dice", d}}, a.out);
    return 0;
}

int cmd_eval_ap(const EvalArgs& a) {
    const auto dets = detections_from_json(read_json(a.detections));
    std::vector<BoxF> gt;
    for (const Detection& d : detections_from_json(read_json(a.ground_truth))) gt.push_back(d.bbox);
    const ApResult r = match_and_ap(dets, gt, a.iou_threshold,
                                    a.eleven_point ? ApInterpolation::eleven_point : ApInterpolation::all_points);
    json report = ap_to_json(r);
    report["metric"] = "ap";
    report["iou_threshold"] = a.iou_threshold;
    report["interpolation"] = a.eleven_point ? "11-point" : "all-points";
    emit(report, a.out);
    return 0;
}

int cmd_eval_instances(const EvalArgs& a) {
    FloatImage objectness, contour;
    if (!a.from_mask.empty()) {
        auto maps = instance_maps(load_mask(a.from_mask, parse_rgb(a.background)), a.inst.contour_width);
        objectness = std::move(maps.objectness);
        contour = std::move(maps.contour);
    } else {
        if (a.objectness.empty() || a.contour.empty())
            throw ValidationError("eval instances needs --objectness and --contour, or --from-mask");
        objectness = read_unit_map(a.objectness);
        contour = read_unit_map(a.contour);
    }
    const InstanceExtraction ex = extract_instances(objectness, contour, a.inst);
    json comps = json::array();
    std::vector<Detection> dets;
    for (const auto& c : ex.components) {
        comps.push_back({{"id", c.id}, {"bbox", box_to_json(c.bbox)}, {"area", c.area}});
        dets.push_back({BoxF::from(c.bbox), 1.0});
    }
    json report = {{"metric", "instances"},
                   {"count", ex.components.size()},
                   {"components", comps},
                   {"params",
                    {{"objectness_threshold", a.inst.objectness_threshold},
                     {"contour_threshold", a.inst.contour_threshold},
                     {"min_blob_size", a.inst.min_blob_size},
                     {"contour_width", a.inst.contour_width}}}};
    if (!a.ground_truth.empty()) {
        std::vector<BoxF> gt;
        for (const Detection& d : detections_from_json(read_json(a.ground_truth))) gt.push_back(d.bbox);
        report["ap"] = ap_to_json(match_and_ap(dets, gt, a.iou_threshold));
    }
    if (!a.labels_out.empty()) {
        // Labels as 16-bit ids split over R (high) and G (low).
        RgbImage img(ex.labels.width(), ex.labels.height());
        for (std::size_t i = 0; i < img.size(); ++i)
            img[i] = {static_cast<std::uint8_t>(ex.labels[i] >> 8), static_cast<std::uint8_t>(ex.labels[i]), 0};
        write_rgb_png(a.labels_out, img);
    }
    emit(report, a.out);
    return 0;
}

std::vector<fs::path> expand_masks(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (auto& p : list_pngs(in))
                if (p.stem().string().find("_density") == std::string::npos) out.push_back(p);
        } else {
            out.emplace_back(in);
        }
    }
    if (out.empty()) throw ValidationError("no masks given");
    return out;
}

int cmd_eval_adhesion(const EvalArgs& a) {
    json per = json::array();
    std::vector<double> touch;
    for (const auto& path : expand_masks(a.masks)) {
        const AdhesionStats st = adhesion_stats(load_mask(path, parse_rgb("auto")), a.bin_width);
        json j = adhesion_to_json(st);
        j["mask"] = path.string();
        per.push_back(std::move(j));
        touch.push_back(st.touch_fraction);
    }
    const SampleSummary s = summarize(touch);
    emit({{"metric", "adhesion"},
          {"masks", per},
          {"touch_fraction", {{"n", s.n}, {"mean", s.mean}, {"std", s.stddev}, {"std_error", s.std_error}}}},
         a.out);
    return 0;
}

struct CompareArgs {
    std::vector<std::string> a, b;
    std::string label_a = "a", label_b = "b";
    std::string out;
    double alpha = 0.05;
};

int cmd_compare(const CompareArgs& c) {
    auto collect = [](const std::vector<std::string>& in, std::vector<double>& touch, std::vector<double>& nn,
                      std::vector<double>& cluster) {
        for (const auto& p : expand_masks(in)) {
            const AdhesionStats st = adhesion_stats(load_mask(p, std::nullopt));
            touch.push_back(st.touch_fraction);
            double sum = 0;
            for (double d : st.nn_center_distances) sum += d;
            nn.push_back(st.nn_center_distances.empty() ? 0.0 : sum / st.nn_center_distances.size());
            cluster.push_back(st.cluster_sizes.empty() ? 0.0 : static_cast<double>(st.n_cells) / st.cluster_sizes.size());
        }
    };
    std::vector<double> ta, tb, na, nb, ca, cb;
    collect(c.a, ta, na, ca);
    collect(c.b, tb, nb, cb);
    const OneSidedTest t = welch_greater(ta, tb);
    const SampleSummary sna = summarize(na), snb = summarize(nb), sca = summarize(ca), scb = summarize(cb);

    std::printf("%-28s %16s %16s\n", "", c.label_a.c_str(), c.label_b.c_str());
    std::printf("%-28s %16zu %16zu\n", "masks", t.a.n, t.b.n);
    std::printf("%-28s %8.4f+-%-7.4f %8.4f+-%-7.4f\n", "touch fraction (mean+-se)", t.a.mean, t.a.std_error, t.b.mean, t.b.std_error);
    std::printf("%-28s %8.2f+-%-7.2f %8.2f+-%-7.2f\n", "nn center distance (px)", sna.mean, sna.std_error, snb.mean, snb.std_error);
    std::printf("%-28s %8.2f+-%-7.2f %8.2f+-%-7.2f\n", "mean cluster size", sca.mean, sca.std_error, scb.mean, scb.std_error);
    const bool greater = t.a.mean > t.b.mean;
    const bool significant = t.p_value < c.alpha;
    std::printf("one-sided Welch t = %.3f, dof = %.1f, p = %.3g -> %s\n", t.t, t.dof, t.p_value,
                significant ? "touch fraction of a is greater (significant)"
                            : (greater ? "a greater, not significant" : "a not greater"));

    if (!c.out.empty()) {
        auto sj = [](const SampleSummary& s) {
            return json{{"n", s.n}, {"mean", s.mean}, {"std", s.stddev}, {"std_error", s.std_error}};
        };
        emit({{"a", {{"label", c.label_a}, {"touch_fraction", sj(t.a)}, {"nn_distance", sj(sna)}, {"cluster_size", sj(sca)}}},
              {"b", {{"label", c.label_b}, {"touch_fraction", sj(t.b)}, {"nn_distance", sj(snb)}, {"cluster_size", sj(scb)}}},
              {"test", {{"kind", "welch-one-sided"}, {"t", t.t}, {"dof", t.dof}, {"p_value", t.p_value}, {"alpha", c.alpha},
                        {"a_mean_greater", greater}, {"significant", significant}}}},
             c.out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hemogen: synthetic blood-cell instance masks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hemogen 0.1.0");

    BuildDbArgs build;
    auto* build_cmd = app.add_subcommand("build-db", "Extract cell shapes from annotated masks into a database");
    build_cmd->add_option("masks_dir", build.masks_dir, "Directory of RGB PNG instance masks")->required();
    build_cmd->add_option("-o,--out", build.out, "Database file to write")->capture_default_str();
    build_cmd->add_option("--stats-out", build.stats_out, "Stats JSON (default: <out>.stats.json)");
    build_cmd->add_option("--background", build.background, "Background color R,G,B or 'auto' (most frequent)")
        ->capture_default_str();
    build_cmd->add_flag("--keep-going", build.keep_going, "Skip invalid masks instead of failing");
    build_cmd->add_option("-j,--parallelism", build.parallelism, "Files ingested in parallel")->capture_default_str();

    StatsArgs stats;
    auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics of a database file or a mask directory");
    stats_cmd->add_option("input", stats.input, "Database file or mask directory")->required();
    stats_cmd->add_option("--background", stats.background, "Background color for mask directories");
    stats_cmd->add_option("--out", stats.out, "Write JSON here instead of stdout");

    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "Synthesize instance masks with JSON sidecars");
    gen_cmd->add_option("-c,--config", gen.config, "JSON run config; flags override its keys");
    gen_cmd->add_option("--db", gen.db, "Shape database");
    gen_cmd->add_option("-o,--out", gen.out_dir, "Output directory");
    gen_cmd->add_option("-n,--count", gen.count, "Number of masks");
    gen_cmd->add_option("--seed", gen.seed, "Base seed; job k uses seed + k (random if absent)");
    gen_cmd->add_option("--strategy", gen.strategy, "adhesion | uniform-random");
    gen_cmd->add_option("-j,--parallelism", gen.parallelism, "Concurrent jobs (default $HEMOGEN_THREADS or 1)");
    gen_cmd->add_option("--width", gen.width, "Mask width");
    gen_cmd->add_option("--height", gen.height, "Mask height");
    gen_cmd->add_option("--cells", gen.cells, "Force the cell count per mask");
    gen_cmd->add_option("--mu", gen.mu, "Mean cells per mask");
    gen_cmd->add_option("--sigma", gen.sigma, "Std of cells per mask");
    gen_cmd->add_flag("--counts-from-db", gen.counts_from_db, "Take the count distribution from the database stats");
    gen_cmd->add_option("--cell-size", gen.cell_size, "Cell size in px (sigma and support radius follow)");
    gen_cmd->add_option("--n-init", gen.n_init, "Uniformly placed warm-up cells");
    gen_cmd->add_option("--max-location-retries", gen.max_location_retries, "Locations tried per shape");
    gen_cmd->add_option("--max-color-retries", gen.max_color_retries, "Color exhaustions tolerated per shape");
    gen_cmd->add_option("--max-coverage", gen.max_coverage, "Coverage fraction capping the drawn count");
    gen_cmd->add_flag("--zero-occupied", gen.zero_occupied, "Also zero the density under placed cells");
    gen_cmd->add_flag("--dump-density", gen.dump_density, "Write the final density (.f32 and false-color PNG)");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluation metrics");
    eval_cmd->require_subcommand(1);
    auto* dice_cmd = eval_cmd->add_subcommand("dice", "Dice score between two masks (non-background = foreground)");
    dice_cmd->add_option("prediction", ev.prediction)->required();
    dice_cmd->add_option("target", ev.target)->required();
    dice_cmd->add_option("--background", ev.background, "Background color R,G,B")->capture_default_str();
    dice_cmd->add_option("--out", ev.out);

    auto* ap_cmd = eval_cmd->add_subcommand("ap", "Average precision of detections against ground truth boxes");
    ap_cmd->add_option("--detections", ev.detections, "Detections JSON (or sidecar)")->required();
    ap_cmd->add_option("--gt", ev.ground_truth, "Ground truth JSON (or sidecar)")->required();
    ap_cmd->add_option("--iou", ev.iou_threshold, "IoU threshold")->capture_default_str();
    ap_cmd->add_flag("--eleven-point", ev.eleven_point, "11-point interpolation instead of all points");
    ap_cmd->add_option("--out", ev.out);

    auto* inst_cmd = eval_cmd->add_subcommand("instances", "Instances from objectness + contour maps");
    inst_cmd->add_option("--objectness", ev.objectness, "Objectness map (8-bit PNG or .f32 raster)");
    inst_cmd->add_option("--contour", ev.contour, "Contour map (8-bit PNG or .f32 raster)");
    inst_cmd->add_option("--from-mask", ev.from_mask, "Derive both maps from an instance mask instead");
    inst_cmd->add_option("--gt", ev.ground_truth, "Ground truth boxes; adds AP to the report");
    inst_cmd->add_option("--iou", ev.iou_threshold, "IoU threshold")->capture_default_str();
    inst_cmd->add_option("--tau-o", ev.inst.objectness_threshold, "Objectness threshold")->capture_default_str();
    inst_cmd->add_option("--tau-c", ev.inst.contour_threshold, "Contour threshold")->capture_default_str();
    inst_cmd->add_option("--min-blob", ev.inst.min_blob_size, "Minimum blob size (px)")->capture_default_str();
    inst_cmd->add_option("--contour-width", ev.inst.contour_width, "Contour band width (px)")->capture_default_str();
    inst_cmd->add_option("--labels-out", ev.labels_out, "Write the label image (id = R*256 + G)");
    inst_cmd->add_option("--background", ev.background, "Background color for --from-mask")->capture_default_str();
    inst_cmd->add_option("--out", ev.out);

    auto* adh_cmd = eval_cmd->add_subcommand("adhesion", "Touching, nearest-neighbor and cluster statistics");
    adh_cmd->add_option("masks", ev.masks, "Mask files or directories")->required();
    adh_cmd->add_option("--bin-width", ev.bin_width, "Nearest-neighbor histogram bin (px)")->capture_default_str();
    adh_cmd->add_option("--out", ev.out);

    CompareArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare-distribution", "Compare spatial statistics of two mask sets");
    cmp_cmd->add_option("--a", cmp.a, "Masks or directories of set a")->required();
    cmp_cmd->add_option("--b", cmp.b, "Masks or directories of set b")->required();
    cmp_cmd->add_option("--label-a", cmp.label_a);
    cmp_cmd->add_option("--label-b", cmp.label_b);
    cmp_cmd->add_option("--alpha", cmp.alpha, "Significance level")->capture_default_str();
    cmp_cmd->add_option("--out", cmp.out, "Also write the comparison as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorKind::validation);
    }

    try {
        if (*build_cmd) return cmd_build_db(build);
        if (*stats_cmd) return cmd_stats(stats);
        if (*gen_cmd) return cmd_generate(gen);
        if (*dice_cmd) return cmd_eval_dice(ev);
        if (*ap_cmd) return cmd_eval_ap(ev);
        if (*inst_cmd) return cmd_eval_instances(ev);
        if (*adh_cmd) return cmd_eval_adhesion(ev);
        if (*cmp_cmd) return cmd_compare(cmp);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::io);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::internal);
    }
    return static_cast<int>(ErrorKind::internal);
}
