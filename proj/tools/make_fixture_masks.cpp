// Writes annotation-style instance masks made of elliptical cells, for trying
// out the pipeline without real annotations.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hemogen/fixtures.hpp"
#include "hemogen/image_io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Write fixture instance masks with elliptical cells"};
    std::string out_dir;
    int count = 4, width = 640, height = 400, cells = 60;
    std::uint64_t seed = 1;
    app.add_option("out_dir", out_dir, "Output directory")->required();
    app.add_option("-n,--count", count, "Number of masks")->capture_default_str();
    app.add_option("--width", width)->capture_default_str();
    app.add_option("--height", height)->capture_default_str();
    app.add_option("--cells", cells, "Cells per mask (mask k gets cells + k)")->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        for (int k = 0; k < count; ++k) {
            const auto mask = hemogen::fixtures::annotated_mask(width, height, cells + k, seed + k);
            char name[32];
            std::snprintf(name, sizeof name, "fixture_%03d.png", k);
            hemogen::write_rgb_png(std::filesystem::path(out_dir) / name, mask.render());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
