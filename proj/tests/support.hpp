#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hemogen/instance_mask.hpp"

namespace hemogen::testing {

/// Mask from ASCII rows: '.' is background, any other character a color.
inline InstanceMask ascii_mask(const std::vector<std::string>& rows, std::string id = "ascii") {
    const int h = static_cast<int>(rows.size()), w = static_cast<int>(rows.front().size());
    RgbImage img(w, h, Rgb{0, 0, 0});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const char c = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
            if (c != '.') img(x, y) = {static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(255 - c), 40};
        }
    }
    return InstanceMask::from_image(img, Rgb{0, 0, 0}, std::move(id));
}

inline BinaryGrid ascii_bitmap(const std::vector<std::string>& rows) {
    const int h = static_cast<int>(rows.size()), w = static_cast<int>(rows.front().size());
    BinaryGrid g(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) g(x, y) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] != '.';
    return g;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("hemogen_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace hemogen::testing
