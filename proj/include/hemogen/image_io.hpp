#pragma once

// PNG and raw float raster I/O. Requires libpng.

#include <png.h>
#include <csetjmp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "hemogen/errors.hpp"
#include "hemogen/grid.hpp"

namespace hemogen {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    std::uint32_t packed() const { return (std::uint32_t{r} << 16) | (std::uint32_t{g} << 8) | b; }
    static Rgb unpack(std::uint32_t v) {
        return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
                static_cast<std::uint8_t>(v)};
    }

    friend bool operator==(const Rgb&, const Rgb&) = default;
    friend auto operator<=>(const Rgb& a, const Rgb& b) { return a.packed() <=> b.packed(); }
};

using RgbImage = Grid<Rgb>;
using GrayImage = Grid<std::uint8_t>;
using FloatImage = Grid<float>;

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    return f;
}

inline void png_warning_handler(png_structp, png_const_charp) {}

/// Decodes any PNG into 8-bit interleaved samples with `channels` channels (1 or 3).
inline std::vector<std::uint8_t> read_png(const std::filesystem::path& path, int channels, int& width,
                                          int& height) {
    FilePtr file = open_file(path, "rb");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError("'" + path.string() + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_handler);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_read_struct(png, info, nullptr); }
    } guard{&png, &info};
    if (!info) throw IoError("png_create_info_struct failed");

    // Everything libpng may longjmp over is allocated before setjmp.
    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows;
    bool layout_ok = true;
    if (setjmp(png_jmpbuf(png))) throw IoError("failed to decode '" + path.string() + "'");

    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if ((color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);

    const bool src_gray = !(color & PNG_COLOR_MASK_COLOR) && color != PNG_COLOR_TYPE_PALETTE;
    if (channels == 3 && src_gray) png_set_gray_to_rgb(png);
    if (channels == 1 && !src_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    layout_ok = rowbytes == static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
    if (layout_ok) {
        out.resize(rowbytes * static_cast<std::size_t>(height));
        rows.resize(static_cast<std::size_t>(height));
        for (int y = 0; y < height; ++y) rows[static_cast<std::size_t>(y)] = out.data() + rowbytes * y;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    if (!layout_ok) throw IoError("unsupported PNG layout in '" + path.string() + "'");
    return out;
}

inline void write_png(const std::filesystem::path& path, const std::uint8_t* data, int width, int height,
                      int channels) {
    FilePtr file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_handler);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_write_struct(png, info); }
    } guard{&png, &info};
    if (!info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(png))) throw IoError("failed to encode '" + path.string() + "'");

    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // Fixed encoder settings keep the byte stream reproducible.
    png_set_compression_level(png, 6);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
    png_write_info(png, info);
    const std::size_t rowbytes = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(data + rowbytes * static_cast<std::size_t>(y)));
    png_write_end(png, nullptr);
    if (std::fflush(file.get()) != 0) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline RgbImage read_rgb_png(const std::filesystem::path& path) {
    int w = 0, h = 0;
    const auto bytes = detail::read_png(path, 3, w, h);
    RgbImage img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = {bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]};
    return img;
}

inline GrayImage read_gray_png(const std::filesystem::path& path) {
    int w = 0, h = 0;
    auto bytes = detail::read_png(path, 1, w, h);
    GrayImage img(w, h);
    std::copy(bytes.begin(), bytes.end(), img.values().begin());
    return img;
}

inline void write_rgb_png(const std::filesystem::path& path, const RgbImage& img) {
    std::vector<std::uint8_t> bytes(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i) {
        bytes[3 * i] = img[i].r;
        bytes[3 * i + 1] = img[i].g;
        bytes[3 * i + 2] = img[i].b;
    }
    detail::write_png(path, bytes.data(), img.width(), img.height(), 3);
}

inline void write_gray_png(const std::filesystem::path& path, const GrayImage& img) {
    detail::write_png(path, img.values().data(), img.width(), img.height(), 1);
}

// Float raster: "HGF1" magic, uint32 width, uint32 height (little endian), then
// width*height little-endian IEEE-754 float32 samples in row-major order.
inline constexpr std::array<char, 4> kFloatRasterMagic{'H', 'G', 'F', '1'};

inline void write_float_raster(const std::filesystem::path& path, const FloatImage& img) {
    static_assert(std::endian::native == std::endian::little, "float raster writer assumes little endian");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "'");
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(img.width()), static_cast<std::uint32_t>(img.height())};
    out.write(kFloatRasterMagic.data(), 4);
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    out.write(reinterpret_cast<const char*>(img.values().data()),
              static_cast<std::streamsize>(img.size() * sizeof(float)));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline FloatImage read_float_raster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::array<char, 4> magic{};
    std::uint32_t dims[2] = {0, 0};
    in.read(magic.data(), 4);
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in || magic != kFloatRasterMagic) throw IoError("'" + path.string() + "' is not a float raster");
    if (dims[0] == 0 || dims[1] == 0 || dims[0] > 1u << 16 || dims[1] > 1u << 16)
        throw IoError("bad float raster dimensions in '" + path.string() + "'");
    FloatImage img(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
    in.read(reinterpret_cast<char*>(img.values().data()), static_cast<std::streamsize>(img.size() * sizeof(float)));
    if (!in) throw IoError("truncated float raster '" + path.string() + "'");
    return img;
}

/// Loads a [0,1] map from either an 8-bit grayscale PNG (rescaled by 1/255)
/// or a float raster, chosen by file signature.
inline FloatImage read_unit_map(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open '" + path.string() + "'");
    std::array<char, 4> magic{};
    probe.read(magic.data(), 4);
    if (probe && magic == kFloatRasterMagic) return read_float_raster(path);
    const GrayImage gray = read_gray_png(path);
    FloatImage out(gray.width(), gray.height());
    for (std::size_t i = 0; i < gray.size(); ++i) out[i] = static_cast<float>(gray[i]) / 255.0f;
    return out;
}

}  // namespace hemogen
