#pragma once

// Bitmap run-length coding and base64 for the shape database file.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hemogen/errors.hpp"
#include "hemogen/grid.hpp"

namespace hemogen::codec {

inline std::string base64_encode(const std::vector<std::uint8_t>& in) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < in.size(); i += 3) {
        const std::uint32_t v = (std::uint32_t{in[i]} << 16) | (std::uint32_t{in[i + 1]} << 8) | in[i + 2];
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (const std::size_t rest = in.size() - i; rest > 0) {
        std::uint32_t v = std::uint32_t{in[i]} << 16;
        if (rest == 2) v |= std::uint32_t{in[i + 1]} << 8;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view in) {
    static const std::array<int, 256> kTable = [] {
        std::array<int, 256> t{};
        t.fill(-1);
        const std::string_view a = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        for (std::size_t i = 0; i < a.size(); ++i) t[static_cast<unsigned char>(a[i])] = static_cast<int>(i);
        return t;
    }();
    if (in.size() % 4 != 0) throw ValidationError("base64 length is not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(in.size() / 4 * 3);
    for (std::size_t i = 0; i < in.size(); i += 4) {
        int pad = 0;
        std::uint32_t v = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            const char c = in[i + k];
            int d;
            if (c == '=' && i + 4 == in.size() && k >= 2) {
                d = 0;
                ++pad;
            } else {
                d = kTable[static_cast<unsigned char>(c)];
                if (d < 0 || pad) throw ValidationError("invalid base64 character");
            }
            v = (v << 6) | static_cast<std::uint32_t>(d);
        }
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

/// Alternating run lengths over the row-major bitmap, starting with a (possibly
/// empty) run of zeros; each run is an unsigned LEB128 varint.
inline std::vector<std::uint8_t> rle_encode(const BinaryGrid& g) {
    std::vector<std::uint8_t> out;
    auto put = [&](std::uint64_t n) {
        do {
            std::uint8_t byte = n & 0x7f;
            n >>= 7;
            if (n) byte |= 0x80;
            out.push_back(byte);
        } while (n);
    };
    std::uint8_t current = 0;
    std::uint64_t run = 0;
    for (std::uint8_t v : g.values()) {
        const std::uint8_t bit = v ? 1 : 0;
        if (bit != current) {
            put(run);
            run = 0;
            current = bit;
        }
        ++run;
    }
    put(run);
    return out;
}

inline BinaryGrid rle_decode(const std::vector<std::uint8_t>& bytes, int width, int height) {
    BinaryGrid g(width, height, 0);
    std::size_t pos = 0, pixel = 0;
    std::uint8_t current = 0;
    while (pos < bytes.size()) {
        std::uint64_t n = 0;
        int shift = 0;
        for (;;) {
            if (pos >= bytes.size() || shift > 56) throw ValidationError("truncated run-length data");
            const std::uint8_t b = bytes[pos++];
            n |= std::uint64_t{b & 0x7fu} << shift;
            shift += 7;
            if (!(b & 0x80)) break;
        }
        if (n > g.size() - pixel) throw ValidationError("run-length data overflows bitmap");
        for (std::uint64_t k = 0; k < n; ++k) g[pixel++] = current;
        current ^= 1;
    }
    if (pixel != g.size()) throw ValidationError("run-length data does not cover bitmap");
    return g;
}

}  // namespace hemogen::codec
