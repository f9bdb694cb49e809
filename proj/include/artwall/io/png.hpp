#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <zlib.h>

#include "artwall/io_util.hpp"

namespace artwall {

// Minimal PNG writer (8-bit grayscale or RGB) for human preview images.
// Training data never goes through this path.
namespace detail_png {

inline void put_u32be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

inline void chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& data) {
    put_u32be(out, static_cast<std::uint32_t>(data.size()));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc =
        ::crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
    put_u32be(out, static_cast<std::uint32_t>(crc));
}

} // namespace detail_png

// pixels: row-major, top row first; channels = 1 (gray) or 3 (RGB).
inline void write_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      int width, int height, int channels) {
    if (channels != 1 && channels != 3) throw std::invalid_argument("png: 1 or 3 channels");
    if (pixels.size() != static_cast<size_t>(width) * height * channels)
        throw std::invalid_argument("png: pixel buffer size mismatch");

    std::vector<unsigned char> raw;
    raw.reserve(static_cast<size_t>(height) * (1 + static_cast<size_t>(width) * channels));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);  // filter: none
        const auto* row = pixels.data() + static_cast<size_t>(y) * width * channels;
        raw.insert(raw.end(), row, row + static_cast<size_t>(width) * channels);
    }

    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    comp.resize(comp_len);

    std::vector<unsigned char> out;
    const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.insert(out.end(), sig, sig + 8);

    std::vector<unsigned char> ihdr;
    detail_png::put_u32be(ihdr, static_cast<std::uint32_t>(width));
    detail_png::put_u32be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);                                  // bit depth
    ihdr.push_back(channels == 3 ? 2 : 0);              // color type
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    detail_png::chunk(out, "IHDR", ihdr);
    detail_png::chunk(out, "IDAT", comp);
    detail_png::chunk(out, "IEND", {});

    write_file_bytes(path, out.data(), out.size());
}

} // namespace artwall
